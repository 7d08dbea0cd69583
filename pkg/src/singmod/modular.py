"""The j-function at arbitrary precision, Hecke cosets, modular polynomial values.

j is evaluated from its q-expansion (q = e^{2 pi i z}) after reduction to
the standard fundamental domain F, where |q| <= e^{-pi sqrt(3)} makes the
series decay geometrically.  The integer coefficients come from
E_4^3 / Delta, with Delta generated through the eighth power of Jacobi's
eta^3 series; they are computed once and extended on demand.

Coset convention: Gamma_m is ALL integer matrices of determinant m,
imprimitive ones included, so that the scalar matrix sqrt(m) I sits in
Gamma_m when m is a perfect square and phi_m(X, X) vanishes identically
there.  Consequently phi_m here equals the product of the classical
primitive modular polynomials Phi_{m/e^2} over e^2 | m; for squarefree m
the two notions agree.
"""

from __future__ import annotations

import cmath
import math
import threading
from dataclasses import dataclass

import mpmath as mp

from .numerics import (
    GUARD_BITS,
    PrecisionContext,
    PrecisionError,
    integer_recognize,
    arccosh,
)
from .quadforms import CMPoint, QuadForm, cm_point, enumerate_reduced, reduce_form

_FOUR_PI = 4 * math.pi

_jcoeff_lock = threading.Lock()
_jcoeffs: list[int] = []  # c_{-1}, c_0, c_1, ... with c_{-1} = 1, c_0 = 744

_jvalue_lock = threading.Lock()
_jvalue_cache: dict[tuple[int, int, int, int], mp.mpf] = {}


def _series_mul(a: list[int], b: list[int], n: int) -> list[int]:
    out = [0] * n
    for i, ai in enumerate(a[:n]):
        if ai:
            top = n - i
            for j, bj in enumerate(b[:top]):
                if bj:
                    out[i + j] += ai * bj
    return out


def _compute_jcoeffs(count: int) -> list[int]:
    """First `count` coefficients of j = 1/q + 744 + 196884 q + ..."""
    n = count + 1
    eta3 = [0] * n
    k = 0
    while k * (k + 1) // 2 < n:
        eta3[k * (k + 1) // 2] = (-1) ** k * (2 * k + 1)
        k += 1
    delta_over_q = _series_mul(eta3, eta3, n)
    delta_over_q = _series_mul(delta_over_q, delta_over_q, n)
    delta_over_q = _series_mul(delta_over_q, delta_over_q, n)

    sigma3 = [0] * n
    for a in range(1, n):
        cube = a * a * a
        for mult in range(a, n, a):
            sigma3[mult] += cube
    e4 = [1] + [240 * sigma3[m] for m in range(1, n)]
    e4_cubed = _series_mul(_series_mul(e4, e4, n), e4, n)

    # j*q = E4^3 / (Delta/q), exact division since Delta/q starts with 1
    coeffs = [0] * n
    for i in range(n):
        acc = e4_cubed[i]
        for m in range(i):
            acc -= coeffs[m] * delta_over_q[i - m]
        coeffs[i] = acc
    return coeffs[:count]


def j_q_coefficients(count: int) -> list[int]:
    """Coefficients c_{-1}..c_{count-2} of the j q-expansion (cached)."""
    with _jcoeff_lock:
        if len(_jcoeffs) < count:
            fresh = _compute_jcoeffs(max(count, 2 * len(_jcoeffs), 64))
            del _jcoeffs[:]
            _jcoeffs.extend(fresh)
        return _jcoeffs[:count]


def seed_j_coefficients(coeffs: list[int]) -> None:
    """Install externally cached coefficients (used by the CLI disk cache)."""
    with _jcoeff_lock:
        if len(coeffs) > len(_jcoeffs):
            del _jcoeffs[:]
            _jcoeffs.extend(coeffs)


def known_j_coefficients() -> list[int]:
    with _jcoeff_lock:
        return list(_jcoeffs)


def fd_reduce(z, max_steps: int = 10_000):
    """Move z into the fundamental domain F; return (z', gamma) with z' = gamma z.

    gamma is returned as the integer tuple (a, b, c, d).  Terminates because
    the imaginary part strictly increases on every inversion step.
    """
    z = mp.mpc(z)
    if not mp.im(z) > 0:
        raise ValueError("fd_reduce needs a point in the upper half plane")
    a, b, c, d = 1, 0, 0, 1
    for _ in range(max_steps):
        n = int(mp.nint(mp.re(z)))
        if n:
            z -= n
            a, b = a - n * c, b - n * d
        norm = mp.re(z) ** 2 + mp.im(z) ** 2
        if norm < 1:
            z = -1 / z
            a, b, c, d = -c, -d, a, b
            continue
        return z, (a, b, c, d)
    raise PrecisionError("fundamental-domain reduction did not terminate")


def _terms_needed(lam: float, log_tail: float) -> int:
    """Smallest n with e^{4 pi sqrt(n)} e^{-lam n} below e^{log_tail}.

    Uses the classical bound |c_n| <= e^{4 pi sqrt(n)} for the j coefficients;
    lam = -log|q| >= pi sqrt(3) after reduction to F.
    """
    big_l = -log_tail
    x = (_FOUR_PI + math.sqrt(_FOUR_PI**2 + 4 * lam * (big_l + lam))) / (2 * lam)
    return max(int(math.ceil(x * x)) + 4, 8)


def _j_log_tail_rel(ctx: PrecisionContext, prec: int) -> float:
    # natural log of the truncation target, relative to the leading 1/q term;
    # never looser than the context budget and always tightened along with the
    # mantissa.  Kept in log form so huge retry precisions cannot underflow.
    return min(math.log(ctx.series_tail_bound), -(prec + 8) * math.log(2))


def _j_from_q(q, n_terms: int):
    coeffs = j_q_coefficients(n_terms)
    acc = mp.mpc(0)
    for c in reversed(coeffs[1:]):
        acc = acc * q + c
    return acc + coeffs[0] / q


def j_eval(z, ctx: PrecisionContext):
    """j(z) for a CMPoint (exact path, cached) or any upper-half-plane number."""
    prec = ctx.mantissa_bits + GUARD_BITS
    if isinstance(z, CMPoint):
        red = reduce_form(z.form)
        key = (red.a, red.b, z.d, prec)
        with _jvalue_lock:
            if key in _jvalue_cache:
                return _jvalue_cache[key]
        with mp.workprec(prec):
            zz = CMPoint(red.a, red.b, z.d).mpc(mp)
            lam = 2 * math.pi * float(mp.im(zz))
            n_terms = _terms_needed(lam, _j_log_tail_rel(ctx, prec) - lam)
            q = mp.exp(2j * mp.pi * zz)
            value = _j_from_q(q, n_terms)
            # CM values are real algebraic integers only for h=1; keep complex
            value = mp.mpc(value)
        with _jvalue_lock:
            _jvalue_cache[key] = value
        return value
    with mp.workprec(prec):
        zz, _ = fd_reduce(mp.mpc(z))
        lam = 2 * math.pi * float(mp.im(zz))
        n_terms = _terms_needed(lam, _j_log_tail_rel(ctx, prec) - lam)
        q = mp.exp(2j * mp.pi * zz)
        return _j_from_q(q, n_terms)


def j_relative_error(ctx: PrecisionContext):
    """Conservative relative error of a single j_eval at the context precision.

    Returned as an mpf so very high retry precisions do not underflow.
    """
    prec = ctx.mantissa_bits + GUARD_BITS
    tail = mp.exp(mp.mpf(_j_log_tail_rel(ctx, prec)))
    return tail + mp.mpf(2) ** (-(prec - 12))


@dataclass(frozen=True)
class HeckeCosetSet:
    """Upper-triangular representatives (a, b, d): a d = m, 0 <= b < d."""

    m: int
    reps: tuple[tuple[int, int, int], ...]

    def __len__(self):
        return len(self.reps)


def hecke_cosets(m: int) -> HeckeCosetSet:
    if m < 1:
        raise ValueError("m must be a positive integer")
    reps = []
    for a in range(1, m + 1):
        if m % a:
            continue
        d = m // a
        for b in range(d):
            reps.append((a, b, d))
    return HeckeCosetSet(m=m, reps=tuple(reps))


def coset_apply(coset: tuple[int, int, int], z):
    """(a z + b) / d, exactly for CMPoints, numerically otherwise."""
    a, b, d = coset
    if isinstance(z, CMPoint):
        # z root of A z^2 + B z + C; w = (a z + b)/d is a root of the integral
        # form (A d^2, (B a - 2 A b) d, A b^2 - B b d ... ) -- derived by
        # substituting z = (d w - b)/a into the quadratic of z.
        form = z.form
        aa, bb, cc = form.a, form.b, form.c
        # substitute z = (d w - b)/a: aa (d w - b)^2 + bb a (d w - b) + cc a^2 = 0
        a2 = aa * d * d
        b2 = (-2 * aa * b + bb * a) * d
        c2 = aa * b * b - bb * a * b + cc * a * a
        g = math.gcd(math.gcd(a2, abs(b2)), abs(c2)) if c2 else math.gcd(a2, abs(b2))
        if g > 1:
            a2, b2, c2 = a2 // g, b2 // g, c2 // g
        w = CMPoint(a2, b2, b2 * b2 - 4 * a2 * c2)
        return w
    return (a * z + b) / d


@dataclass(frozen=True)
class ModPolyValue:
    """phi_m(j(z1), j(z2)) together with an accumulated error estimate."""

    value: mp.mpc
    rel_error: float
    zero_cosets: tuple[tuple[int, int, int], ...]

    @property
    def is_zero(self) -> bool:
        return bool(self.zero_cosets)

    def log_abs(self):
        if self.is_zero:
            raise ZeroDivisionError("modular polynomial value is numerically zero")
        return mp.log(abs(self.value))


def modpoly_eval(m: int, z1, z2, ctx: PrecisionContext) -> ModPolyValue:
    """Product over Hecke cosets of (j(z1) - j((a z2 + b)/d)).

    A factor is flagged zero only when its modulus falls below the factor's
    accumulated error bound; otherwise the nonzero value stands.
    """
    cosets = hecke_cosets(m)
    prec = ctx.mantissa_bits + GUARD_BITS
    eps_j = j_relative_error(ctx)
    with mp.workprec(prec):
        j1 = j_eval(z1, ctx)
        product = mp.mpc(1)
        rel_error = 0.0
        zero_cosets = []
        for coset in cosets.reps:
            w = coset_apply(coset, z2)
            jw = j_eval(w, ctx)
            factor = j1 - jw
            abs_bound = (abs(j1) + abs(jw)) * eps_j
            if abs(factor) <= abs_bound:
                zero_cosets.append(coset)
                continue
            rel_error += float(abs_bound / abs(factor)) + 2.0 ** (-(prec - 4))
            product *= factor
        return ModPolyValue(
            value=product,
            rel_error=rel_error,
            zero_cosets=tuple(zero_cosets),
        )


def classpoly(d: int, ctx: PrecisionContext) -> list[int]:
    """Integer coefficients (ascending) of the class polynomial H_d.

    Expands prod over reduced forms of (X - j(z_form)) and integer-recognizes
    every coefficient, retrying at doubled precision on failure.  The initial
    precision is pre-estimated from pi sqrt(|d|) h / ln 2 plus guard bits.
    """
    group = enumerate_reduced(d)
    h = group.h
    estimate = int(math.pi * math.sqrt(-d) * h / math.log(2)) + 64
    current = ctx.with_bits(max(ctx.mantissa_bits, estimate))
    last_residual = None
    for _ in range(ctx.max_retries + 1):
        with current.workprec():
            coeffs = [mp.mpc(1)]
            for form in group.reduced_forms:
                root = j_eval(cm_point(form), current)
                coeffs = [mp.mpc(0)] + coeffs
                for i in range(len(coeffs) - 1):
                    coeffs[i] -= root * coeffs[i + 1]
            try:
                out = []
                for c in coeffs:
                    n = integer_recognize(mp.re(c), current)
                    if abs(mp.im(c)) > current.integer_tolerance * max(1.0, math.sqrt(abs(n))):
                        raise PrecisionError(
                            "class polynomial coefficient has a large imaginary part",
                            residual=float(abs(mp.im(c))),
                        )
                    out.append(n)
                return out
            except PrecisionError as err:
                last_residual = err.residual
                current = current.doubled()
    raise PrecisionError(
        f"class polynomial for d={d} did not stabilize "
        f"(worst residual {last_residual})",
        residual=last_residual,
    )


# ---------------------------------------------------------------------------
# hyperbolic geometry on Y(1)


def cosh_dist_raw(z1: complex, z2: complex) -> float:
    x1, y1 = z1.real, z1.imag
    x2, y2 = z2.real, z2.imag
    return 1.0 + ((x1 - x2) ** 2 + (y1 - y2) ** 2) / (2.0 * y1 * y2)


def _fd_reduce_float(z: complex) -> complex:
    for _ in range(10_000):
        n = math.floor(z.real + 0.5)
        if n:
            z = complex(z.real - n, z.imag)
        if z.real * z.real + z.imag * z.imag < 1.0 - 1e-15:
            z = -1.0 / z
            continue
        return z
    raise PrecisionError("float fundamental-domain reduction did not terminate")


def gamma_translates(z1: complex, z2: complex, cosh_cut: float):
    """All (gamma, gamma z2, cosh d(z1, gamma z2)) with cosh distance <= cosh_cut.

    Enumerates PSL2(Z) by coprime bottom row (c, d) (c > 0, or (0, 1)) and
    the residual translation; the bottom-row bound comes from the exact
    inequality cosh d >= (y1^2 + yw^2) / (2 y1 yw) with yw = y2 / |c z2 + d|^2.
    """
    x1, y1 = z1.real, z1.imag
    x2, y2 = z2.real, z2.imag
    if y1 <= 0 or y2 <= 0:
        raise ValueError("points must lie in the upper half plane")
    out = []
    y_low = y1 / (cosh_cut + math.sqrt(max(cosh_cut * cosh_cut - 1.0, 0.0)))
    # |c z2 + d|^2 <= y2 / y_low
    cap = y2 / y_low
    c_max = int(math.floor(math.sqrt(cap) / y2)) if cap > 0 else 0
    for c in range(0, c_max + 1):
        if c == 0:
            d_candidates = [1]
        else:
            slack = cap - c * c * y2 * y2
            if slack < 0:
                continue
            r = math.sqrt(slack)
            lo = int(math.ceil(-c * x2 - r))
            hi = int(math.floor(-c * x2 + r))
            d_candidates = [d for d in range(lo, hi + 1) if math.gcd(c, d) == 1]
        for d in d_candidates:
            if c == 0:
                a0, b0 = 1, 0
            else:
                g, u, v = _ext_gcd(c, d)
                # a d - b c = 1 with bottom row (c, d)
                a0, b0 = v, -u
            denom = complex(c * x2 + d, c * y2)
            w0 = (complex(a0 * x2 + b0, a0 * y2)) / denom if c else complex(x2 + b0, y2)
            yw = y2 / ((c * x2 + d) ** 2 + (c * y2) ** 2)
            rad = 2.0 * y1 * yw * (cosh_cut - 1.0) - (y1 - yw) ** 2
            if rad < 0:
                continue
            r = math.sqrt(rad)
            n_lo = int(math.ceil(x1 - w0.real - r))
            n_hi = int(math.floor(x1 - w0.real + r))
            for n in range(n_lo, n_hi + 1):
                w = complex(w0.real + n, yw)
                ch = cosh_dist_raw(z1, w)
                if ch <= cosh_cut:
                    gamma = (a0 + n * c, b0 + n * d, c, d)
                    out.append((gamma, w, ch))
    return out


def _ext_gcd(a: int, b: int):
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def y1_cosh_distance(z1: complex, z2: complex) -> float:
    """cosh of the distance between the images of z1, z2 on Y(1)."""
    z1 = _fd_reduce_float(complex(z1))
    z2 = _fd_reduce_float(complex(z2))
    best = cosh_dist_raw(z1, z2)
    for _, _, ch in gamma_translates(z1, z2, best + 1e-12):
        if ch < best:
            best = ch
    return best


def y1_distance(z1, z2) -> float:
    """min over gamma in Gamma of the hyperbolic distance d(z1, gamma z2)."""
    if isinstance(z1, CMPoint):
        z1 = z1.approx()
    if isinstance(z2, CMPoint):
        z2 = z2.approx()
    return arccosh(y1_cosh_distance(complex(z1), complex(z2)))
