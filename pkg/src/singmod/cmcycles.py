"""Galois 0-cycles of CM point pairs and exact norms of modular values.

A pair of discriminants d1, d2 < 0 falls into one of two regimes, decided by
whether d1*d2 is a perfect square:

  * big cycle (non-square): the orbit is the full Cl(d1) x Cl(d2) grid of
    reduced-form pairs, each with multiplicity 4.  When gcd(d1, d2) = 1 the
    product over the cycle is exactly the absolute norm of
    phi_m(j(z1), j(z2)) from the compositum of the two ring class fields
    down to Q; with a common factor the cycle is still Galois-stable, so the
    product is an integer, but it is only reported diagnostically.

  * small cycle (square, same imaginary field): both points live over the
    same field; the orbit is driven by the class group of the common order
    O_d' with d' = lcm(f1, f2)^2 * d_K (the largest negative discriminant
    whose order sits inside both O_d1 and O_d2), acting through the
    projection maps, plus the complex-conjugate branch, which inverts both
    classes.

Norms are assembled as products of per-pair modular values at a precision
pre-estimated from a cheap low-precision pass, then integer-recognized with
doubling retries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp

from .numerics import (
    PrecisionContext,
    PrecisionError,
    integer_recognize,
)
from .quadforms import (
    CMPoint,
    Discriminant,
    QuadForm,
    QuadFormError,
    cm_point,
    compose,
    enumerate_reduced,
    inverse,
    project_class,
    reduce_form,
)
from .modular import modpoly_eval


class CycleError(ValueError):
    pass


class SingularCycleError(CycleError):
    """phi_m vanishes at a cycle point; the norm is zero, not a unit witness."""

    def __init__(self, message, pair=None, zero_cosets=()):
        super().__init__(message)
        self.pair = pair
        self.zero_cosets = tuple(zero_cosets)


@dataclass(frozen=True)
class CyclePair:
    z1: CMPoint
    z2: CMPoint
    multiplicity: int

    @property
    def key(self):
        return (self.z1.a, self.z1.b, self.z2.a, self.z2.b)


@dataclass(frozen=True)
class CMCycle:
    kind: str  # "big", "small" or "diagnostic"
    d1: Discriminant
    d2: Discriminant
    pairs: tuple[CyclePair, ...]
    group_order: int

    @property
    def is_exact(self) -> bool:
        """Whether the cycle product is asserted to equal the field norm."""
        return self.kind in ("big", "small")


def _as_disc(d) -> Discriminant:
    return d if isinstance(d, Discriminant) else Discriminant.of(d)


def cycle_case(d1, d2) -> str:
    """"small" when d1*d2 is a perfect square (same imaginary field), else "big"."""
    d1 = _as_disc(d1)
    d2 = _as_disc(d2)
    prod = d1.d * d2.d
    r = math.isqrt(prod)
    return "small" if r * r == prod else "big"


def big_cm_cycle(d1, d2) -> CMCycle:
    """The Cl(d1) x Cl(d2) orbit with multiplicity 4 per pair.

    Multiplicity 4 reflects the four-term orbit structure: replacing a point
    by its negated conjugate walks the inverse class, which is already in the
    grid, so each of the four branches traverses the same multiset.  With
    gcd(d1, d2) > 1 the result is tagged "diagnostic": the product is a
    well-defined integer but not certified to be the norm itself.
    """
    d1 = _as_disc(d1)
    d2 = _as_disc(d2)
    if cycle_case(d1, d2) == "small":
        raise CycleError(
            f"d1*d2 = {d1.d * d2.d} is a perfect square; use small_cm_cycle")
    g1 = enumerate_reduced(d1.d)
    g2 = enumerate_reduced(d2.d)
    pairs = tuple(
        CyclePair(cm_point(fa), cm_point(fb), 4)
        for fa in g1.reduced_forms
        for fb in g2.reduced_forms
    )
    kind = "big" if math.gcd(-d1.d, -d2.d) == 1 else "diagnostic"
    return CMCycle(kind=kind, d1=d1, d2=d2, pairs=pairs,
                   group_order=4 * g1.h * g2.h)


def common_order_discriminant(d1, d2) -> int:
    """d' = lcm(f1, f2)^2 * d_K, the finest order contained in both O_di."""
    d1 = _as_disc(d1)
    d2 = _as_disc(d2)
    if d1.d_K != d2.d_K:
        raise CycleError(
            f"discriminants {d1.d} and {d2.d} lie in different fields")
    return math.lcm(d1.f, d2.f) ** 2 * d1.d_K


def small_cm_cycle(d1, d2, base1: QuadForm | None = None,
                   base2: QuadForm | None = None) -> CMCycle:
    """Orbit of (z1, z2) under Cl(d') plus the conjugate branch.

    Base classes default to the principal ones.  sigma acts on coordinate i
    through the projection Cl(d') -> Cl(d_i); the conjugate branch replaces
    both classes by their inverses.  Coinciding pairs are merged with summed
    multiplicities; group_order stays 2 h(d').
    """
    d1 = _as_disc(d1)
    d2 = _as_disc(d2)
    if cycle_case(d1, d2) == "big":
        raise CycleError(
            f"d1*d2 = {d1.d * d2.d} is not a perfect square; use big_cm_cycle")
    dp = common_order_discriminant(d1, d2)
    gp = enumerate_reduced(dp)
    b1 = reduce_form(base1) if base1 is not None else enumerate_reduced(d1.d).identity
    b2 = reduce_form(base2) if base2 is not None else enumerate_reduced(d2.d).identity
    if b1.disc != d1.d or b2.disc != d2.d:
        raise CycleError("base forms must match the cycle discriminants")
    counts: dict[tuple, CyclePair] = {}

    def add(f1: QuadForm, f2: QuadForm):
        pair = CyclePair(cm_point(f1), cm_point(f2), 1)
        prev = counts.get(pair.key)
        if prev is not None:
            pair = CyclePair(prev.z1, prev.z2, prev.multiplicity + 1)
        counts[pair.key] = pair

    for sigma in gp.reduced_forms:
        c1 = compose(project_class(sigma, d1), b1)
        c2 = compose(project_class(sigma, d2), b2)
        add(c1, c2)
        add(inverse(c1), inverse(c2))
    pairs = tuple(counts[k] for k in sorted(counts))
    return CMCycle(kind="small", d1=d1, d2=d2, pairs=pairs,
                   group_order=2 * gp.h)


def build_cycle(d1, d2, base1=None, base2=None) -> CMCycle:
    """Dispatch on the square test; see big_cm_cycle and small_cm_cycle."""
    if cycle_case(d1, d2) == "small":
        return small_cm_cycle(d1, d2, base1=base1, base2=base2)
    return big_cm_cycle(d1, d2)


@dataclass(frozen=True)
class CycleLogNorm:
    """Sum of multiplicity * log|phi_m| over the cycle, with an error bound."""

    value: mp.mpf
    error_bound: float

    def __float__(self):
        return float(self.value)


def cycle_log_norm(cycle: CMCycle, m: int, ctx: PrecisionContext) -> CycleLogNorm:
    """Natural log of the cycle product of |phi_m(j(z1), j(z2))|.

    Raises SingularCycleError the moment a factor is numerically zero; the
    iteration order is fixed (pairs sorted by form key) so sums are
    bit-stable.
    """
    with ctx.workprec():
        total = mp.mpf(0)
        err = 0.0
        for pair in sorted(cycle.pairs, key=lambda p: p.key):
            v = modpoly_eval(m, pair.z1, pair.z2, ctx)
            if v.is_zero:
                raise SingularCycleError(
                    f"phi_{m} vanishes at cycle pair {pair.key}",
                    pair=pair, zero_cosets=v.zero_cosets)
            total += pair.multiplicity * v.log_abs()
            err += pair.multiplicity * float(v.rel_error)
        return CycleLogNorm(value=total, error_bound=err)


def cycle_norm_integer(cycle: CMCycle, m: int, ctx: PrecisionContext) -> int:
    """The exact integer |product over the cycle of phi_m|.

    A low-precision pass estimates the bit size of the result; the product
    is then recomputed with that many mantissa bits plus guard and
    integer-recognized, doubling on failure up to ctx.max_retries.
    """
    probe = cycle_log_norm(cycle, m, ctx.with_bits(96))
    bits = max(int(float(probe.value) / math.log(2)) + 64, ctx.mantissa_bits)
    current = ctx.with_bits(bits)
    last = None
    for _ in range(ctx.max_retries + 1):
        log_norm = cycle_log_norm(cycle, m, current)
        with current.workprec():
            value = mp.exp(log_norm.value)
            try:
                return integer_recognize(value, current)
            except PrecisionError as err:
                last = err
                current = current.doubled()
    raise PrecisionError(
        f"cycle norm for (d1, d2, m) = ({cycle.d1.d}, {cycle.d2.d}, {m}) "
        f"did not stabilize (last residual {last.residual if last else 'n/a'})",
        residual=last.residual if last else None)
