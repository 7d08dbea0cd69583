"""End-to-end certification: exact norms, non-unit checks, bound inequalities.

Pulls the pipeline together for one (d1, d2, m) instance: build the Galois
cycle, compute the exact integer norm of the modular-polynomial value, check
it is at least 2, compare its logarithm against the Green's-function lower
bounds, factor it, and exhibit the smallest prime factor as the residue
characteristic witnessing an m-isogeny between the reduced curves.

A "zero" outcome (the modular polynomial vanishes somewhere on the cycle) is
a legal result, not a failure; it is reported with the singular pair.
Diagnostic cycles (big case with gcd(d1, d2) > 1) get their product computed
but no norm assertion.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field

import mpmath as mp

from .numerics import PrecisionContext, PrecisionError, legendre_Q_closed, mk_constant
from .quadforms import Discriminant, QuadFormError
from .cmcycles import (
    CMCycle,
    SingularCycleError,
    build_cycle,
    cycle_log_norm,
    cycle_norm_integer,
)
from .greens import G_k_m, GreensValue, SingularityError, tm_count


# ---------------------------------------------------------------------------
# integer factorization


def _is_probable_prime(n: int, rounds: int = 24) -> bool:
    """Miller-Rabin; deterministic below 3.3e24 via the first 13 prime bases."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for p in small:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    if n < 3_317_044_064_679_887_385_961_981:
        bases = small
    else:
        rng = random.Random(n)
        bases = tuple(rng.randrange(2, n - 1) for _ in range(rounds))
    for a in bases:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _brent_rho(n: int, seed: int, deadline: float) -> int | None:
    """Brent's cycle variant of Pollard rho; returns a nontrivial factor or None."""
    rng = random.Random(seed)
    while time.monotonic() < deadline:
        y = rng.randrange(1, n)
        c = rng.randrange(1, n)
        m_batch = 128
        g, r, q = 1, 1, 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m_batch, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m_batch
                if time.monotonic() >= deadline:
                    return None
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if 1 < g < n:
            return g
    return None


@dataclass(frozen=True)
class Factorization:
    """prime-power factors plus an optional composite cofactor (1 if complete)."""

    factors: tuple[tuple[int, int], ...]
    cofactor: int

    @property
    def complete(self) -> bool:
        return self.cofactor == 1

    def reassemble(self) -> int:
        out = self.cofactor
        for p, e in self.factors:
            out *= p ** e
        return out

    def __str__(self):
        parts = [f"{p}^{e}" if e > 1 else str(p) for p, e in self.factors]
        if self.cofactor != 1:
            parts.append(f"[composite {self.cofactor}]")
        return " * ".join(parts) if parts else "1"


def factor_norm(n: int, trial_bound: int = 10 ** 6,
                rho_seconds: float = 10.0, seed: int = 1) -> Factorization:
    """Factor n >= 2: trial division, then time-boxed Brent rho on cofactors.

    A leftover composite is legal output (reported as cofactor); the
    non-unit verdict never depends on completing the factorization.
    """
    if n < 2:
        raise ValueError("factor_norm expects n >= 2")
    factors: dict[int, int] = {}
    rest = n
    p = 2
    while p * p <= rest and p <= trial_bound:
        while rest % p == 0:
            factors[p] = factors.get(p, 0) + 1
            rest //= p
        p += 1 if p == 2 else 2
    deadline = time.monotonic() + rho_seconds
    stack = [rest] if rest > 1 else []
    cofactor = 1
    while stack:
        q = stack.pop()
        if q == 1:
            continue
        if _is_probable_prime(q):
            factors[q] = factors.get(q, 0) + 1
            continue
        root = math.isqrt(q)
        if root * root == q:
            stack.extend([root, root])
            continue
        g = _brent_rho(q, seed, deadline)
        if g is None:
            cofactor *= q
            continue
        stack.extend([g, q // g])
    out = Factorization(factors=tuple(sorted(factors.items())), cofactor=cofactor)
    assert out.reassemble() == n
    return out


# ---------------------------------------------------------------------------
# verification reports


@dataclass
class ChainBound:
    k: int
    mk: float
    neg_gkm: float          # upper bound of -G_k^m(Z(W)) incl. tails
    bound: float            # mk * neg_gkm
    passed: bool


@dataclass
class EpsilonBound:
    epsilon: float
    count: int
    rhs: float
    lhs: float
    passed: bool


@dataclass
class VerificationReport:
    d1: int
    d2: int
    m: int
    cycle_kind: str = ""
    group_order: int = 0
    status: str = "pending"   # "ok", "zero", "error"
    norm: int | None = None
    log_norm: float | None = None
    non_unit: bool | None = None
    asserted: bool = False    # whether the norm interpretation is exact-mode
    factorization: Factorization | None = None
    witness: int | None = None
    chain: list[ChainBound] = field(default_factory=list)
    epsilon_bounds: list[EpsilonBound] = field(default_factory=list)
    singular_pair: tuple | None = None
    error: str | None = None
    elapsed: float = 0.0

    @property
    def all_passed(self) -> bool:
        if self.status == "zero":
            return True
        if self.status != "ok":
            return False
        checks = [b.passed for b in self.chain] + [b.passed for b in self.epsilon_bounds]
        if self.asserted:
            checks.append(bool(self.non_unit))
        return all(checks)


def _base_report(d1: int, d2: int, m: int) -> VerificationReport:
    return VerificationReport(d1=int(d1), d2=int(d2), m=int(m))


def verify_nonunit(d1, d2, m: int, ctx: PrecisionContext,
                   factor: bool = False,
                   rho_seconds: float = 10.0) -> VerificationReport:
    """Exact norm of the cycle product and the N >= 2 check.

    status "zero" with the singular pair identified is a legal outcome; in
    diagnostic mode (big cycle, gcd > 1) the product is computed but the
    non-unit claim is not asserted.
    """
    rep = _base_report(int(d1), int(d2), m)
    t0 = time.monotonic()
    try:
        cycle = build_cycle(rep.d1, rep.d2)
        rep.cycle_kind = cycle.kind
        rep.group_order = cycle.group_order
        n = cycle_norm_integer(cycle, m, ctx)
        rep.norm = n
        rep.log_norm = float(math.log(n)) if n > 0 else float("-inf")
        rep.non_unit = n >= 2
        rep.asserted = cycle.is_exact
        rep.status = "ok"
        if factor and n >= 2:
            trial = max(10 ** 6, abs(rep.d1 * rep.d2) * m * m)
            rep.factorization = factor_norm(n, trial_bound=trial,
                                            rho_seconds=rho_seconds)
            if rep.factorization.factors:
                rep.witness = rep.factorization.factors[0][0]
    except SingularCycleError as err:
        rep.status = "zero"
        rep.singular_pair = err.pair.key if err.pair else None
        rep.error = str(err)
    except (PrecisionError, QuadFormError, ValueError) as err:
        rep.status = "error"
        rep.error = f"{type(err).__name__}: {err}"
    rep.elapsed = time.monotonic() - t0
    return rep


def isogeny_witness(d1, d2, m: int, ctx: PrecisionContext) -> int | None:
    """Smallest prime dividing the norm: a residue characteristic at which
    the reductions of the two CM curves admit an m-isogeny.  None only when
    the value is zero."""
    rep = verify_nonunit(d1, d2, m, ctx, factor=True)
    if rep.status == "zero":
        return None
    if rep.status != "ok":
        raise PrecisionError(rep.error or "verification failed")
    return rep.witness


def verify_lower_bound(d1, d2, m: int, epsilon: float,
                       ctx: PrecisionContext,
                       report: VerificationReport | None = None) -> EpsilonBound:
    """log N >= 2 * |Z(W) cap T_{m,eps}| * Q_2(cosh(sqrt(2) eps)).

    The right side counts cycle points within epsilon of the degree-m Hecke
    graph and weights them by the k = 3 kernel at the rescaled distance.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    base = report or verify_nonunit(d1, d2, m, ctx)
    if base.status != "ok":
        raise SingularityError(
            f"lower bound undefined: status {base.status} ({base.error})")
    cycle = build_cycle(base.d1, base.d2)
    prox = tm_count(cycle, m, epsilon)
    q2 = float(legendre_Q_closed(3, math.cosh(math.sqrt(2.0) * epsilon), ctx))
    rhs = 2.0 * prox.count * q2
    lhs = base.log_norm
    out = EpsilonBound(epsilon=float(epsilon), count=prox.count,
                       rhs=rhs, lhs=lhs, passed=lhs >= rhs)
    if report is not None:
        report.epsilon_bounds.append(out)
    return out


def verify_chain(d1, d2, m: int, ctx: PrecisionContext,
                 ks=(3, 5, 7), tail_target: float | None = None,
                 report: VerificationReport | None = None) -> list[ChainBound]:
    """2 log N >= m_k * (-G_k^m(Z(W))) for k in {3, 5, 7}.

    -G_k^m over the cycle is summed from truncated lattice sums; the omitted
    tails are added on the right so the inequality tested is an upper bound
    of the true one.
    """
    base = report or verify_nonunit(d1, d2, m, ctx)
    if base.status != "ok":
        raise SingularityError(
            f"chain bound undefined: status {base.status} ({base.error})")
    cycle = build_cycle(base.d1, base.d2)
    out = []
    for k in ks:
        mk = float(mk_constant(k))
        neg = 0.0
        for pair in cycle.pairs:
            part = G_k_m(k, m, pair.z1, pair.z2, ctx, tail_target=tail_target)
            neg += pair.multiplicity * (-part.value + part.tail_bound)
        bound = mk * neg
        passed = 2.0 * base.log_norm >= bound
        out.append(ChainBound(k=k, mk=mk, neg_gkm=neg, bound=bound, passed=passed))
    if report is not None:
        report.chain.extend(out)
    return out


# ---------------------------------------------------------------------------
# sweeps


def fundamental_discriminants(limit: int) -> list[int]:
    """All fundamental d with 0 > d >= -limit."""
    out = []
    for d in range(-3, -limit - 1, -1):
        if d % 4 not in (0, 1):
            continue
        disc = Discriminant.of(d)
        if disc.is_fundamental:
            out.append(d)
    return out


def _sweep_instance(task) -> VerificationReport:
    d1, d2, m, ctx, epsilons, chain, factor = task
    rep = verify_nonunit(d1, d2, m, ctx, factor=factor)
    if rep.status == "ok":
        for eps in epsilons:
            try:
                verify_lower_bound(d1, d2, m, eps, ctx, report=rep)
            except SingularityError:
                pass
        if chain:
            try:
                verify_chain(d1, d2, m, ctx, report=rep)
            except (SingularityError, PrecisionError) as err:
                rep.error = f"chain: {err}"
    return rep


def sweep_instances(d1_values, d2_values, m_values, policy: str = "exact"):
    """The (d1, d2, m) grid a sweep will visit, after policy filtering.

    policy "exact" keeps only exact-mode instances (coprime big, or small);
    "all" includes diagnostic ones.  Unordered pairs are visited once.
    """
    if policy not in ("exact", "all"):
        raise ValueError("policy must be 'exact' or 'all'")
    out = []
    seen = set()
    for d1 in d1_values:
        for d2 in d2_values:
            key = (min(d1, d2), max(d1, d2))
            if key in seen:
                continue
            seen.add(key)
            coprime = math.gcd(-d1, -d2) == 1
            try:
                case_small = Discriminant.of(d1).d_K == Discriminant.of(d2).d_K
            except QuadFormError:
                continue
            if policy == "exact" and not (coprime or case_small):
                continue
            for m in m_values:
                out.append((d1, d2, m))
    return out


def sweep(d1_values, d2_values, m_values, ctx: PrecisionContext,
          policy: str = "exact", epsilons=(), chain: bool = False,
          factor: bool = False, workers: int = 1) -> list[VerificationReport]:
    """Run verify_nonunit (plus optional bound checks) over a grid.

    Per-instance errors are recorded in the report, never raised.  With
    workers > 1 instances run in a process pool; the report order is the
    grid order either way.
    """
    tasks = [(d1, d2, m, ctx, tuple(epsilons), chain, factor)
             for d1, d2, m in sweep_instances(d1_values, d2_values, m_values, policy)]
    if workers <= 1 or len(tasks) < 2:
        return [_sweep_instance(t) for t in tasks]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_instance, tasks))


def summarize(reports) -> dict:
    """Pass/zero/error tallies for a sweep."""
    out = {"total": len(reports), "ok": 0, "zero": 0, "error": 0,
           "assert_failures": 0}
    for rep in reports:
        if rep.status == "zero":
            out["zero"] += 1
        elif rep.status == "error":
            out["error"] += 1
        else:
            out["ok"] += 1
            if not rep.all_passed:
                out["assert_failures"] += 1
    return out
