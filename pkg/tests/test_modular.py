import math
import random

import mpmath as mp
import pytest

from singmod.numerics import PrecisionContext
from singmod.quadforms import CMPoint, cm_point, enumerate_reduced
from singmod.modular import (
    classpoly,
    coset_apply,
    fd_reduce,
    gamma_translates,
    hecke_cosets,
    j_eval,
    j_q_coefficients,
    modpoly_eval,
    y1_distance,
)

CTX = PrecisionContext()

# classical degree-2 modular polynomial, used as an independent oracle
PHI2 = lambda x, y: (
    x ** 3 + y ** 3 - x * x * y * y + 1488 * (x * x * y + x * y * y)
    - 162000 * (x * x + y * y) + 40773375 * x * y
    + 8748000000 * (x + y) - 157464000000000
)


def sigma1(m):
    return sum(d for d in range(1, m + 1) if m % d == 0)


def test_j_coefficients_known_prefix():
    assert j_q_coefficients(6) == [1, 744, 196884, 21493760, 864299970,
                                   20245856256]


def test_j_special_values():
    tol = mp.mpf(10) ** -60
    assert abs(j_eval(CMPoint(1, 1, -3), CTX)) < tol
    assert abs(j_eval(CMPoint(1, 0, -4), CTX) - 1728) < tol
    assert abs(j_eval(CMPoint(1, 1, -7), CTX) + 3375) < tol
    assert abs(j_eval(2j, CTX) - 287496) < tol  # 66^3
    assert abs(j_eval(CMPoint(1, 0, -16), CTX) - 287496) < tol


def test_j_gamma_invariance():
    rng = random.Random(3)
    with CTX.workprec():
        for _ in range(10):
            z = mp.mpc(rng.uniform(-2, 2), rng.uniform(0.3, 2.0))
            a, b, c = rng.randint(-3, 3), rng.randint(-3, 3), rng.randint(-3, 3)
            # complete (c, d) to det 1
            d, found = None, False
            for dd in range(-9, 10):
                if a * dd - b * c == 1:
                    d, found = dd, True
                    break
            if not found:
                continue
            w = (a * z + b) / (c * z + d)
            diff = abs(j_eval(z, CTX) - j_eval(w, CTX))
            assert diff <= 1e-50 * max(1, abs(j_eval(z, CTX)))


def test_fd_reduce():
    z, gamma = fd_reduce(mp.mpc(0, 1))
    assert gamma == (1, 0, 0, 1)
    z, gamma = fd_reduce(mp.mpc(5, 1))
    assert gamma == (1, -5, 0, 1) and abs(z - mp.mpc(0, 1)) < 1e-70
    rng = random.Random(5)
    with CTX.workprec():
        for _ in range(50):
            w = mp.mpc(rng.uniform(-8, 8), rng.uniform(0.01, 4.0))
            z, (a, b, c, d) = fd_reduce(w)
            assert a * d - b * c == 1
            assert abs(mp.re(z)) <= 0.5 + 1e-60
            assert abs(z) >= 1 - 1e-60
            assert abs((a * w + b) / (c * w + d) - z) < 1e-50


def test_hecke_cosets():
    assert hecke_cosets(1).reps == ((1, 0, 1),)
    assert set(hecke_cosets(2).reps) == {(1, 0, 2), (1, 1, 2), (2, 0, 1)}
    assert len(hecke_cosets(6)) == 12
    for m in range(1, 201):
        assert len(hecke_cosets(m)) == sigma1(m)
    with pytest.raises(ValueError):
        hecke_cosets(0)


def test_coset_apply_exact():
    z = CMPoint(1, 0, -4)  # i
    w = coset_apply((1, 1, 2), z)
    assert isinstance(w, CMPoint)
    assert w.approx() == pytest.approx((1j + 1) / 2)
    assert w.d == -4  # content-normalized form keeps the fundamental radicand
    assert coset_apply((2, 1, 3), 1j) == pytest.approx((2j + 1) / 3)


def test_modpoly_m1_is_j_difference():
    z1, z2 = CMPoint(1, 0, -4), CMPoint(1, 1, -3)
    v = modpoly_eval(1, z1, z2, CTX)
    assert abs(v.value - (j_eval(z1, CTX) - j_eval(z2, CTX))) < 1e-50
    same = modpoly_eval(1, 1j, 1j, CTX)
    assert same.is_zero


def test_modpoly_against_classical_phi2():
    rng = random.Random(17)
    with CTX.workprec():
        for _ in range(5):
            z1 = mp.mpc(rng.uniform(-0.4, 0.4), rng.uniform(0.9, 1.6))
            z2 = mp.mpc(rng.uniform(-0.4, 0.4), rng.uniform(0.9, 1.6))
            ours = modpoly_eval(2, z1, z2, CTX).value
            oracle = PHI2(j_eval(z1, CTX), j_eval(z2, CTX))
            assert abs(ours - oracle) <= 1e-40 * abs(oracle)


def test_modpoly_symmetry():
    # symmetric in the two arguments, except that every degree-1 factor
    # (present when m is a perfect square) flips sign under the swap
    rng = random.Random(23)
    with CTX.workprec():
        for m in range(1, 7):
            z1 = mp.mpc(rng.uniform(-0.4, 0.4), rng.uniform(0.9, 1.5))
            z2 = mp.mpc(rng.uniform(-0.4, 0.4), rng.uniform(1.6, 2.2))
            a = modpoly_eval(m, z1, z2, CTX)
            b = modpoly_eval(m, z2, z1, CTX)
            sign = -1 if m in (1, 4) else 1
            assert abs(a.value - sign * b.value) <= 1e-30 * abs(a.value)


def test_modpoly_zero_detection():
    # i has an endomorphism of degree 2 (1 + i), realized by the coset (1,1,2)
    v = modpoly_eval(2, CMPoint(1, 0, -4), CMPoint(1, 0, -4), CTX)
    assert v.is_zero and v.zero_cosets == ((1, 1, 2),)
    # perfect square m: the scalar coset collapses onto the identity
    v4 = modpoly_eval(4, CMPoint(1, 0, -4), CMPoint(1, 0, -4), CTX)
    assert v4.is_zero and (2, 0, 2) in v4.zero_cosets
    with pytest.raises(ZeroDivisionError):
        v.log_abs()


def test_classpoly_known():
    assert classpoly(-3, CTX) == [0, 1]
    assert classpoly(-4, CTX) == [-1728, 1]
    assert classpoly(-15, CTX) == [-121287375, 191025, 1]
    assert classpoly(-23, CTX) == [12771880859375, -5151296875, 3491750, 1]


def test_classpoly_roots():
    with CTX.workprec():
        for d in (-15, -23, -31):
            coeffs = classpoly(d, CTX)
            for form in enumerate_reduced(d).reduced_forms:
                root = j_eval(cm_point(form), CTX)
                acc = mp.mpc(0)
                for c in reversed(coeffs):
                    acc = acc * root + c
                scale = max(abs(root), 1) ** (len(coeffs) - 1)
                assert abs(acc) <= 1e-40 * scale


def brute_force_y1(z1, z2, bound):
    best = math.inf
    for a in range(-bound, bound + 1):
        for b in range(-bound, bound + 1):
            for c in range(-bound, bound + 1):
                for d in range(-bound, bound + 1):
                    if a * d - b * c != 1:
                        continue
                    w = (a * z2 + b) / (c * z2 + d)
                    ch = 1 + abs(z1 - w) ** 2 / (2 * z1.imag * w.imag)
                    best = min(best, math.acosh(max(ch, 1.0)))
    return best


def test_y1_distance_examples():
    assert y1_distance(1j, 1j) == pytest.approx(0.0, abs=1e-12)
    assert y1_distance(1j, 1j + 1) == pytest.approx(0.0, abs=1e-12)
    assert y1_distance(1j, 2j) == pytest.approx(math.acosh(1.25), rel=1e-12)


def test_y1_distance_brute_force():
    rng = random.Random(29)
    for _ in range(30):
        z1 = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.8, 1.8))
        z2 = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.8, 1.8))
        ours = y1_distance(z1, z2)
        oracle = brute_force_y1(z1, z2, 4)
        assert ours == pytest.approx(oracle, abs=1e-10)


def test_gamma_translates_complete():
    # every enumerated element is in the group and within the cutoff; the
    # identity orbit point is always present
    z1, z2 = 0.3 + 1.1j, 0.2 + 1.4j
    out = gamma_translates(z1, z2, 10.0)
    assert any(g == (1, 0, 0, 1) for g, _, _ in out)
    for (a, b, c, d), w, ch in out:
        assert a * d - b * c == 1
        assert ch <= 10.0 + 1e-9
        expect = (a * z2 + b) / (c * z2 + d)
        assert abs(w - expect) < 1e-9
    # doubling the cutoff only adds elements
    bigger = gamma_translates(z1, z2, 20.0)
    small_set = {g for g, _, _ in out}
    big_set = {g for g, _, _ in bigger}
    assert small_set <= big_set
