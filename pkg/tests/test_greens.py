import math
import types

import mpmath as mp
import pytest

from singmod.numerics import PrecisionContext, legendre_Q_closed
from singmod.quadforms import CMPoint
from singmod.modular import j_eval, modpoly_eval, y1_distance
from singmod.greens import (
    DEFAULT_GK_TAIL,
    G_1,
    G_f,
    G_k_m,
    G_s_sum,
    PrincipalPart,
    SingularityError,
    TailBudgetError,
    cosh_dist,
    g_s,
    g_s_truncated,
    gamma_orbit,
    graph_distance,
    q_kernel,
    tm_count,
)

CTX = PrecisionContext()

# generic, Gamma-inequivalent base points used throughout
Z1 = 0.3 + 1.1j
Z2 = 0.21 + 2.3j


def test_cosh_dist():
    assert cosh_dist(1j, 1j) == pytest.approx(1.0)
    assert cosh_dist(1j, 2j) == pytest.approx(1.25)
    with pytest.raises(ValueError):
        cosh_dist(1j, 1 - 1j)


def test_q_kernel_matches_closed_form():
    for k in (1, 3, 5, 7):  # integer s = k hits the recurrence path
        for t in (1.5, 3.0, 10.0):
            a = q_kernel(k, t, CTX)
            b = legendre_Q_closed(k, t, CTX)
            assert abs(a - b) <= 1e-40 * abs(b)
    # non-integer order routes through the general evaluator
    assert float(q_kernel(1.5, 2.0, CTX)) == pytest.approx(
        float(mp.legenq(0.5, 0, 2.0, type=3).real), rel=1e-12)
    with pytest.raises(SingularityError):
        q_kernel(2, 1.0, CTX)


def test_g_s_sign_and_singularity():
    assert g_s(2, 1j, 2j, CTX) < 0
    assert g_s(1.3, Z1, Z2, CTX) < 0
    with pytest.raises(SingularityError):
        g_s(2, 1j, 1j, CTX)


def test_G_s_sum_symmetry_and_invariance():
    a = G_s_sum(3, Z1, Z2, CTX, tail_target=1e-6)
    b = G_s_sum(3, Z2, Z1, CTX, tail_target=1e-6)
    assert a.value == pytest.approx(b.value, abs=a.tail_bound + b.tail_bound)
    # full-group average is Gamma-invariant in each slot
    c = G_s_sum(3, Z1, Z2 + 1, CTX, tail_target=1e-6)
    d = G_s_sum(3, Z1, -1 / Z2, CTX, tail_target=1e-6)
    for other in (c, d):
        assert other.value == pytest.approx(
            a.value, abs=a.tail_bound + other.tail_bound)


def test_G_s_sum_tail_honest_under_doubling():
    coarse = G_s_sum(3, Z1, Z2, CTX, tail_target=1e-4)
    fine = G_s_sum(3, Z1, Z2, CTX, tail_target=1e-8)
    # omitted terms are negative: coarse >= fine, within the certified tail
    assert fine.value <= coarse.value + 1e-12
    assert coarse.value - fine.value <= coarse.tail_bound


def test_G_s_sum_refusals():
    with pytest.raises(ValueError):
        G_s_sum(1.0, Z1, Z2, CTX)
    with pytest.raises(TailBudgetError):
        G_s_sum(1.2, Z1, Z2, CTX, tail_target=1e-25)
    with pytest.raises(SingularityError):
        G_s_sum(3, 1j, 1j + 1, CTX, tail_target=1e-4)


def test_G_1_is_log_j_difference():
    expect = 2 * mp.log(abs(j_eval(Z1, CTX) - j_eval(Z2, CTX)))
    assert float(G_1(Z1, Z2, CTX)) == pytest.approx(float(expect), rel=1e-12)
    with pytest.raises(SingularityError):
        G_1(1j, -1 / 1j, CTX)


def test_G_k_m_k1_matches_modpoly_log():
    for m in (1, 2, 3):
        v = G_k_m(1, m, Z1, Z2, CTX)
        expect = 2 * modpoly_eval(m, Z1, Z2, CTX).log_abs()
        assert float(v.value) == pytest.approx(float(expect), rel=1e-12)
        assert v.cosh_cutoff == math.inf


def test_G_k_m_negative_at_distant_pairs():
    # each gamma-term is negative, so the whole average is
    for k in (3, 5, 7):
        v = G_k_m(k, 2, Z1, Z2, CTX)
        assert v.value < 0
        assert v.tail_bound <= DEFAULT_GK_TAIL


def test_G_k_m_symmetry():
    for k in (3, 5):
        a = G_k_m(k, 3, Z1, Z2, CTX, tail_target=1e-7)
        b = G_k_m(k, 3, Z2, Z1, CTX, tail_target=1e-7)
        assert a.value == pytest.approx(
            b.value, abs=2 * (a.tail_bound + b.tail_bound))


def test_G_k_m_singular_on_graph():
    # (i, 2i) lies on the degree-2 Hecke graph
    with pytest.raises(SingularityError):
        G_k_m(3, 2, 1j, 2j, CTX)
    with pytest.raises(ValueError):
        G_k_m(4, 2, Z1, Z2, CTX)


def test_eigenfunction_property():
    # a fixed-orbit truncated sum is an exact eigenfunction with eigenvalue
    # s(1-s); finite differences of the hyperbolic Laplacian must vanish
    gammas = gamma_orbit(Z1, Z2, 200.0)
    assert len(gammas) > 5
    with CTX.workprec():
        h = mp.mpf(1) / 10 ** 6
        for s in (1.5, 2.0, 3.0):
            f = lambda x, y: g_s_truncated(
                s, mp.mpc(x, y), Z2, gammas, CTX)
            x0, y0 = mp.mpf(Z1.real), mp.mpf(Z1.imag)
            fxx = (f(x0 + h, y0) - 2 * f(x0, y0) + f(x0 - h, y0)) / h ** 2
            fyy = (f(x0, y0 + h) - 2 * f(x0, y0) + f(x0, y0 - h)) / h ** 2
            lap = -(y0 ** 2) * (fxx + fyy)
            expect = s * (1 - s) * f(x0, y0)
            assert abs(lap - expect) < 1e-6


def test_principal_part_validation():
    PrincipalPart(k=3, coefficients={1: 1})
    with pytest.raises(ValueError):
        PrincipalPart(k=2, coefficients={1: 1})
    with pytest.raises(ValueError):
        PrincipalPart(k=3, coefficients={0: 1})
    with pytest.raises(ValueError):
        PrincipalPart(k=3, coefficients={2: 0})


def test_G_f_single_term_and_linearity():
    # the combination weights each G_k^m by c(m) m^(k-1)
    single = G_f(PrincipalPart(k=3, coefficients={2: 1}), Z1, Z2, CTX)
    direct = G_k_m(3, 2, Z1, Z2, CTX)
    assert single == pytest.approx(2 ** 2 * direct.value, abs=1e-12)
    combo = G_f(PrincipalPart(k=3, coefficients={1: 2, 2: -3}), Z1, Z2, CTX)
    g1 = G_k_m(3, 1, Z1, Z2, CTX)
    assert combo == pytest.approx(
        2 * 1 ** 2 * g1.value - 3 * 2 ** 2 * direct.value, abs=1e-9)


def test_graph_distance_examples():
    # on the degree-2 graph: distance zero
    assert graph_distance(2, 1j, 2j) == pytest.approx(0.0, abs=1e-9)
    # degree 1: graph is the diagonal, distance d(z1,z2)/sqrt(2)
    expect = y1_distance(Z1, Z2) / math.sqrt(2)
    assert graph_distance(1, Z1, Z2) == pytest.approx(expect, rel=1e-12)
    assert graph_distance(1, 1j, 1j + 1) == pytest.approx(0.0, abs=1e-9)


def test_graph_distance_midpoint_identity():
    # moving z2 along a coset can only shrink or preserve the distance
    d_full = graph_distance(2, Z1, Z2)
    for coset in [(1, 0, 2), (1, 1, 2), (2, 0, 1)]:
        a, b, d = coset
        w = (a * Z2 + b) / d
        assert d_full <= y1_distance(Z1, w) / math.sqrt(2) + 1e-12


def make_cycle(pairs):
    entries = [types.SimpleNamespace(z1=p, z2=q, multiplicity=m)
               for p, q, m in pairs]
    return types.SimpleNamespace(pairs=entries)


def test_tm_count():
    cycle = make_cycle([
        (1j, 2j, 4),          # exactly on the degree-2 graph
        (Z1, Z2, 4),          # generic, well away from it
    ])
    near = tm_count(cycle, 2, 1e-6)
    assert near.count == 4
    assert near.distances[0] == pytest.approx(0.0, abs=1e-9)
    everything = tm_count(cycle, 2, 100.0)
    assert everything.count == 8
    with pytest.raises(ValueError):
        tm_count(cycle, 2, 0.0)


def test_tm_count_threshold():
    # the (i, zeta) pair sits at a positive, known distance from the m=1 graph
    zeta = CMPoint(1, 1, -3)
    dist = graph_distance(1, CMPoint(1, 0, -4), zeta)
    assert dist > 0
    cycle = make_cycle([(CMPoint(1, 0, -4), zeta, 4)])
    assert tm_count(cycle, 1, dist * 0.9).count == 0
    assert tm_count(cycle, 1, dist * 1.1).count == 4
