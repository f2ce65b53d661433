"""Closed-form family tests.

The *_ORACLE tables were computed offline at 50-digit precision from the
classical interpolation form of each solution (shifted cosh/sinh basis for
the conic family, sine interpolation for the cos/sin family), a different
algebraic route than the implementation uses.
"""

import math

import numpy as np
import pytest

from febvp.closed_forms import (
    AFFINE_BASIS,
    COS_SIN_BASIS,
    ConicParams,
    DegenerateBasis,
    LinearBasis,
    SERIES_SWITCH,
    angelesco_residual,
    conic_F,
    conic_S,
    cos_sin_S,
    free_fall_F,
    free_fall_S,
    linear_F,
    neuman_det,
)

# (k, g, tau, alpha, beta, a, b) -> F, sinh branch
CONIC_F_ORACLE = [
    ((1.0, -9.8, 0.25, -0.5, 1.0, 0.3, -0.7), 2.07610326142735515768),
    ((2.0, 3.0, -0.1, -0.75, 0.6, -1.2, 0.4), -0.6019895780727251551582),
    ((0.5, 0.0, 1.3, 0.2, 1.9, 2.0, -0.5), 0.3346506055880107264468),
    ((1.7, -2.0, -0.9, -1.1, 0.35, 0.8, 1.1), 0.7925528629236408946889),
]

# same map, |k (beta - alpha)| far below the branch switch
CONIC_F_SERIES_ORACLE = [
    ((1e-05, -9.8, 0.25, -0.5, 1.0, 0.3, -0.7), 2.55624999994102560712),
    ((2e-06, 3.0, -0.1, -0.75, 0.6, -1.2, 0.4), -1.11212962962873844885),
    ((5e-05, -2.0, 1.3, 0.2, 1.9, 2.0, -0.5), 1.042352940170698259581),
]

# (k, g, tau, alpha, beta, a, v) -> S
CONIC_S_ORACLE = [
    ((1.0, -9.8, 0.25, -0.5, 1.0, 0.3, 0.6), 2.809873451591756399985),
    ((0.8, 2.5, -0.4, 0.3, -1.2, 1.1, -0.9), 0.8475862345666547940523),
]

# (tau, alpha, beta, a, b) -> F for the (cos, sin) basis
COS_SIN_F_ORACLE = [
    ((0.3, -0.4, 1.1, 0.7, -0.2), 0.3742432104376156312566),
    ((1.8, 0.0, 2.5, -1.0, 0.5), -0.2628257193726145943275),
]

# (tau, alpha, beta, a, v) -> S for the (cos, sin) basis
COS_SIN_S_ORACLE = [
    ((0.3, -0.4, 1.1, 0.7, -0.2), 0.7617445187484954069316),
    ((-0.6, 0.2, 1.5, 1.3, 0.8), -0.5774857029733231786458),
]


def test_free_fall_F_quadratic():
    # line through the endpoints plus g/2 (tau-alpha)(tau-beta)
    for (g, tau, al, be, a, b), want in [
        ((-9.8, 0.5, 0.0, 1.0, 0.0, 0.0), 1.225000000000000088818),
        ((3.0, -0.7, -1.5, 0.4, 1.2, -0.3), -0.7515789473684211479754),
    ]:
        got = free_fall_F(g, tau, al, be, a, b)
        assert got == pytest.approx(want, abs=1e-15)
    assert free_fall_F(-9.8, 0.0, 0.0, 1.0, 0.25, 0.5) == 0.25
    assert free_fall_F(-9.8, 1.0, 0.0, 1.0, 0.25, 0.5) == 0.5


def test_free_fall_F_requires_distinct_endpoints():
    with pytest.raises(ValueError):
        free_fall_F(-9.8, 0.5, 1.0, 1.0, 0.0, 0.0)


def test_free_fall_S():
    # u0 = v - g (beta - alpha) / 2, then x = a + u0 dt + g dt^2 / 2
    g, al, be, a, v = -9.8, 0.2, 1.4, 0.5, -0.3
    u0 = v - 0.5 * g * (be - al)
    for tau in (-1.0, 0.2, 0.8, 1.4, 2.5):
        dt = tau - al
        want = a + u0 * dt + 0.5 * g * dt * dt
        assert abs(free_fall_S(g, tau, al, be, a, v) - want) < 1e-13


def test_conic_F_oracle_sinh_branch():
    for args, want in CONIC_F_ORACLE:
        got = conic_F(ConicParams(args[0], args[1]), *args[2:])
        assert abs(got - want) <= 1e-13 * max(1.0, abs(want))


def test_conic_F_oracle_series_branch():
    for args, want in CONIC_F_SERIES_ORACLE:
        p = ConicParams(args[0], args[1])
        assert abs(p.k * (args[3] - args[4])) < SERIES_SWITCH
        got = conic_F(p, *args[2:])
        assert abs(got - want) <= 1e-13 * max(1.0, abs(want))


def test_conic_branches_agree_at_switch():
    # spec'd handover: both branches agree near |k s| = series_switch
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(300):
        s = rng.uniform(0.3, 2.0)
        ks = SERIES_SWITCH * rng.uniform(0.9, 1.1)
        k = ks / s
        g = rng.uniform(-10, 10)
        al = rng.uniform(-2, 2)
        be = al + s
        tau = rng.uniform(-2, 2)
        a, b = rng.uniform(-2, 2, size=2)
        p_lo = ConicParams(k * 0.999, g)   # below switch: series
        p_hi = ConicParams(k * 1.001, g)   # above switch: sinh
        lo = conic_F(p_lo, tau, al, be, a, b)
        hi = conic_F(p_hi, tau, al, be, a, b)
        # continuity in k bounds the budget: dF/dk ~ O(|g| m^2); the two
        # k values differ by 2e-3 k, so residual stays far under 1e-8
        worst = max(worst, abs(lo - hi) / max(1.0, abs(lo)))
    assert worst < 1e-8


def test_conic_endpoint_exactness():
    p = ConicParams(1.3, -4.0)
    assert abs(conic_F(p, -0.4, -0.4, 0.9, 0.8, -0.2) - 0.8) < 1e-14
    assert abs(conic_F(p, 0.9, -0.4, 0.9, 0.8, -0.2) + 0.2) < 1e-14


def test_conic_small_k_matches_free_fall():
    worst = 0.0
    for (tau, al, be, a, b) in [
        (0.3, -0.5, 1.0, 0.2, -0.7),
        (-1.2, 0.0, 0.8, 1.0, 1.0),
        (1.9, -1.0, 1.5, -0.4, 0.9),
    ]:
        ff = free_fall_F(-9.8, tau, al, be, a, b)
        co = conic_F(ConicParams(1e-8, -9.8), tau, al, be, a, b)
        worst = max(worst, abs(ff - co))
    assert worst < 1e-9


def test_conic_shift_invariance():
    p = ConicParams(1.1, -3.0)
    base = conic_F(p, 0.4, -0.2, 0.9, 0.6, -0.8)
    for c in (-5.0, 0.125, 17.0):
        shifted = conic_F(p, 0.4 + c, -0.2 + c, 0.9 + c, 0.6, -0.8)
        assert abs(shifted - base) < 1e-12


def test_conic_reflection_symmetry():
    p = ConicParams(0.9, 2.0)
    base = conic_F(p, 0.4, -0.2, 0.9, 0.6, -0.8)
    mirrored = conic_F(p, -0.4, 0.2, -0.9, 0.6, -0.8)
    assert mirrored == base


def test_conic_S_oracle():
    for args, want in CONIC_S_ORACLE:
        got = conic_S(ConicParams(args[0], args[1]), *args[2:])
        assert abs(got - want) <= 1e-13 * max(1.0, abs(want))


def test_conic_S_delegates_to_F_off_diagonal():
    p = ConicParams(1.4, -2.5)
    tau, al, be, a, v = 0.7, -0.3, 1.1, 0.5, -0.6
    b = a + v * (be - al)
    assert abs(conic_S(p, tau, al, be, a, v)
               - conic_F(p, tau, al, be, a, b)) < 1e-12


def test_conic_S_zero_k_is_free_fall_S():
    got = conic_S(ConicParams(0.0, -9.8), 0.9, 0.1, 1.2, 0.4, -0.2)
    want = free_fall_S(-9.8, 0.9, 0.1, 1.2, 0.4, -0.2)
    assert abs(got - want) < 1e-13


def test_cos_sin_F_oracle():
    for (tau, al, be, a, b), want in COS_SIN_F_ORACLE:
        got = linear_F(COS_SIN_BASIS, tau, al, be, a, b)
        assert abs(got - want) <= 1e-13 * max(1.0, abs(want))


def test_cos_sin_S_oracle():
    for args, want in COS_SIN_S_ORACLE:
        got = cos_sin_S(*args)
        assert abs(got - want) <= 1e-13 * max(1.0, abs(want))


def test_cos_sin_S_domain():
    with pytest.raises(ValueError):
        cos_sin_S(0.5, 0.0, math.pi, 1.0, 0.0)
    with pytest.raises(ValueError):
        cos_sin_S(0.5, 0.0, 3.5, 1.0, 0.0)


def test_linear_F_against_lineq_solve():
    # independent route: solve the 2x2 system for the basis coefficients
    rng = np.random.default_rng(7)
    for _ in range(50):
        al, be = sorted(rng.uniform(-1.4, 1.4, size=2))
        if be - al < 0.2:
            continue
        a, b = rng.uniform(-2, 2, size=2)
        tau = rng.uniform(-2, 2)
        M = np.array([[math.cos(al), math.sin(al)],
                      [math.cos(be), math.sin(be)]])
        c = np.linalg.solve(M, [a, b])
        want = c[0] * math.cos(tau) + c[1] * math.sin(tau)
        got = linear_F(COS_SIN_BASIS, tau, al, be, a, b)
        assert abs(got - want) < 1e-11


def test_linear_F_affine_basis():
    got = linear_F(AFFINE_BASIS, 0.25, 0.0, 1.0, 2.0, 6.0)
    assert abs(got - 3.0) < 1e-14


def test_degenerate_basis_at_pi():
    with pytest.raises(DegenerateBasis):
        linear_F(COS_SIN_BASIS, 0.5, 0.0, math.pi, 1.0, 1.0)
    # just off the root the system is solvable again
    linear_F(COS_SIN_BASIS, 0.5, 0.0, math.pi - 1e-6, 1.0, 1.0)


def test_degenerate_basis_localized_near_root():
    # the guard must fire within 1e-10 of the root, not merely nearby
    fired_at = None
    for off in (1e-3, 1e-6, 1e-9, 1e-11):
        try:
            linear_F(COS_SIN_BASIS, 0.5, 0.0, math.pi - off, 1.0, 1.0)
        except DegenerateBasis:
            fired_at = off
            break
    assert fired_at is None or fired_at <= 1e-10


def test_neuman_det_vs_numpy():
    rng = np.random.default_rng(11)
    for _ in range(40):
        al, be, tau = rng.uniform(-1.2, 1.2, size=3)
        a, b, val = rng.uniform(-2, 2, size=3)
        rows = np.array([
            [math.cos(al), math.sin(al), a],
            [math.cos(be), math.sin(be), b],
            [math.cos(tau), math.sin(tau), val],
        ])
        want = np.linalg.det(rows)
        got = neuman_det(COS_SIN_BASIS, tau, al, be, a, b, val)
        assert abs(got - want) < 1e-13


def test_neuman_det_perturbation_shift():
    al, be, tau = 0.1, 1.3, 0.7
    a, b = 0.4, -0.9
    val = linear_F(COS_SIN_BASIS, tau, al, be, a, b)
    w = (math.cos(al) * math.sin(be) - math.cos(be) * math.sin(al))
    d0 = neuman_det(COS_SIN_BASIS, tau, al, be, a, b, val)
    d1 = neuman_det(COS_SIN_BASIS, tau, al, be, a, b, val + 1.0)
    assert abs(d0) < 1e-13
    assert d1 - d0 == pytest.approx(w, abs=1e-15)


def test_angelesco_cubic_is_minus_72():
    res = angelesco_residual(lambda t: t ** 3, 0.0, 1.0)
    assert res == -72.0


def test_angelesco_zero_on_conic_members():
    p = ConicParams(1.2, -3.0)

    def member(t):
        return conic_F(p, t, -0.5, 0.75, 0.8, -0.3)

    for (tau0, delta) in [(0.0, 0.3), (-0.7, 0.15), (0.4, 0.5)]:
        res = angelesco_residual(member, tau0, delta)
        x = [member(tau0 + i * delta) for i in range(5)]
        scale = max(abs((x[4] - x[1]) * (x[2] - x[1])),
                    abs((x[3] - x[0]) * (x[3] - x[2])), 1e-30)
        assert abs(res) / scale < 1e-10


def test_angelesco_nonzero_off_family():
    # exp(2 t) solves xdd = 4 x (no forcing offset considered here) but
    # t^3 + t is not a conic graph; the residual must be visibly nonzero
    res = angelesco_residual(lambda t: t ** 3 + t, 0.2, 0.4)
    assert abs(res) > 1e-3


def test_angelesco_rejects_zero_delta():
    with pytest.raises(ValueError):
        angelesco_residual(lambda t: t, 0.0, 0.0)


def test_linear_basis_frozen():
    with pytest.raises(Exception):
        COS_SIN_BASIS.labels = ("a", "b")


def test_conic_params_K():
    assert ConicParams(2.0, 1.0).K == 4.0
