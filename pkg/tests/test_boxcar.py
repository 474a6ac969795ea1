"""Forward solver, boxcar integrals and the endpoint Jacobian."""

import json
import math

import numpy as np
import pytest

from turbox import (
    BoxcarSet,
    Multipliers,
    NearBifurcationError,
    ReservoirPair,
    ValidationError,
    boxcar_current,
    boxcar_integrals,
    epsilon_zero,
    g_noise,
    multiplier_jacobian,
    residual,
    solve_boxcar,
)
from conftest import random_reservoir

INF = math.inf


# ---------------------------------------------------------------------------
# BoxcarSet data model
# ---------------------------------------------------------------------------


def test_boxcar_validation():
    with pytest.raises(ValidationError):
        BoxcarSet(((1.0, 1.0),))  # empty interval
    with pytest.raises(ValidationError):
        BoxcarSet(((0.0, 2.0), (1.0, 3.0)))  # overlap
    with pytest.raises(ValidationError):
        BoxcarSet(((0.0, INF), (5.0, 6.0)))  # inner +inf
    with pytest.raises(ValidationError):
        BoxcarSet(((0.0, 1.0), (-INF, 2.0)))
    B = BoxcarSet(((-INF, 0.0), (1.0, 2.0), (3.0, INF)))
    assert B.signature() == (3, True, True)
    assert B.finite_endpoints() == [0.0, 1.0, 2.0, 3.0]


def test_boxcar_indicator():
    B = BoxcarSet(((-1.0, 0.5), (2.0, INF)))
    e = np.array([-2.0, -1.0, 0.0, 1.0, 2.0, 100.0])
    assert np.array_equal(B.indicator(e), [0.0, 1.0, 1.0, 0.0, 1.0, 1.0])
    assert B.indicator(0.25) == 1.0


def test_boxcar_json_round_trip():
    B = BoxcarSet(((-INF, -1.0), (0.0, 2.5)))
    text = json.dumps(B.to_json())
    assert '"-inf"' in text
    assert BoxcarSet.from_json(text) == B
    assert BoxcarSet.from_json(B.to_json()) == B


# ---------------------------------------------------------------------------
# residual
# ---------------------------------------------------------------------------


def test_residual_at_eps0_is_g(fig2_res, rng):
    e0 = epsilon_zero(fig2_res)
    for _ in range(5):
        m = Multipliers(float(rng.uniform(-5, 5)), float(rng.uniform(-5, 5)))
        assert residual(fig2_res, m, e0) == pytest.approx(
            g_noise(fig2_res, e0), rel=1e-14
        )
        assert residual(fig2_res, m, e0) > 0.0


def test_residual_zero_multipliers_positive(fig2_res):
    m = Multipliers(0.0, 0.0)
    grid = np.linspace(-30.0, 30.0, 301)
    r = residual(fig2_res, m, grid)
    assert np.all(r[np.isfinite(grid)] >= 0.0)


def test_residual_vanishes_at_infinity(fig2_res):
    m = Multipliers(3.0, -2.0)
    assert residual(fig2_res, m, INF) == 0.0
    assert residual(fig2_res, m, -INF) == 0.0


# ---------------------------------------------------------------------------
# solve_boxcar
# ---------------------------------------------------------------------------


def test_zero_multipliers_empty(fig2_res):
    assert solve_boxcar(fig2_res, Multipliers(0.0, 0.0)).is_empty


def test_identical_reservoirs_always_empty():
    res = ReservoirPair(1.0, 1.0, 0.2, 0.2)
    assert solve_boxcar(res, Multipliers(5.0, -3.0)).is_empty


def test_large_multiplier_compact_limit(fig2_res):
    # lam -> -inf at fixed eps1 = -eta/lam: compact boxcar [eps0, eps1]
    e0, e1 = 0.875, 2.0
    lam = -1e6
    B = solve_boxcar(fig2_res, Multipliers(lam, -lam * e1))
    assert B.signature() == (1, False, False)
    (a, b), = B.intervals
    assert a == pytest.approx(e0, abs=1e-3)
    assert b == pytest.approx(e1, abs=1e-3)
    assert a > e0  # R(eps0) = g(eps0) > 0: eps0 itself is never inside


def test_large_multiplier_complement_limit(fig2_res):
    e1 = 2.0
    lam = 1e6
    B = solve_boxcar(fig2_res, Multipliers(lam, -lam * e1))
    assert B.signature() == (2, True, True)
    assert B.intervals[0][1] == pytest.approx(0.875, abs=1e-3)
    assert B.intervals[1][0] == pytest.approx(e1, abs=1e-3)


def test_solution_set_signs(fig2_res, rng):
    # R < 0 strictly inside intervals, R > 0 strictly between them
    # (checked where the fields are representable, |eps| <= ~40/beta)
    w_lo, w_hi = -44.0, 9.5
    for _ in range(10):
        m = Multipliers(float(rng.uniform(-30, 30)), float(rng.uniform(-30, 30)))
        B = solve_boxcar(fig2_res, m)
        for a, b in B.intervals:
            aa, bb = max(a, w_lo), min(b, w_hi)
            if aa >= bb:
                continue
            assert residual(fig2_res, m, 0.5 * (aa + bb)) < 0.0
        for (a1, b1), (a2, b2) in zip(B.intervals[:-1], B.intervals[1:]):
            gap_mid = 0.5 * (b1 + a2)
            if w_lo <= gap_mid <= w_hi:
                assert residual(fig2_res, m, gap_mid) > 0.0


def test_endpoint_residual_tolerance(fig2_res, rng):
    for _ in range(5):
        m = Multipliers(float(rng.uniform(-10, 10)), float(rng.uniform(-10, 10)))
        B = solve_boxcar(fig2_res, m, xtol=1e-12)
        for e in B.finite_endpoints():
            # R changes by ~|R'| * xtol across the root
            assert abs(residual(fig2_res, m, e)) < 1e-9 * (1.0 + abs(m.lam))


def test_endpoints_never_eps0(fig2_res, rng):
    e0 = epsilon_zero(fig2_res)
    for _ in range(10):
        m = Multipliers(float(rng.uniform(-50, 50)), float(rng.uniform(-50, 50)))
        for e in solve_boxcar(fig2_res, m).finite_endpoints():
            assert abs(e - e0) > 1e-10


# ---------------------------------------------------------------------------
# integrals
# ---------------------------------------------------------------------------


def test_integrals_empty():
    res = ReservoirPair(1.0, 2.0, 0.0, 0.5)
    assert boxcar_integrals(res, BoxcarSet(())) == (0.0, 0.0, 0.0)


def test_integrals_full_line_equal_beta():
    res = ReservoirPair(1.0, 1.0, -1.0, 1.0)
    I, J, V = boxcar_integrals(res, BoxcarSet(((-INF, INF),)))
    assert I == pytest.approx(-2.0, abs=1e-12)
    assert V == pytest.approx(2.0, rel=1e-10)  # 2 / beta
    assert J == pytest.approx(0.0, abs=1e-10)


def test_integrals_degenerate_width(fig2_res):
    vals = []
    for w in (1e-2, 1e-4, 1e-6):
        I, J, V = boxcar_integrals(fig2_res, BoxcarSet(((1.0, 1.0 + w),)))
        vals.append((abs(I), abs(J), abs(V)))
    assert vals[0] > vals[1] > vals[2]
    assert all(v < 1e-5 for v in vals[2])


def test_j_dominated_by_eps0_identity(fig2_res, rng):
    # J - eps0 I = integral of (eps - eps0) delta_f >= 0 pointwise
    e0 = epsilon_zero(fig2_res)
    from conftest import random_boxcar

    for _ in range(10):
        B = random_boxcar(rng, fig2_res)
        I, J, _ = boxcar_integrals(fig2_res, B)
        assert J - e0 * I >= -1e-10


# ---------------------------------------------------------------------------
# Jacobian
# ---------------------------------------------------------------------------


def test_jacobian_empty_is_zero(fig2_res):
    jac = multiplier_jacobian(fig2_res, Multipliers(0.0, 0.0), BoxcarSet(()))
    assert np.array_equal(jac, np.zeros((2, 2)))


def _random_regular_case(rng):
    while True:
        res = random_reservoir(rng)
        m = Multipliers(float(rng.uniform(-20, 20)), float(rng.uniform(-20, 20)))
        try:
            B = solve_boxcar(res, m)
        except Exception:
            continue
        if B.is_empty or B.signature() == (1, True, True):
            continue
        try:
            multiplier_jacobian(res, m, B, derivative_floor=1e-6)
        except NearBifurcationError:
            continue
        return res, m, B


def _fd_jacobian(res, m, h_eta, h_lam):
    def IJ(lam, eta):
        B = solve_boxcar(res, Multipliers(lam, eta))
        I, J, _ = boxcar_integrals(res, B, abstol=1e-12, reltol=1e-11)
        return np.array([I, J])

    col_eta = (IJ(m.lam, m.eta + h_eta) - IJ(m.lam, m.eta - h_eta)) / (2 * h_eta)
    col_lam = (IJ(m.lam + h_lam, m.eta) - IJ(m.lam - h_lam, m.eta)) / (2 * h_lam)
    return np.column_stack([col_eta, col_lam])


def test_jacobian_matches_finite_differences(rng):
    for _ in range(20):
        res, m, B = _random_regular_case(rng)
        jac = multiplier_jacobian(res, m, B)
        h = 1e-5 * max(1.0, abs(m.lam), abs(m.eta))
        fd = _fd_jacobian(res, m, h, h)
        scale = np.abs(jac).max()
        assert np.allclose(jac, fd, rtol=1e-4, atol=1e-4 * scale)
        assert jac[0, 1] == jac[1, 0]  # symmetric off-diagonal
        assert jac[0, 0] > 0.0  # dI/deta
        assert jac[1, 1] > 0.0  # dJ/dlam


def test_jacobian_derivative_floor(fig2_res):
    # the implicit-function-theorem weights are refused when |R'| at an
    # endpoint falls below the floor (double-root hypothesis failure)
    m = Multipliers(-8.0, 11.2)
    B = solve_boxcar(fig2_res, m)
    assert not B.is_empty
    multiplier_jacobian(fig2_res, m, B)  # fine at the default floor
    with pytest.raises(NearBifurcationError):
        multiplier_jacobian(fig2_res, m, B, derivative_floor=1e6)


def test_monotonicity_along_multipliers(fig2_res):
    # I nondecreasing in eta at fixed lam; J nondecreasing in lam at fixed eta
    lam = 0.7
    Is = []
    for eta in np.linspace(-4.0, 4.0, 33):
        B = solve_boxcar(fig2_res, Multipliers(lam, float(eta)))
        Is.append(boxcar_current(fig2_res, B))
    assert all(b - a >= -1e-11 for a, b in zip(Is[:-1], Is[1:]))

    eta = 1.3
    Js = []
    for lam in np.linspace(-4.0, 4.0, 33):
        B = solve_boxcar(fig2_res, Multipliers(float(lam), eta))
        _, J, _ = boxcar_integrals(fig2_res, B)
        Js.append(J)
    assert all(b - a >= -1e-9 for a, b in zip(Js[:-1], Js[1:]))
