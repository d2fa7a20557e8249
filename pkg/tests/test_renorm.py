import math

import numpy as np
import pytest

from henonlab.core import HenonLikeFamily
from henonlab.errors import NoFixedPoint, OrbitEscaped, RankDeficientFit
from henonlab.renorm import (
    RenormalizedFamily,
    conditions_c1_c2,
    fit_normal_form,
    renormalized_fixed_points,
    return_map,
)


def _synthetic_renormalized(a_hat: float, det: float) -> RenormalizedFamily:
    return RenormalizedFamily(
        n=6,
        chart={"xi": 1.0, "fold_x": 0.0, "y_scale": 1.0, "y_offset": 0.0},
        delta=0.0,
        det_estimate=det,
        a_map=(1.0, a_hat),
        fitted={"xi": 1.0, "theta": 1.0, "gamma": 1.0, "zeta": det, "q": 0.0,
                "const": 0.0, "linear": 0.0, "a_mid": 0.0},
    )


def test_fit_recovers_exact_model():
    # fitting a one-step pure family to itself: residual at machine scale
    fam = HenonLikeFamily.pure(0.3)
    sm = return_map(
        fam, -2.0, 0, box=((0.0, 0.0), 0.3), grid=21,
        a_values=np.linspace(-2.05, -1.95, 5), n_transit=1,
    )
    rf = fit_normal_form(sm, min_grid=20)
    assert rf.delta < 1e-10
    assert rf.det_estimate == pytest.approx(0.3, rel=1e-12)
    assert rf.fitted["xi"] == pytest.approx(1.0, rel=1e-10)
    assert rf.fitted["gamma"] == pytest.approx(1.0, rel=1e-10)
    assert rf.fitted["theta"] == pytest.approx(1.0, rel=1e-10)
    assert rf.fitted["zeta"] == pytest.approx(0.3, rel=1e-10)


def test_chart_round_trip():
    fam = HenonLikeFamily.pure(1e-2)
    rf = fit_normal_form(return_map(fam, -2.0, 4))
    for p in ((0.01, 1e-6), (-0.004, -2e-7), (0.0, 0.0)):
        q = rf.chart_inverse(rf.chart_forward(p))
        assert math.hypot(q[0] - p[0], q[1] - p[1]) < 1e-10


def test_chart_normalizes_quadratic_coefficient():
    fam = HenonLikeFamily.pure(1e-2)
    sm = return_map(fam, -2.0, 4)
    rf = fit_normal_form(sm)
    # refit in chart coordinates: quadratic coefficient must be 1
    u = rf.chart["xi"] * (sm.grid[:, 0] - rf.chart["fold_x"])
    u_out = rf.chart["xi"] * (sm.images[len(sm.a_values) // 2, :, 0] - rf.chart["fold_x"])
    coeffs = np.polyfit(u, u_out, 2)
    assert coeffs[0] == pytest.approx(1.0, abs=1e-6)


def test_determinant_decay_rate():
    fam = HenonLikeFamily.pure(1e-2)
    dets = []
    for n in range(3, 6):
        rf = fit_normal_form(return_map(fam, -2.0, n))
        dets.append(rf.det_estimate)
        assert rf.det_estimate == pytest.approx(1e-2 ** (n + 1), rel=1e-10)
    slope = np.polyfit(range(3, 6), np.log(dets), 1)[0]
    assert slope == pytest.approx(math.log(1e-2), rel=0.05)


def test_delta_decreases_b0():
    # wide chart window keeps the genuine residual above the float noise floor
    fam = HenonLikeFamily.pure(0.0)
    deltas = [
        fit_normal_form(return_map(fam, -2.0, n, chart_halfwidth=0.3)).delta
        for n in (4, 6, 8)
    ]
    assert deltas[0] > deltas[1] > deltas[2]


def test_determinant_chain_matches_finite_differences():
    # conditioning allows a finite-difference cross-check at short compositions
    fam = HenonLikeFamily.pure(0.3)
    sm = return_map(fam, -2.0, 2, grid=33)
    rf = fit_normal_form(sm)
    g = 33
    ia = len(sm.a_values) // 2
    a = sm.a_values[ia]
    h_x = sm.grid[g + 1, 0] - sm.grid[1, 0] if False else None
    # central differences on the sampled grid interior
    pts = sm.grid.reshape(g, g, 2)
    out = sm.images[ia].reshape(g, g, 2)
    i, j = g // 2, g // 2
    dx = pts[i, j + 1, 0] - pts[i, j - 1, 0]
    dy = pts[i + 1, j, 1] - pts[i - 1, j, 1]
    j11 = (out[i, j + 1, 0] - out[i, j - 1, 0]) / dx
    j21 = (out[i, j + 1, 1] - out[i, j - 1, 1]) / dx
    j12 = (out[i + 1, j, 0] - out[i - 1, j, 0]) / dy
    j22 = (out[i + 1, j, 1] - out[i - 1, j, 1]) / dy
    det_fd = abs(j11 * j22 - j12 * j21)
    assert det_fd == pytest.approx(rf.det_estimate, rel=0.01)


def test_unimodal_restriction_single_fold():
    # b = 0, n = 2: the y = 0 section of the return map is unimodal on the box
    fam = HenonLikeFamily.pure(0.0)
    sm = return_map(fam, -2.0, 2, grid=33)
    g = 33
    out = sm.images[len(sm.a_values) // 2].reshape(g, g, 2)
    row = out[g // 2, :, 0]
    d = np.diff(row)
    sign_changes = np.sum(np.diff(np.sign(d[np.abs(d) > 1e-14])) != 0)
    assert sign_changes == 1


def test_grid_refinement_stability():
    fam = HenonLikeFamily.pure(1e-2)
    xi33 = fit_normal_form(return_map(fam, -2.0, 5, grid=33)).fitted["xi"]
    xi65 = fit_normal_form(return_map(fam, -2.0, 5, grid=65)).fitted["xi"]
    assert abs(xi65 - xi33) / abs(xi33) < 0.01


def test_single_point_grid_accepted_fit_rejected():
    fam = HenonLikeFamily.pure(1e-2)
    sm = return_map(fam, -2.0, 3, grid=1)
    assert sm.grid.shape[0] == 1
    with pytest.raises(RankDeficientFit):
        fit_normal_form(sm)


def test_orbit_escape_detected():
    fam = HenonLikeFamily.pure(0.0)
    with pytest.raises(OrbitEscaped):
        return_map(fam, 0.5, 4, box=((0.0, 0.0), 0.5), grid=9)


def test_dissipative_grid_completes():
    fam = HenonLikeFamily.pure(1e-3)
    sm = return_map(fam, -2.0, 6, grid=33)
    assert sm.images.shape == (5, 33 * 33, 2)


def test_conditions_arithmetic_on_synthetic():
    # arithmetic oracle on the quoted inequalities, frozen from direct eval
    gap = 1e-13
    b = 1e-3
    b_n = 1e-27
    rf = _synthetic_renormalized(a_hat=0.0, det=b_n)
    rep = conditions_c1_c2(rf, b, margin=0.1, beta_minus=gap)
    assert rep.c1 == (0.0 < gap < 0.1 * b**4)
    assert rep.c2 == (0.0 < b_n < 0.1 * gap * gap)
    assert rep.c1 and rep.c2


def test_conditions_fail_cases():
    rf = _synthetic_renormalized(a_hat=0.0, det=0.0)
    rep = conditions_c1_c2(rf, 1e-3, margin=0.1, beta_minus=1e-13)
    assert not rep.c2  # strict positivity of the determinant
    rep2 = conditions_c1_c2(rf, 1e-3, margin=0.1, beta_minus=-1e-13)
    assert not rep2.c1  # sign condition


def test_renormalized_fixed_points():
    bm, bp = renormalized_fixed_points(-2.0)
    assert bp == pytest.approx(2.0)
    assert bm == pytest.approx(-2.0)
    with pytest.raises(NoFixedPoint):
        renormalized_fixed_points(0.3)
