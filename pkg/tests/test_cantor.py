import math

import numpy as np
import pytest

from henonlab.cantor import (
    CantorSchedule,
    IntervalCover,
    box_dimension,
    covering_upper_bound,
    falconer_bound,
    gap_lemma,
    gaps_and_bridges,
    middle_thirds_cover,
    thickness,
    two_branch_affine_cover,
)
from henonlab.errors import (
    InsufficientRange,
    InvalidSchedule,
    NonHyperbolicBin,
)


def test_cover_validation():
    with pytest.raises(ValueError):
        IntervalCover(np.array([[0.0, 1.0], [0.5, 2.0]]))  # overlap
    with pytest.raises(ValueError):
        IntervalCover(np.array([[1.0, 0.0]]))  # reversed
    cover = IntervalCover(np.array([[0.0, 0.0], [1.0, 1.0]]))  # points allowed
    assert cover.count == 2


def test_gaps_and_bridges_single_interval():
    cover = IntervalCover(np.array([[0.0, 1.0]]))
    assert gaps_and_bridges(cover) == []


def test_gaps_and_bridges_middle_thirds_depth1():
    cover = middle_thirds_cover(1, (0.0, 1.0))
    records = gaps_and_bridges(cover)
    assert len(records) == 2
    third = 1.0 / 3.0
    left = min(records, key=lambda r: r.endpoint)
    right = max(records, key=lambda r: r.endpoint)
    assert left.bridge == pytest.approx((0.0, third))
    assert right.bridge == pytest.approx((2 * third, 1.0))


def test_gaps_and_bridges_depth2_smallest_gaps():
    # derived by enumeration: every 1/9-gap endpoint has a bridge of length 1/9
    records = gaps_and_bridges(middle_thirds_cover(2, (0.0, 1.0)))
    small = [r for r in records if r.gap_length == pytest.approx(1.0 / 9.0)]
    assert len(small) == 4
    for r in small:
        assert r.bridge_length == pytest.approx(1.0 / 9.0, abs=1e-14)


def test_thickness_middle_thirds_exact():
    for depth in range(1, 11):
        rep = thickness(middle_thirds_cover(depth))
        assert abs(rep.tau - 1.0) <= 1e-12


def test_thickness_ratio_04_affine():
    # derived by enumeration at several depths: tau = ratio/(1-2*ratio) = 2
    for depth in range(1, 6):
        rep = thickness(two_branch_affine_cover(0.4, depth))
        assert abs(rep.tau - 2.0) <= 1e-12


def test_thickness_gapless_is_infinite():
    assert thickness(IntervalCover(np.array([[0.0, 1.0]]))).tau == math.inf


def test_thickness_witness_consistency():
    rep = thickness(two_branch_affine_cover(0.45, 4))
    g = rep.witness_gap
    b = rep.witness_bridge
    assert abs((b[1] - b[0]) / (g[1] - g[0]) - rep.tau) < 1e-12


def test_thickness_affine_invariance():
    base = two_branch_affine_cover(0.37, 5)
    tau0 = thickness(base).tau
    for scale, offset in ((2.7, -1.3), (-0.4, 5.0), (1e-3, 0.0)):
        tau = thickness(base.affine_image(scale, offset)).tau
        assert abs(tau - tau0) <= 1e-12 * max(1.0, tau0)


def test_gap_lemma_intersect():
    k1 = two_branch_affine_cover(0.45, 8, (0.0, 1.0))
    k2 = two_branch_affine_cover(0.45, 8, (0.5, 1.5))
    rep = gap_lemma(k1, k2)
    assert rep.verdict == "Intersect"
    assert rep.product == pytest.approx(4.5**2)


def test_gap_lemma_k1_in_gap_of_k2():
    k1 = two_branch_affine_cover(0.45, 5, (0.46, 0.54))
    # middle-thirds scaled so its central gap is exactly (0.4, 0.6)
    k2 = middle_thirds_cover(5, (0.2, 0.8))
    rep = gap_lemma(k1, k2)
    assert rep.verdict == "K1InGapOfK2"
    rep2 = gap_lemma(k2, k1)
    assert rep2.verdict == "K2InGapOfK1"


def test_gap_lemma_hypothesis_fails():
    k1 = middle_thirds_cover(6)
    k2 = middle_thirds_cover(6, (0.5, 1.5))
    rep = gap_lemma(k1, k2)
    assert rep.verdict == "HypothesisFails"
    assert rep.product == pytest.approx(1.0)
    assert rep.overlap  # finite-depth status still attached


def test_gap_lemma_disjoint_hulls():
    k1 = two_branch_affine_cover(0.45, 4, (0.0, 1.0))
    k2 = two_branch_affine_cover(0.45, 4, (2.0, 3.0))
    assert gap_lemma(k1, k2).verdict == "DisjointHulls"


def test_box_dimension_middle_thirds():
    est = box_dimension([middle_thirds_cover(10)])
    assert est.value == pytest.approx(math.log(2) / math.log(3), abs=0.01)
    assert est.diagnostics["r_squared"] > 0.99


def test_box_dimension_point_and_interval():
    point = IntervalCover(np.array([[0.5, 0.5]]), depth=0)
    assert box_dimension([point]).value == pytest.approx(0.0, abs=0.01)
    full = IntervalCover(np.array([[0.0, 1.0]]), depth=0)
    assert box_dimension([full]).value == pytest.approx(1.0, abs=0.01)


def test_box_dimension_needs_range():
    with pytest.raises(InsufficientRange):
        box_dimension([])


def test_falconer_matches_closed_form():
    # oracle: value at level l is ((l-1) log 2) / (l log 3 - log 2)
    L = 20
    sched = CantorSchedule.from_values([2] * L, [3.0**-l for l in range(1, L + 1)])
    est = falconer_bound(sched)
    seq = est.diagnostics["per_level"]
    for i, v in enumerate(seq):
        l = i + 2
        assert v == pytest.approx(
            ((l - 1) * math.log(2)) / (l * math.log(3) - math.log(2)), rel=1e-12
        )
    tail_start = est.diagnostics["tail_start_level"]
    assert est.value == pytest.approx(min(seq[tail_start - 2 :]))


def test_falconer_limit_log2_log3():
    # with enough levels the bound reaches log2/log3 within 1e-6 (log space)
    L = 1_000_000
    log_m = np.full(L, math.log(2.0))
    log_eps = -np.arange(1, L + 1) * math.log(3.0)
    est = falconer_bound(CantorSchedule(log_m, log_eps))
    assert abs(est.value - math.log(2) / math.log(3)) < 1e-6


def test_falconer_multiplicity_one_gives_zero():
    sched = CantorSchedule.from_values([1] * 10, [2.0**-l for l in range(1, 11)])
    assert falconer_bound(sched).value == pytest.approx(0.0)


def test_falconer_paper_schedule_recovers_alpha():
    for alpha in (0.30, 0.45):
        sched = CantorSchedule.from_paper_formula(alpha, 2.0, 8, 2.0)
        est = falconer_bound(sched)
        assert abs(est.value - alpha) < 0.02


def test_schedule_validation():
    with pytest.raises(InvalidSchedule):
        CantorSchedule.from_values([2, 2], [0.1, 0.2])  # gaps must decrease
    with pytest.raises(InvalidSchedule):
        CantorSchedule.from_values([0.5, 2], [0.2, 0.1])  # multiplicity >= 1
    with pytest.raises(InsufficientRange):
        falconer_bound(CantorSchedule.from_values([2], [0.5]))  # needs 2 levels
    with pytest.raises(InvalidSchedule):
        # m * eps >= 1 makes the denominator vanish
        falconer_bound(CantorSchedule.from_values([4, 4], [0.5, 0.25]))


def test_covering_upper_bound_values():
    est = covering_upper_bound(0.04, [(100, None)])
    assert est.value == pytest.approx(math.log(4.04) / (2 * math.log(4.0)), rel=1e-12)
    assert est.value == pytest.approx(0.5036, abs=1e-3)
    est2 = covering_upper_bound(1.0, [(3, None)])
    assert est2.value == pytest.approx(math.log(4) / (2 * math.log(3)), rel=1e-12)


def test_covering_upper_bound_trend_to_half():
    values = []
    for eps in (0.1, 0.01, 0.001):
        i = round(4.0 / eps)
        values.append(covering_upper_bound(eps, [(i, None)]).value)
    assert all(v > 0.5 for v in values)
    assert values[0] > values[1] > values[2]


def test_covering_upper_bound_decreasing_in_i():
    eps = 1.0
    s = [covering_upper_bound(eps, [(i, None)]).value for i in (2, 3, 10, 100)]
    assert all(s[k] > s[k + 1] for k in range(len(s) - 1))


def test_covering_upper_bound_rejects_nonhyperbolic():
    with pytest.raises(NonHyperbolicBin):
        covering_upper_bound(0.1, [(5, None)])  # 0.5 <= 1
