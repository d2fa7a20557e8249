import math

import numpy as np
import pytest

from henonlab.errors import InsufficientRange, InvalidParams, MultiplicityCollapse
from henonlab.paramcantor import (
    CantorTree,
    SyntheticWindowSource,
    Window,
    build_tree,
    calibrate_schedule,
    synthetic_window_oracle,
    tree_dimension,
    validate_tree,
)


def test_oracle_contract_replay():
    src = synthetic_window_oracle(2.0, 4.0, 0.45, distance_scale=0.01, seed=3)
    ell = 2.0**-10
    w = src.query(0.5, ell)
    assert ell / math.sqrt(4.0) <= w.length <= ell * math.sqrt(4.0)
    assert w.distance_to(0.5) <= 0.01 * ell**0.45


def test_oracle_determinism():
    a = synthetic_window_oracle(2.0, 4.0, 0.45, 0.01, seed=9)
    b = synthetic_window_oracle(2.0, 4.0, 0.45, 0.01, seed=9)
    c = synthetic_window_oracle(2.0, 4.0, 0.45, 0.01, seed=10)
    w1, w2, w3 = a.query(0.3, 1e-4), b.query(0.3, 1e-4), c.query(0.3, 1e-4)
    assert (w1.lo, w1.hi) == (w2.lo, w2.hi)
    assert (w1.lo, w1.hi) != (w3.lo, w3.hi)


def test_oracle_length_ladder_statistics():
    src = synthetic_window_oracle(2.0, 4.0, 0.45, 0.01, seed=5)
    rng = np.random.default_rng(0)
    for _ in range(1000):
        a1 = float(rng.uniform(0.0, 1.0))
        k = int(rng.integers(4, 30))
        ell = 2.0**-k
        w = src.query(a1, ell)
        assert ell / 2.0 <= w.length <= ell * 2.0
        assert w.distance_to(a1) <= 0.01 * ell**0.45 + 1e-18


def test_oracle_rejects_bad_params():
    with pytest.raises(InvalidParams):
        synthetic_window_oracle(4.0, 2.0, 0.45, 0.01, 1)  # Lambda >= Lambda'
    with pytest.raises(InvalidParams):
        synthetic_window_oracle(2.0, 4.0, 0.6, 0.01, 1)  # alpha >= 1/2
    with pytest.raises(InvalidParams):
        synthetic_window_oracle(2.0, 4.0, 0.45, -1.0, 1)


@pytest.mark.parametrize("alpha", [0.45, 0.30])
def test_build_validate_dimension(alpha):
    spec = calibrate_schedule(alpha)
    src = SyntheticWindowSource(
        2.0, 4.0, alpha, spec.d_prime / (4.0 * 2.0**alpha), seed=7
    )
    tree = build_tree(src, 4, schedule=spec)
    assert len(tree.levels) == 4
    val = validate_tree(tree)
    assert val.ok, val.issues
    assert all(lv.multiplicity >= 2 for lv in tree.levels)
    est = tree_dimension(tree)
    assert abs(est.value - alpha) <= 0.05


def test_tree_nesting_audit_zero_violations():
    spec = calibrate_schedule(0.45)
    src = SyntheticWindowSource(2.0, 4.0, 0.45, spec.d_prime / (4.0 * 2.0**0.45), seed=11)
    tree = build_tree(src, 4, schedule=spec)
    parents = [tree.root]
    for level in tree.levels:
        for lo, hi in level.intervals:
            assert any(plo <= lo and hi <= phi for plo, phi in parents)
        parents = [tuple(iv) for iv in level.intervals]


def test_adversarial_source_collapses():
    class HugeWindows:
        mode = "synthetic"
        expansion, expansion_hi, alpha, jitter = 2.0, 4.0, 0.45, 1.05

        def query(self, a1, ell):
            return Window(a1 - 0.5, a1 + 0.5)  # distance 0, huge length

    spec = calibrate_schedule(0.45)
    with pytest.raises(MultiplicityCollapse):
        build_tree(HugeWindows(), 4, schedule=spec)


def test_tree_json_round_trip(tmp_path):
    spec = calibrate_schedule(0.45)
    src = SyntheticWindowSource(2.0, 4.0, 0.45, spec.d_prime / (4.0 * 2.0**0.45), seed=2)
    tree = build_tree(src, 4, schedule=spec)
    path = tmp_path / "tree.json"
    tree.save(path)
    loaded = CantorTree.load(path)
    assert validate_tree(loaded).ok
    assert tree_dimension(loaded).value == pytest.approx(tree_dimension(tree).value)


def test_tree_dimension_needs_levels():
    spec = calibrate_schedule(0.45)
    src = SyntheticWindowSource(2.0, 4.0, 0.45, spec.d_prime / (4.0 * 2.0**0.45), seed=2)
    tree = build_tree(src, 2, schedule=spec)
    with pytest.raises(InsufficientRange):
        tree_dimension(tree)


def test_validator_catches_bad_multiplicity():
    spec = calibrate_schedule(0.45)
    src = SyntheticWindowSource(2.0, 4.0, 0.45, spec.d_prime / (4.0 * 2.0**0.45), seed=2)
    tree = build_tree(src, 3, schedule=spec)
    doctored = CantorTree(
        root=tree.root,
        levels=tuple(
            type(lv)(lv.scale_exponent, lv.eps, lv.multiplicity + 5, lv.intervals)
            for lv in tree.levels
        ),
        constants=tree.constants,
    )
    val = validate_tree(doctored)
    assert not val.ok
