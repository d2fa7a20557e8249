"""Nested parameter-Cantor construction from stability-window data.

Each level subdivides the surviving intervals, queries a window source at
the internal endpoints, and keeps windows of the target scale separated by
the level's gap bound.  The recorded (multiplicity, gap) schedule feeds the
nested-construction dimension bound.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .cantor import CantorSchedule, DimensionEstimate, falconer_bound
from .errors import (
    InsufficientRange,
    InvalidParams,
    MultiplicityCollapse,
    ResolutionFloor,
)


@dataclass(frozen=True)
class Window:
    lo: float
    hi: float

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def distance_to(self, a: float) -> float:
        return max(0.0, max(self.lo - a, a - self.hi))


class SyntheticWindowSource:
    """Deterministic stand-in for measured stability windows.

    For a query (a1, target length ell) it emits a window of length within
    [ell/jitter, ell*jitter] (jitter <= sqrt(Lambda')) at distance at most
    D * ell^alpha from a1.  Identical queries yield identical windows.
    """

    mode = "synthetic"

    def __init__(self, expansion, expansion_hi, alpha, distance_scale, seed, jitter=1.05):
        if not 1.0 < expansion < expansion_hi:
            raise InvalidParams("need 1 < Lambda < Lambda'")
        if not 0.0 < alpha < 0.5:
            raise InvalidParams("need 0 < alpha < 1/2")
        if distance_scale <= 0.0:
            raise InvalidParams("distance scale D must be positive")
        if not 1.0 <= jitter <= math.sqrt(expansion_hi):
            raise InvalidParams("jitter must lie in [1, sqrt(Lambda')]")
        self.expansion = float(expansion)
        self.expansion_hi = float(expansion_hi)
        self.alpha = float(alpha)
        self.distance_scale = float(distance_scale)
        self.seed = int(seed)
        self.jitter = float(jitter)

    def _rng(self, a1: float, ell: float) -> np.random.Generator:
        key = hashlib.blake2b(
            struct.pack("<qdd", self.seed, a1, ell), digest_size=8
        ).digest()
        return np.random.default_rng(int.from_bytes(key, "little"))

    def query(self, a1: float, ell: float) -> Window:
        rng = self._rng(a1, ell)
        length = ell * self.jitter ** rng.uniform(-1.0, 1.0)
        gap = rng.uniform(0.0, 1.0) * self.distance_scale * ell**self.alpha
        if rng.uniform() < 0.5:
            return Window(a1 + gap, a1 + gap + length)
        return Window(a1 - gap - length, a1 - gap)


def synthetic_window_oracle(
    expansion: float,
    expansion_hi: float,
    alpha: float,
    distance_scale: float,
    seed: int,
    jitter: float = 1.05,
) -> SyntheticWindowSource:
    """Deterministic synthetic window source with the stated contract."""
    return SyntheticWindowSource(expansion, expansion_hi, alpha, distance_scale, seed, jitter)


class MeasuredWindowSource:
    """Window source backed by a measured stability-window dataset."""

    mode = "measured"

    def __init__(self, windows, tangency_parameter: float):
        self.windows = sorted(windows, key=lambda w: w.a_lo)
        self.tangency_parameter = float(tangency_parameter)

    def query(self, a1: float, ell: float):
        lo_band, hi_band = ell / 4.0, ell * 4.0
        best = None
        for w in self.windows:
            if not lo_band <= w.length <= hi_band:
                continue
            d = max(0.0, max(w.a_lo - a1, a1 - w.a_hi))
            if best is None or d < best[0]:
                best = (d, w)
        if best is None:
            return None
        return Window(best[1].a_lo, best[1].a_hi)


@dataclass(frozen=True)
class TreeLevel:
    scale_exponent: int  # n_l
    eps: float
    multiplicity: int  # m_l: min over parents of accepted children
    intervals: np.ndarray  # (k, 2), sorted


@dataclass(frozen=True)
class CantorTree:
    root: tuple[float, float]
    levels: tuple[TreeLevel, ...]
    constants: dict
    resolution_floor_hit: bool = False

    def to_json(self) -> dict:
        return {
            "root": list(self.root),
            "constants": self.constants,
            "resolution_floor_hit": self.resolution_floor_hit,
            "levels": [
                {
                    "n_l": lv.scale_exponent,
                    "eps_l": lv.eps,
                    "m_l": lv.multiplicity,
                    "intervals": [[float(l), float(h)] for l, h in lv.intervals],
                }
                for lv in self.levels
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "CantorTree":
        return cls(
            root=tuple(data["root"]),
            levels=tuple(
                TreeLevel(
                    scale_exponent=int(lv["n_l"]),
                    eps=float(lv["eps_l"]),
                    multiplicity=int(lv["m_l"]),
                    intervals=np.asarray(lv["intervals"], dtype=float),
                )
                for lv in data["levels"]
            ),
            constants=data.get("constants", {}),
            resolution_floor_hit=bool(data.get("resolution_floor_hit", False)),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "CantorTree":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True)
class ScheduleSpec:
    """Desk-scale level plan: scale exponents, gap constant, child caps."""

    scale_exponents: tuple[int, ...]
    d_prime: float
    caps: tuple[int, ...]
    predicted_value: float


def calibrate_schedule(
    alpha: float,
    levels: int = 4,
    expansion: float = 2.0,
    expansion_hi: float = 4.0,
    root_length: float = 1.0,
    jitter: float = 1.05,
    max_exponent: int = 46,
) -> ScheduleSpec:
    """Choose level scales, gap constant, and child caps targeting alpha.

    The asymptotic construction recovers alpha only with super-exponentially
    growing scales, which no float representation survives; this picks a
    finite plan whose nested-construction bound evaluates near alpha while
    every level keeps at least two (capped) children per parent.
    """
    logL = math.log(expansion)
    best = None
    n1_range = range(2, 7)
    ratio_grid = [1.8, 2.0, 2.2, 2.5, 2.8, 3.2, 3.6]
    d_grid = np.geomspace(0.004, 0.25, 28)
    for n1 in n1_range:
        for rho in ratio_grid:
            ns = [n1]
            for _ in range(levels - 2):
                ns.append(max(ns[-1] + 2, int(round(ns[-1] * rho))))
            for n_last_bump in (0, 4, 8, 14, 22):
                n_last = min(max_exponent, ns[-1] * 2 + n_last_bump)
                if n_last <= ns[-1] + 2:
                    continue
                exps = ns + [n_last]
                for d_prime in d_grid:
                    spec = _plan_caps(
                        alpha, exps, float(d_prime), expansion, expansion_hi,
                        root_length, jitter, logL,
                    )
                    if spec is None:
                        continue
                    err = abs(spec.predicted_value - alpha)
                    if best is None or err < best[0]:
                        best = (err, spec)
    if best is None:
        raise InvalidParams(f"no feasible desk schedule for alpha={alpha}")
    return best[1]


def _plan_caps(alpha, exps, d_prime, expansion, expansion_hi, root_length, jitter, logL):
    levels = len(exps)
    supplies = []
    for l, n_l in enumerate(exps, start=1):
        parent = root_length if l == 1 else expansion ** (-exps[l - 2]) / jitter
        ell = expansion ** (-n_l)
        eps_l = d_prime * expansion ** (-alpha * n_l)
        cell = 3.0 * d_prime * expansion ** (-alpha * n_l)
        spacing = max(cell, jitter * ell + eps_l)
        supplies.append(parent / spacing)
    caps_max = [max(0, int(math.floor(0.8 * s)) - 1) for s in supplies]
    if any(c < 2 for c in caps_max):
        return None
    # window length floor: double precision on positions of order root_length
    if expansion ** (-exps[-1]) < 64.0 * np.finfo(float).eps * root_length:
        return None
    k_last = 2
    den = alpha * exps[-1] * logL - math.log(k_last * d_prime)
    target = alpha * den
    best = None
    for k1 in range(2, min(caps_max[0], 24) + 1):
        for k2 in range(2, min(caps_max[1], 24) + 1):
            for k3 in range(2, min(caps_max[2], 24) + 1):
                num = math.log(k1 * k2 * k3)
                err = abs(num - target)
                if best is None or err < best[0]:
                    best = (err, (k1, k2, k3))
    if best is None:
        return None
    caps = (*best[1], k_last)
    value = math.log(caps[0] * caps[1] * caps[2]) / den
    if len(exps) != 4:
        # generic fallback: greedy per-level caps for deeper plans
        caps = tuple(min(c, 8) for c in caps_max[:-1]) + (2,)
        num = sum(math.log(c) for c in caps[:-1])
        value = num / den
    return ScheduleSpec(tuple(exps), d_prime, caps, value)


def build_tree(
    source,
    levels_target: int,
    schedule: ScheduleSpec | None = None,
    root: tuple[float, float] = (0.0, 1.0),
    expansion: float | None = None,
) -> CantorTree:
    """Run the inductive construction against the window source.

    Each parent interval is partitioned into cells of width about three gap
    bounds; the source is queried at every internal endpoint and windows are
    accepted leftmost-first when they lie inside the parent, have the target
    scale, and respect the separation bound, up to the level's cap.
    """
    if schedule is None:
        if source.mode != "synthetic":
            raise InvalidParams("a schedule is required for measured sources")
        schedule = calibrate_schedule(
            source.alpha,
            levels_target,
            source.expansion,
            source.expansion_hi,
            root[1] - root[0],
            source.jitter,
        )
    if levels_target > len(schedule.scale_exponents):
        raise InvalidParams("schedule has fewer levels than requested")
    Lam = expansion if expansion is not None else getattr(source, "expansion", 2.0)
    c_prime = math.sqrt(getattr(source, "expansion_hi", 4.0))
    alpha = getattr(source, "alpha", None)
    floor_hit = False

    parents = [tuple(root)]
    levels: list[TreeLevel] = []
    eps_floor = 64.0 * np.finfo(float).eps * max(abs(root[0]), abs(root[1]), 1.0)
    for l in range(1, levels_target + 1):
        n_l = schedule.scale_exponents[l - 1]
        ell = Lam ** (-n_l)
        if ell < eps_floor:
            floor_hit = True
            break
        if alpha is not None:
            eps_l = schedule.d_prime * Lam ** (-alpha * n_l)
        else:
            eps_l = schedule.d_prime * ell ** 0.5
        cap = schedule.caps[l - 1]
        children_per_parent = []
        accepted_all = []
        for plo, phi in parents:
            cell = 3.0 * eps_l
            count = max(2, int(math.floor((phi - plo) / cell)))
            endpoints = [plo + (phi - plo) * k / count for k in range(1, count)]
            accepted: list[Window] = []
            for a1 in endpoints:
                if len(accepted) >= cap:
                    break
                w = source.query(a1, ell)
                if w is None:
                    continue
                if w.lo < plo or w.hi > phi:
                    continue
                if not ell / c_prime <= w.length <= ell * c_prime:
                    continue
                if accepted and w.lo - accepted[-1].hi < eps_l:
                    continue
                accepted.append(w)
            if len(accepted) < 2:
                raise MultiplicityCollapse(
                    f"level {l}: parent ({plo}, {phi}) yielded {len(accepted)} children"
                )
            children_per_parent.append(len(accepted))
            accepted_all.extend(accepted)
        intervals = np.array(sorted((w.lo, w.hi) for w in accepted_all))
        levels.append(
            TreeLevel(
                scale_exponent=n_l,
                eps=float(eps_l),
                multiplicity=int(min(children_per_parent)),
                intervals=intervals,
            )
        )
        parents = [(float(lo), float(hi)) for lo, hi in intervals]
    if not levels:
        raise ResolutionFloor("level-1 scale below the resolution floor")
    constants = {
        "d_prime": schedule.d_prime,
        "caps": list(schedule.caps),
        "expansion": Lam,
        "expansion_hi": getattr(source, "expansion_hi", None),
        "alpha": alpha,
        "predicted_value": schedule.predicted_value,
    }
    return CantorTree(tuple(root), tuple(levels), constants, floor_hit)


@dataclass(frozen=True)
class TreeValidation:
    ok: bool
    issues: tuple[str, ...]
    derived_eps: tuple[float, ...]
    derived_multiplicity: tuple[int, ...]


def validate_tree(tree: CantorTree, slack: float = 1e-9) -> TreeValidation:
    """Re-derive nesting, separation, and multiplicity from raw intervals."""
    issues = []
    derived_eps = []
    derived_mult = []
    parents = [tree.root]
    for l, level in enumerate(tree.levels, start=1):
        ivs = level.intervals
        if np.any(ivs[1:, 0] <= ivs[:-1, 1]):
            issues.append(f"level {l}: intervals not disjoint/sorted")
        per_parent = {i: [] for i in range(len(parents))}
        for lo, hi in ivs:
            hit = None
            for i, (plo, phi) in enumerate(parents):
                if plo - slack <= lo and hi <= phi + slack:
                    hit = i
                    break
            if hit is None:
                issues.append(f"level {l}: interval ({lo}, {hi}) not nested")
            else:
                per_parent[hit].append((lo, hi))
        counts = [len(v) for v in per_parent.values() if v]
        m_derived = min(counts) if counts else 0
        derived_mult.append(m_derived)
        if m_derived < level.multiplicity:
            issues.append(
                f"level {l}: derived multiplicity {m_derived} < stored {level.multiplicity}"
            )
        if m_derived < 2:
            issues.append(f"level {l}: multiplicity below 2")
        min_gap = math.inf
        for group in per_parent.values():
            for (l0, h0), (l1, _h1) in zip(group, group[1:]):
                min_gap = min(min_gap, l1 - h0)
        derived_eps.append(min_gap)
        if min_gap < level.eps * (1.0 - 1e-9):
            issues.append(
                f"level {l}: sibling gap {min_gap} below stored bound {level.eps}"
            )
        parents = [(float(lo), float(hi)) for lo, hi in ivs]
    return TreeValidation(
        ok=not issues,
        issues=tuple(issues),
        derived_eps=tuple(derived_eps),
        derived_multiplicity=tuple(derived_mult),
    )


def tree_dimension(tree: CantorTree) -> DimensionEstimate:
    """Nested-construction lower bound from the tree's (m_l, eps_l) schedule."""
    if len(tree.levels) < 3:
        raise InsufficientRange("tree needs at least 3 levels")
    schedule = CantorSchedule.from_values(
        [lv.multiplicity for lv in tree.levels],
        [lv.eps for lv in tree.levels],
    )
    estimate = falconer_bound(schedule)
    diag = dict(estimate.diagnostics)
    diag["level_scales"] = [lv.scale_exponent for lv in tree.levels]
    diag["level_counts"] = [int(lv.intervals.shape[0]) for lv in tree.levels]
    return DimensionEstimate(estimate.method, estimate.value, diag)
