"""Interval-cover Cantor sets: gaps, bridges, thickness, and dimension bounds.

A finite sorted union of disjoint closed intervals stands in for a Cantor
set; all downstream quantities (thickness, gap-lemma verdicts, box-counting
and nested-construction dimension estimates) are computed on these covers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InsufficientRange,
    InvalidSchedule,
    NonHyperbolicBin,
)


@dataclass(frozen=True)
class IntervalCover:
    """Strictly sorted, pairwise disjoint closed intervals [l_i, r_i].

    Degenerate point intervals (r_i == l_i) are allowed.
    """

    intervals: np.ndarray
    depth: int | None = None

    def __post_init__(self):
        arr = np.asarray(self.intervals, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
            raise ValueError("intervals must be a nonempty (n, 2) array")
        if np.any(arr[:, 1] < arr[:, 0]):
            raise ValueError("every interval needs r_i >= l_i")
        if np.any(arr[1:, 0] <= arr[:-1, 1]):
            raise ValueError("intervals must be strictly sorted and disjoint")
        object.__setattr__(self, "intervals", arr)

    @classmethod
    def from_pairs(cls, pairs, depth: int | None = None, merge_tol: float = 0.0):
        """Build from (lo, hi) pairs, merging touching/overlapping pieces."""
        pairs = sorted((float(l), float(h)) for l, h in pairs)
        merged: list[list[float]] = []
        for lo, hi in pairs:
            if merged and lo <= merged[-1][1] + merge_tol:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return cls(np.array(merged), depth=depth)

    @classmethod
    def from_points(cls, points, depth: int | None = None):
        pts = np.unique(np.asarray(points, dtype=float))
        return cls(np.column_stack([pts, pts]), depth=depth)

    def pairs(self) -> list[tuple[float, float]]:
        return [(float(l), float(r)) for l, r in self.intervals]

    @property
    def hull(self) -> tuple[float, float]:
        return float(self.intervals[0, 0]), float(self.intervals[-1, 1])

    @property
    def count(self) -> int:
        return int(self.intervals.shape[0])

    def lengths(self) -> np.ndarray:
        return self.intervals[:, 1] - self.intervals[:, 0]

    def total_length(self) -> float:
        return float(self.lengths().sum())

    def affine_image(self, scale: float, offset: float) -> "IntervalCover":
        if scale == 0.0:
            raise ValueError("affine map must have nonzero slope")
        arr = self.intervals * scale + offset
        if scale < 0.0:
            arr = arr[::-1, ::-1]
        return IntervalCover(arr.copy(), depth=self.depth)


def middle_thirds_cover(depth: int, hull: tuple[float, float] | None = None) -> IntervalCover:
    """Classical middle-thirds construction at finite depth (tau = 1).

    Without an explicit hull the endpoints are integers on [0, 3^depth], so
    every gap and bridge is exact in floating point and tau is exactly 1.
    """
    pieces = [(0, 1)]
    scale = 1
    for _ in range(depth):
        scale *= 3
        pieces = [
            piece
            for lo, hi in pieces
            for piece in ((3 * lo, 3 * lo + (hi - lo)), (3 * hi - (hi - lo), 3 * hi))
        ]
    if hull is None:
        return IntervalCover.from_pairs(
            [(float(lo), float(hi)) for lo, hi in pieces], depth=depth
        )
    lo0, hi0 = hull
    span = (hi0 - lo0) / scale
    return IntervalCover.from_pairs(
        [(lo0 + span * lo, lo0 + span * hi) for lo, hi in pieces], depth=depth
    )


def two_branch_affine_cover(
    ratio: float, depth: int, hull: tuple[float, float] = (0.0, 1.0)
) -> IntervalCover:
    """Self-similar cover: two branches of contraction `ratio` at the hull ends."""
    if not 0.0 < ratio < 0.5:
        raise ValueError("ratio must be in (0, 1/2)")
    lo, hi = hull
    pieces = [(0.0, 1.0)]
    for _ in range(depth):
        pieces = [
            piece
            for l, h in pieces
            for piece in ((l * ratio, h * ratio), (1.0 - ratio + l * ratio, 1.0 - ratio + h * ratio))
        ]
    span = hi - lo
    return IntervalCover.from_pairs(
        [(lo + span * l, lo + span * h) for l, h in pieces], depth=depth
    )


# --- gaps, bridges, thickness -------------------------------------------------


@dataclass(frozen=True)
class GapBridge:
    endpoint: float
    gap: tuple[float, float]
    bridge: tuple[float, float]

    @property
    def gap_length(self) -> float:
        return self.gap[1] - self.gap[0]

    @property
    def bridge_length(self) -> float:
        return self.bridge[1] - self.bridge[0]

    @property
    def ratio(self) -> float:
        return self.bridge_length / self.gap_length


@dataclass(frozen=True)
class ThicknessReport:
    tau: float
    witness_gap: tuple[float, float] | None
    witness_bridge: tuple[float, float] | None
    per_endpoint: tuple[GapBridge, ...]


def gaps_and_bridges(cover: IntervalCover) -> list[GapBridge]:
    """Bridge at every boundary point of every bounded gap.

    The bridge extends from the endpoint away from its gap until it meets a
    strictly longer gap (equal lengths do not stop it) or the cover's hull.
    """
    arr = cover.intervals
    n = arr.shape[0]
    if n < 2:
        return []
    gap_lo = arr[:-1, 1]
    gap_hi = arr[1:, 0]
    gap_len = gap_hi - gap_lo
    hull_lo, hull_hi = cover.hull
    out = []
    for g in range(n - 1):
        # Left endpoint of the gap: bridge extends leftward.
        left_stop = hull_lo
        for j in range(g - 1, -1, -1):
            if gap_len[j] > gap_len[g]:
                left_stop = gap_hi[j]
                break
        out.append(
            GapBridge(
                endpoint=float(gap_lo[g]),
                gap=(float(gap_lo[g]), float(gap_hi[g])),
                bridge=(float(left_stop), float(gap_lo[g])),
            )
        )
        # Right endpoint: bridge extends rightward.
        right_stop = hull_hi
        for j in range(g + 1, n - 1):
            if gap_len[j] > gap_len[g]:
                right_stop = gap_lo[j]
                break
        out.append(
            GapBridge(
                endpoint=float(gap_hi[g]),
                gap=(float(gap_lo[g]), float(gap_hi[g])),
                bridge=(float(gap_hi[g]), float(right_stop)),
            )
        )
    return out


def thickness(cover: IntervalCover) -> ThicknessReport:
    """tau = min over bounded-gap endpoints of bridge/gap; +inf if gapless."""
    records = gaps_and_bridges(cover)
    if not records:
        return ThicknessReport(math.inf, None, None, ())
    best = None
    for rec in records:  # leftmost minimizer wins ties by strict <
        if best is None or rec.ratio < best.ratio:
            best = rec
    return ThicknessReport(best.ratio, best.gap, best.bridge, tuple(records))


# --- Gap Lemma -----------------------------------------------------------------


VERDICT_INTERSECT = "Intersect"
VERDICT_K1_IN_GAP = "K1InGapOfK2"
VERDICT_K2_IN_GAP = "K2InGapOfK1"
VERDICT_HYPOTHESIS_FAILS = "HypothesisFails"
VERDICT_DISJOINT_HULLS = "DisjointHulls"


@dataclass(frozen=True)
class GapLemmaReport:
    verdict: str
    tau1: float
    tau2: float
    product: float
    overlap: bool


def covers_overlap(k1: IntervalCover, k2: IntervalCover) -> bool:
    a, b = k1.intervals, k2.intervals
    i = j = 0
    while i < a.shape[0] and j < b.shape[0]:
        if a[i, 1] < b[j, 0]:
            i += 1
        elif b[j, 1] < a[i, 0]:
            j += 1
        else:
            return True
    return False


def _hull_in_gap(inner: IntervalCover, outer: IntervalCover) -> bool:
    lo, hi = inner.hull
    arr = outer.intervals
    for g in range(arr.shape[0] - 1):
        if arr[g, 1] < lo and hi < arr[g + 1, 0]:
            return True
    return False


def gap_lemma(k1: IntervalCover, k2: IntervalCover) -> GapLemmaReport:
    """Classify the pair per the thickness trichotomy.

    HypothesisFails when tau1*tau2 <= 1 (finite-depth intersection status is
    still attached); otherwise one of Intersect / K1InGapOfK2 / K2InGapOfK1 /
    DisjointHulls holds.
    """
    t1 = thickness(k1).tau
    t2 = thickness(k2).tau
    product = t1 * t2
    overlap = covers_overlap(k1, k2)
    if not product > 1.0:
        return GapLemmaReport(VERDICT_HYPOTHESIS_FAILS, t1, t2, product, overlap)
    h1, h2 = k1.hull, k2.hull
    if h1[1] < h2[0] or h2[1] < h1[0]:
        return GapLemmaReport(VERDICT_DISJOINT_HULLS, t1, t2, product, overlap)
    if overlap:
        return GapLemmaReport(VERDICT_INTERSECT, t1, t2, product, overlap)
    if _hull_in_gap(k1, k2):
        return GapLemmaReport(VERDICT_K1_IN_GAP, t1, t2, product, overlap)
    if _hull_in_gap(k2, k1):
        return GapLemmaReport(VERDICT_K2_IN_GAP, t1, t2, product, overlap)
    raise RuntimeError("gap lemma trichotomy violated for interval covers")


# --- dimension estimates ----------------------------------------------------------


@dataclass(frozen=True)
class DimensionEstimate:
    method: str
    value: float
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def clean(v):
            if isinstance(v, np.ndarray):
                return [float(x) for x in v]
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            if isinstance(v, (np.floating, np.integer)):
                return float(v)
            return v

        return {
            "method": self.method,
            "value": float(self.value),
            "diagnostics": {k: clean(v) for k, v in self.diagnostics.items()},
        }


def box_count(cover: IntervalCover, eps: float, anchor: float | None = None) -> int:
    """Number of half-open eps-grid boxes [m eps, (m+1) eps) meeting the cover."""
    x0 = cover.hull[0] if anchor is None else anchor
    count = 0
    last = None
    for lo, hi in cover.pairs():
        m_lo = math.floor((lo - x0) / eps)
        m_hi = max(m_lo, math.ceil((hi - x0) / eps) - 1)
        if last is not None and m_lo <= last:
            m_lo = last + 1
        if m_hi >= m_lo:
            count += m_hi - m_lo + 1
            last = m_hi
    return count


def box_dimension(covers, grid_offsets: int = 8) -> DimensionEstimate:
    """Least-squares slope of log N(eps) against log(1/eps) on a dyadic ladder.

    Uses the deepest cover of the sequence; the ladder stops above the
    cover's own resolution so finite depth does not bias the slope, and the
    counts are averaged over shifted grid anchors to damp the log-periodic
    oscillation of lattice self-similar sets against dyadic boxes.
    """
    covers = list(covers)
    if not covers:
        raise InsufficientRange("need at least one cover")
    deepest = max(covers, key=lambda c: (c.depth if c.depth is not None else 0))
    hull_lo, hull_hi = deepest.hull
    span = hull_hi - hull_lo
    if span == 0.0:
        # Cover is a single point; all counts are 1 on any ladder.
        eps_ladder = [2.0 ** (-j) for j in range(2, 8)]
        counts = [1.0] * len(eps_ladder)
    else:
        min_len = float(np.min(deepest.lengths()))
        # a gapless cover is exact at every scale; otherwise stop above the
        # finite-depth resolution
        floor_eps = span * 2.0**-14 if deepest.count == 1 else max(min_len, span * 1e-12)
        j_max = max(3, int(math.floor(math.log2(span / floor_eps))))
        eps_ladder = [span * 2.0 ** (-j) for j in range(3, j_max + 1)]
        counts = [
            float(
                np.mean(
                    [
                        box_count(deepest, eps, anchor=hull_lo - k * eps / grid_offsets)
                        for k in range(grid_offsets)
                    ]
                )
            )
            for eps in eps_ladder
        ]
    if len(eps_ladder) < 4:
        raise InsufficientRange("fewer than 4 usable epsilon values")
    xs = np.log(1.0 / np.asarray(eps_ladder))
    ys = np.log(np.asarray(counts, dtype=float))
    slope, intercept = np.polyfit(xs, ys, 1)
    pred = slope * xs + intercept
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return DimensionEstimate(
        "box_counting",
        float(slope),
        {
            "r_squared": r2,
            "eps_range": (min(eps_ladder), max(eps_ladder)),
            "counts": counts,
        },
    )


# --- nested-construction (Falconer-type) lower bound ---------------------------------


@dataclass(frozen=True)
class CantorSchedule:
    """Per-level multiplicity and gap lower bounds, held in log space.

    log-space storage lets schedules whose gaps underflow any float
    representation (the super-exponential construction) be evaluated.  The
    per-level product log(m_l eps_l) may be supplied analytically: for the
    super-exponential ladder it cancels to -n_{l-1} log L, far below the
    rounding of its two huge summands.
    """

    log_m: np.ndarray
    log_eps: np.ndarray
    log_meps: np.ndarray | None = None

    def __post_init__(self):
        lm = np.asarray(self.log_m, dtype=float)
        le = np.asarray(self.log_eps, dtype=float)
        if lm.shape != le.shape or lm.ndim != 1 or lm.size < 1:
            raise InvalidSchedule("log_m and log_eps must be equal-length vectors")
        if np.any(~np.isfinite(lm)) or np.any(~np.isfinite(le)):
            raise InvalidSchedule("schedule entries must be finite")
        if np.any(lm < -1e-12):
            raise InvalidSchedule("multiplicities must be >= 1")
        if np.any(np.diff(le) >= 0.0):
            raise InvalidSchedule("gap bounds must be strictly decreasing")
        lme = self.log_meps
        lme = (lm + le) if lme is None else np.asarray(lme, dtype=float)
        if lme.shape != lm.shape:
            raise InvalidSchedule("log_meps must match the level count")
        object.__setattr__(self, "log_m", lm)
        object.__setattr__(self, "log_eps", le)
        object.__setattr__(self, "log_meps", lme)

    @classmethod
    def from_values(cls, m_values, eps_values) -> "CantorSchedule":
        m = np.asarray(m_values, dtype=float)
        e = np.asarray(eps_values, dtype=float)
        if np.any(m < 1.0):
            raise InvalidSchedule("multiplicities must be >= 1")
        if np.any(e <= 0.0):
            raise InvalidSchedule("gaps must be positive")
        return cls(np.log(m), np.log(e))

    @classmethod
    def from_paper_formula(
        cls,
        alpha: float,
        growth_constant: float = 2.0,
        levels: int = 8,
        expansion: float = 2.0,
        d_prime: float = 1.0,
        c_second: float = 1.0,
    ) -> "CantorSchedule":
        """Schedule eps_l = D' L^{-alpha n_l}, m_l = C'' L^{-n_{l-1} + alpha n_l}
        with the super-exponential scale ladder n_l = 2^(C 2^l)."""
        log_lambda = math.log(expansion)
        n = [2.0 ** (growth_constant * 2.0**l) for l in range(levels + 1)]
        log_eps = [math.log(d_prime) - alpha * n[l] * log_lambda for l in range(1, levels + 1)]
        log_m = [
            math.log(c_second) + (-n[l - 1] + alpha * n[l]) * log_lambda
            for l in range(1, levels + 1)
        ]
        log_meps = [
            math.log(c_second) + math.log(d_prime) - n[l - 1] * log_lambda
            for l in range(1, levels + 1)
        ]
        return cls(np.array(log_m), np.array(log_eps), np.array(log_meps))

    @property
    def levels(self) -> int:
        return int(self.log_m.size)


def falconer_bound(schedule: CantorSchedule, tail_fraction: float = 0.5) -> DimensionEstimate:
    """liminf_l log(m_1...m_{l-1}) / (-log(m_l eps_l)), finite-level version.

    The per-level sequence is reported; the headline value is the minimum
    over the trailing `tail_fraction` of levels (liminf surrogate).
    """
    L = schedule.levels
    if L < 2:
        raise InsufficientRange("schedule needs at least 2 levels")
    cum = np.concatenate(([0.0], np.cumsum(schedule.log_m)))
    per_level = []
    for l in range(2, L + 1):
        num = cum[l - 1]
        den = -schedule.log_meps[l - 1]
        if den <= 0.0:
            raise InvalidSchedule(f"m_l * eps_l >= 1 at level {l}")
        per_level.append(num / den)
    seq = np.asarray(per_level)
    tail_start = max(0, int(math.floor(seq.size * (1.0 - tail_fraction))))
    value = float(seq[tail_start:].min())
    return DimensionEstimate(
        "falconer_lower_bound",
        value,
        {"per_level": seq, "tail_start_level": tail_start + 2},
    )


# --- covering upper bound -------------------------------------------------------------


def covering_upper_bound(epsilon: float, sigma_bins) -> DimensionEstimate:
    """Minimal s with (i eps)^{-2s} (i+1) eps < 1 per expansion bin.

    Bins are (i, count_rate) pairs; count_rate is carried as a diagnostic.
    The overall bound is the max over bins, and the eps -> 0 trend at fixed
    i*eps is attached (it decreases to 1/2).
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    bins = []
    for entry in sigma_bins:
        if isinstance(entry, (tuple, list)):
            i, rate = int(entry[0]), (float(entry[1]) if entry[1] is not None else None)
        else:
            i, rate = int(entry), None
        bins.append((i, rate))
    if not bins:
        raise ValueError("need at least one bin")
    s_values = []
    for i, rate in bins:
        if i * epsilon <= 1.0:
            raise NonHyperbolicBin(f"bin i={i}: i*eps = {i * epsilon} <= 1")
        s_values.append(
            math.log((i + 1) * epsilon) / (2.0 * math.log(i * epsilon))
        )
    i0 = bins[0][0]
    sigma_fixed = i0 * epsilon
    trend = []
    for k in range(4):
        eps_k = epsilon / 10.0**k
        i_k = round(sigma_fixed / eps_k)
        trend.append(math.log((i_k + 1) * eps_k) / (2.0 * math.log(i_k * eps_k)))
    return DimensionEstimate(
        "covering_upper_bound",
        float(max(s_values)),
        {
            "per_bin": list(zip([i for i, _ in bins], s_values)),
            "count_rates": [r for _, r in bins],
            "eps": epsilon,
            "trend_eps_to_zero": trend,
        },
    )
