"""One-dimensional dynamics of the quadratic-like map P(x) = x^2 + a + A_a(x, 0).

Coordinates are normalized so the critical point sits at x = 0 (the shift is
solved for and recorded when a perturbation moves it).  The two inverse
branches, the alpha ladder of preimages of the reversing fixed point, the
interval-cover approximations of the invariant Cantor sets, and the
Chebyshev-metric expansion check all live here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cantor import IntervalCover
from .core import HenonLikeFamily, PolyTable
from .errors import BelowCriticalValue, GuardViolated, MetricSingularity, NoConvergence

SAMPLES_PER_INTERVAL = 64


@dataclass(frozen=True)
class UnimodalMap:
    """P(x) = x^2 + a + A_a(x, 0), presented in critical-point-at-0 coordinates."""

    a: float
    perturb: PolyTable = field(default_factory=PolyTable)
    shift: float = field(default=0.0, compare=False)

    @classmethod
    def build(cls, a: float, perturb: PolyTable | None = None) -> "UnimodalMap":
        perturb = perturb or PolyTable()
        shift = 0.0
        if perturb:
            shift = _critical_point(a, perturb)
        return cls(a=a, perturb=perturb, shift=shift)

    @classmethod
    def from_family(cls, family: HenonLikeFamily, a: float) -> "UnimodalMap":
        """Restriction of the planar family to y = 0."""
        return cls.build(a, family.perturb_a)

    @property
    def is_pure(self) -> bool:
        return not self.perturb

    def __call__(self, x: float) -> float:
        u = x + self.shift
        if self.is_pure:
            return u * u + self.a
        return u * u + self.a + self.perturb.value(u, 0.0, self.a)

    def deriv(self, x: float) -> float:
        u = x + self.shift
        if self.is_pure:
            return 2.0 * u
        return 2.0 * u + self.perturb.dx(u, 0.0, self.a)

    def second_deriv(self, x: float, h: float = 1e-5) -> float:
        if self.is_pure:
            return 2.0
        return (self.deriv(x + h) - self.deriv(x - h)) / (2.0 * h)

    @property
    def critical_value(self) -> float:
        return self(0.0)

    def iterate(self, x: float, n: int) -> float:
        for _ in range(n):
            x = self(x)
        return x

    def deriv_along(self, x: float, n: int) -> float:
        """D(P^n)(x) by the chain rule."""
        d = 1.0
        for _ in range(n):
            d *= self.deriv(x)
            x = self(x)
        return d

    # --- fixed points ------------------------------------------------------

    def fixed_points(self) -> tuple[float, float]:
        """(alpha, beta): orientation-reversing and -preserving fixed points."""
        disc = 1.0 - 4.0 * self.a
        if disc < 0.0 and self.is_pure:
            raise GuardViolated("no real fixed points: a > 1/4")
        r = math.sqrt(max(disc, 0.0))
        alpha = self._newton_fixed((1.0 - r) / 2.0)
        beta = self._newton_fixed((1.0 + r) / 2.0)
        if self.deriv(alpha) >= 0.0 or self.deriv(beta) <= 0.0:
            raise GuardViolated("fixed points lack the expected orientations")
        return alpha, beta

    def _newton_fixed(self, x: float) -> float:
        for _ in range(64):
            g = self(x) - x
            dg = self.deriv(x) - 1.0
            if dg == 0.0:
                raise NoConvergence("degenerate fixed-point Newton")
            step = g / dg
            x -= step
            if abs(step) < 1e-14:
                return x
        raise NoConvergence("fixed-point Newton did not converge")


def _critical_point(a: float, perturb: PolyTable) -> float:
    """Solve DP(c) = 0 by 1D Newton (raw coordinates)."""
    c = 0.0
    for _ in range(64):
        d = 2.0 * c + perturb.dx(c, 0.0, a)
        dd = 2.0 + (perturb.dx(c + 1e-6, 0.0, a) - perturb.dx(c - 1e-6, 0.0, a)) / 2e-6
        step = d / dd
        c -= step
        if abs(step) < 1e-14:
            return c
    raise NoConvergence("critical-point normalization did not converge")


# --- inverse branches --------------------------------------------------------


def inverse_branches(P: UnimodalMap, y: float, tol: float = 1e-13) -> tuple[float, float]:
    """(pre_minus, pre_plus) with P(pre_pm) = y and pre_minus <= 0 <= pre_plus."""
    cv = P.critical_value
    if y < cv - 1e-12:
        raise BelowCriticalValue(f"value {y} below critical value {cv}")
    rad = math.sqrt(max(y - P.a, 0.0)) if P.is_pure else math.sqrt(max(y - cv, 0.0))
    if P.is_pure:
        return (-rad, rad)
    out = []
    for seed in (-rad, rad):
        x = seed
        for _ in range(64):
            g = P(x) - y
            d = P.deriv(x)
            if d == 0.0:
                x += 1e-9 if seed >= 0 else -1e-9
                continue
            step = g / d
            x -= step
            if abs(step) < tol:
                break
        else:
            raise NoConvergence("inverse-branch Newton did not converge")
        out.append(x)
    pre_minus, pre_plus = sorted(out)
    return (pre_minus, pre_plus)


# --- alpha ladder --------------------------------------------------------------


@dataclass(frozen=True)
class AlphaLadder:
    """Preimage ladder of the reversing fixed point plus its tilde variant.

    alpha_minus[n], alpha_plus[n] for n = 0..n_max satisfy
    P(alpha_n^pm) = alpha_{n-1}^+.  tilde_minus/_plus start at n = 1
    (entry index n-1) and may be truncated by the critical-value guard.
    """

    n_max: int
    alpha_minus: tuple[float, ...]
    alpha_plus: tuple[float, ...]
    tilde_minus: tuple[float, ...]
    tilde_plus: tuple[float, ...]
    beta: float
    alpha_inf_minus: float
    alpha_inf_plus: float
    tilde_inf_minus: float | None
    tilde_inf_plus: float | None
    guard_truncated_at: int | None

    def alpha(self, n: int, sign: int) -> float:
        return self.alpha_plus[n] if sign > 0 else self.alpha_minus[n]

    def tilde(self, n: int, sign: int) -> float:
        if n < 1 or n > len(self.tilde_plus):
            raise IndexError(f"tilde ladder has no entry n={n}")
        return self.tilde_plus[n - 1] if sign > 0 else self.tilde_minus[n - 1]


def alpha_ladder(P: UnimodalMap, n_max: int) -> AlphaLadder:
    alpha, beta = P.fixed_points()
    a_minus = [alpha]
    a_plus = [inverse_branches(P, alpha)[1]]
    for _ in range(n_max):
        pm, pp = inverse_branches(P, a_plus[-1])
        a_minus.append(pm)
        a_plus.append(pp)

    cv = P.critical_value
    t_minus = [a_minus[0]]
    t_plus = [a_plus[0]]
    truncated = None
    for n in range(2, n_max + 1):
        target = a_minus[n - 1]
        if not cv < target:
            truncated = n
            break
        pm, pp = inverse_branches(P, target)
        t_minus.append(pm)
        t_plus.append(pp)

    inf_minus = inverse_branches(P, beta)[0]
    tilde_inf_minus = tilde_inf_plus = None
    if cv < inf_minus:
        tilde_inf_minus, tilde_inf_plus = inverse_branches(P, inf_minus)

    return AlphaLadder(
        n_max=n_max,
        alpha_minus=tuple(a_minus),
        alpha_plus=tuple(a_plus),
        tilde_minus=tuple(t_minus),
        tilde_plus=tuple(t_plus),
        beta=beta,
        alpha_inf_minus=inf_minus,
        alpha_inf_plus=beta,
        tilde_inf_minus=tilde_inf_minus,
        tilde_inf_plus=tilde_inf_plus,
        guard_truncated_at=truncated,
    )


# --- Cantor covers ---------------------------------------------------------------


def cantor_cover(P: UnimodalMap, which: str, depth: int) -> IntervalCover:
    """Depth-k interval approximation of the invariant Cantor set.

    Base intervals come from the alpha ladder; the cover is the set of points
    whose first `depth` images remain in the base (successive pullback through
    both inverse branches, intersected with the base at every step).  For the
    fixed-point-anchored base (C2) this yields exactly 2^(depth+1) intervals,
    each mapped diffeomorphically onto a base interval.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    ladder = alpha_ladder(P, 2)
    cv = P.critical_value
    if which == "C1":
        if not cv < ladder.alpha_minus[1]:
            raise GuardViolated("C1 requires the critical value below alpha_1^-")
        base = [
            (ladder.alpha_minus[1], ladder.tilde(2, -1)),
            (ladder.tilde(2, +1), ladder.alpha_plus[1]),
        ]
    elif which == "C2":
        if ladder.tilde_inf_minus is None:
            raise GuardViolated("C2 requires the critical value below alpha_inf^-")
        base = [
            (ladder.alpha_inf_minus, ladder.tilde_inf_minus),
            (ladder.tilde_inf_plus, ladder.alpha_inf_plus),
        ]
    else:
        raise ValueError("which must be 'C1' or 'C2'")

    pieces = list(base)
    for _ in range(depth):
        pulled = []
        for lo, hi in pieces:
            pulled.extend(_pullback_interval(P, lo, hi))
        pieces = _intersect_sorted(pulled, base)
    return IntervalCover.from_pairs(pieces, depth=depth)


def _pullback_interval(P: UnimodalMap, lo: float, hi: float):
    """Components of P^{-1}([lo, hi])."""
    cv = P.critical_value
    if hi < cv:
        return []
    if lo <= cv:
        pm, pp = inverse_branches(P, hi)
        return [(pm, pp)]
    lm, lp = inverse_branches(P, lo)
    hm, hp = inverse_branches(P, hi)
    return [(hm, lm), (lp, hp)]


def _intersect_sorted(pieces, base):
    out = []
    for lo, hi in pieces:
        for blo, bhi in base:
            l, h = max(lo, blo), min(hi, bhi)
            if l <= h:
                out.append((l, h))
    out.sort()
    return out


# --- expansion in the Chebyshev metric --------------------------------------------


def expansion_check(
    P: UnimodalMap,
    cover: IntervalCover,
    metric: str = "chebyshev",
    samples_per_interval: int = SAMPLES_PER_INTERVAL,
    singular_tol: float = 1e-12,
) -> float:
    """Min over cover samples of |DP(x)| * g(P(x)) / g(x).

    g(x) = 1/sqrt(4 - x^2) for the chebyshev metric (under which the
    Chebyshev map x^2 - 2 expands by exactly 2), g = 1 for euclidean.
    """
    if metric not in ("euclidean", "chebyshev"):
        raise ValueError("metric must be 'euclidean' or 'chebyshev'")
    worst = math.inf
    for lo, hi in cover.pairs():
        xs = _chebyshev_nodes(lo, hi, samples_per_interval)
        for x in xs:
            d = abs(P.deriv(x))
            if metric == "euclidean":
                factor = d
            else:
                gx = 4.0 - x * x
                gpx = 4.0 - P(x) ** 2
                if gx <= singular_tol or gpx <= singular_tol:
                    raise MetricSingularity(f"sample {x} too close to the metric boundary")
                factor = d * math.sqrt(gx / gpx)
            worst = min(worst, factor)
    return worst


def _chebyshev_nodes(lo: float, hi: float, count: int) -> np.ndarray:
    if hi <= lo:
        return np.array([lo])
    k = np.arange(count)
    inner = 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos((2 * k + 1) * np.pi / (2 * count))
    return np.concatenate(([lo, hi], inner))
