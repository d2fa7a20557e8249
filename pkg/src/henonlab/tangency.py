"""Local invariant manifolds, homoclinic-tangency location, and lamination slices.

Unstable arcs are grown by iterating a fundamental segment along the unstable
eigenvector with adaptive refinement; stable arcs use the inverse dynamics
(per-point Newton solves, since the family is a diffeomorphism for b != 0).
b = 0 is a documented degenerate path: the planar dynamics collapse onto the
unimodal reduction, where the tangency distance has the closed form
beta(a) - P_a^2(0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cantor import IntervalCover, ThicknessReport, thickness
from .core import (
    DEFAULT_ESCAPE_RADIUS,
    HenonLikeFamily,
    PeriodicOrbit,
    find_periodic_orbit,
)
from .errors import (
    FitDegenerate,
    InverseSolveFailed,
    NoConvergence,
    NoFoldDetected,
    NoSignChange,
    NotASaddle,
    TooFewIntersections,
)
from .unimodal import UnimodalMap, cantor_cover, inverse_branches

MAX_TURN_DEG = 5.0
FOLD_FIT_NODES = 7
TOL_XI = 1e-3
TOL_SPEED = 1e-3


@dataclass(frozen=True)
class ManifoldArc:
    """Polyline approximation of one branch of a local invariant manifold."""

    kind: str  # "stable" | "unstable"
    saddle: tuple[float, float]
    period: int
    nodes: np.ndarray  # (N, 2); first node is the saddle
    arclength: float
    flagged_degenerate: bool = False  # b = 0 vertical-fiber construction

    def invariance_residual(self, family, a: float, samples: int = 50) -> float:
        """Max distance from mapped sample nodes back to the arc.

        Images that land beyond the far end of the (finite) arc are skipped;
        invariance is only testable where the image stays on the computed
        piece.
        """
        idx = np.linspace(0, len(self.nodes) - 1, min(samples, len(self.nodes)))
        last_seg = len(self.nodes) - 2
        worst = 0.0
        for i in idx.astype(int):
            z = self.nodes[i]
            if self.kind == "unstable":
                w = np.asarray(family.eval(a, z))
            else:
                try:
                    w = np.asarray(family.invert(a, z))
                except InverseSolveFailed:
                    return math.nan
            dist, seg, t = _point_polyline_distance(w, self.nodes)
            if seg >= last_seg and t >= 1.0:
                continue
            worst = max(worst, dist)
        return worst


def _point_polyline_distance(p, nodes) -> tuple[float, int, float]:
    """(distance, segment index, segment parameter) of the closest point."""
    p = np.asarray(p, dtype=float)
    seg = nodes[1:] - nodes[:-1]
    seg_len2 = np.einsum("ij,ij->i", seg, seg)
    seg_len2[seg_len2 == 0.0] = 1e-300
    t = np.clip(np.einsum("ij,ij->i", p - nodes[:-1], seg) / seg_len2, 0.0, 1.0)
    proj = nodes[:-1] + seg * t[:, None]
    d2 = np.einsum("ij,ij->i", p - proj, p - proj)
    i = int(np.argmin(d2))
    return math.sqrt(d2[i]), i, float(t[i])


def _eigvec(m: np.ndarray, mu: float) -> np.ndarray:
    v1 = np.array([m[0, 1], mu - m[0, 0]])
    v2 = np.array([mu - m[1, 1], m[1, 0]])
    v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
    n = np.linalg.norm(v)
    if n == 0.0:
        raise NotASaddle("eigenvector computation degenerate")
    return v / n


class _ArcGrower:
    """Images of a fundamental segment of the linearized manifold.

    Level k holds F^k of the seed segment; per-level memoization keeps the
    cost of adaptive refinement linear in the number of emitted nodes.  The
    seed is clamped so the whole fundamental segment stays in the linear
    regime even when the period-map rate is large.
    """

    LINEAR_BUDGET = 1e-3

    def __init__(self, step, z0, direction_vec, rate, seed_scale):
        self.step = step  # one application of the period map (or its inverse)
        self.z0 = np.asarray(z0, dtype=float)
        self.dir = np.asarray(direction_vec, dtype=float)
        self.rate = rate  # |multiplier| of the period map along the branch
        self.seed_scale = min(seed_scale, self.LINEAR_BUDGET / rate)
        self.levels: list[dict[float, np.ndarray]] = [dict()]

    def seed_point(self, t: float) -> np.ndarray:
        return self.z0 + self.dir * self.seed_scale * self.rate**t

    def point(self, level: int, t: float) -> np.ndarray:
        while len(self.levels) <= level:
            self.levels.append(dict())
        memo = self.levels[level]
        if t in memo:
            return memo[t]
        if level == 0:
            p = self.seed_point(t)
        else:
            p = np.asarray(self.step(self.point(level - 1, t)), dtype=float)
        memo[t] = p
        return p


def _grow_arc(
    grower: _ArcGrower,
    length: float,
    max_step: float,
    max_turn_deg: float,
    escape_radius: float,
    max_nodes: int,
) -> tuple[np.ndarray, float]:
    cos_turn = math.cos(math.radians(max_turn_deg))
    nodes = [grower.z0.copy()]
    total = 0.0
    level = 0
    while total < length and len(nodes) < max_nodes:
        ts = list(np.linspace(0.0, 1.0, 9))
        pts = [grower.point(level, t) for t in ts]
        for _ in range(26):  # refinement passes: halve every violating segment
            arr = np.asarray(pts)
            seg = np.diff(arr, axis=0)
            gap = np.linalg.norm(seg, axis=1)
            too_long = gap > max_step
            cosang = np.ones(len(gap))
            if len(gap) > 1:
                num = np.einsum("ij,ij->i", seg[:-1], seg[1:])
                den = gap[:-1] * gap[1:]
                ok = den > 1e-26
                cosang[1:][ok] = num[ok] / den[ok]
            too_bent = cosang < cos_turn
            dt = np.diff(np.asarray(ts))
            bad = np.flatnonzero((too_long | too_bent) & (dt > 1e-7) & (gap > 1e-13))
            if bad.size == 0 or len(ts) > 8000:
                break
            for i in reversed(bad):
                mid = 0.5 * (ts[i] + ts[i + 1])
                ts.insert(i + 1, mid)
                pts.insert(i + 1, grower.point(level, mid))
        emit = zip(pts, ts) if level == 0 else zip(pts[1:], ts[1:])
        escaped = False
        for p, _t in emit:
            if not np.all(np.isfinite(p)) or np.linalg.norm(p) > escape_radius:
                escaped = True
                break
            total += float(np.linalg.norm(p - nodes[-1]))
            nodes.append(p)
            if total >= length or len(nodes) >= max_nodes:
                break
        if escaped:
            break
        level += 1
        if level > 400:
            break
    return np.asarray(nodes), total


def _saddle_directions(family, a: float, saddle: PeriodicOrbit):
    if not saddle.is_saddle():
        raise NotASaddle(
            f"multipliers {saddle.mult_stable}, {saddle.mult_unstable} are not saddle-type"
        )
    m = np.eye(2)
    for z in saddle.points:
        m = family.jacobian(a, z) @ m
    mu_u = saddle.mult_unstable
    mu_s = saddle.mult_stable
    if abs(mu_u.imag) > 1e-10 or abs(mu_s.imag) > 1e-10:
        raise NotASaddle("complex multipliers")
    e_u = _eigvec(m, mu_u.real)
    e_s = _eigvec(m, mu_s.real)
    return e_u, e_s, mu_u.real, mu_s.real


def _auto_direction(family, a, z0, e, rate_steps_fn, escape_radius) -> int:
    """Prefer the branch that stays bounded longer under the period map."""
    scores = []
    for d in (-1, 1):
        z = np.asarray(z0) + d * 1e-4 * e
        ok = 0
        for _ in range(14):
            z = np.asarray(rate_steps_fn(z))
            if not np.all(np.isfinite(z)) or np.linalg.norm(z) > escape_radius:
                break
            ok += 1
        scores.append((ok, d))
    scores.sort(reverse=True)
    return scores[0][1]


def grow_unstable_arc(
    family,
    a: float,
    saddle: PeriodicOrbit,
    length: float,
    direction: int | None = None,
    max_step: float = 0.02,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
    max_nodes: int = 60000,
    seed_scale: float = 1e-7,
) -> ManifoldArc:
    e_u, _, mu_u, _ = _saddle_directions(family, a, saddle)
    per = saddle.period

    def step(z):
        for _ in range(per):
            z = family.eval(a, z)
        return z

    if mu_u < 0.0:
        # orientation-reversing branch: use the doubled map to stay on one side
        base_step = step

        def step(z):
            return base_step(base_step(z))

        rate = mu_u * mu_u
    else:
        rate = mu_u
    if direction is None:
        direction = _auto_direction(family, a, saddle.point, e_u, step, escape_radius)
    grower = _ArcGrower(step, saddle.point, direction * e_u, rate, seed_scale)
    nodes, total = _grow_arc(grower, length, max_step, MAX_TURN_DEG, escape_radius, max_nodes)
    return ManifoldArc("unstable", saddle.point, per, nodes, total)


def grow_stable_arc(
    family,
    a: float,
    saddle: PeriodicOrbit,
    length: float,
    direction: int | None = None,
    max_step: float = 0.02,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
    max_nodes: int = 60000,
    seed_scale: float = 1e-7,
    near=None,
) -> ManifoldArc:
    if family.b == 0.0:
        return _stable_fiber_graph(family, a, saddle, length, direction, max_step, near)
    _, e_s, _, mu_s = _saddle_directions(family, a, saddle)
    per = saddle.period

    def step(z):
        for _ in range(per):
            z = family.invert(a, z)
        return z

    if mu_s < 0.0:
        base_step = step

        def step(z):
            return base_step(base_step(z))

        rate = 1.0 / (mu_s * mu_s)
    else:
        rate = 1.0 / mu_s
    if direction is None:
        direction = _auto_direction(family, a, saddle.point, e_s, step, escape_radius)
    grower = _ArcGrower(step, saddle.point, direction * e_s, rate, seed_scale)
    nodes, total = _grow_arc(grower, length, max_step, MAX_TURN_DEG, escape_radius, max_nodes)
    return ManifoldArc("stable", saddle.point, per, nodes, total)


def _stable_fiber_graph(
    family, a, saddle, length, direction, max_step, near=None
) -> ManifoldArc:
    """b = 0: stable-set leaves are the graphs P(x) + y = c with the forward
    orbit of c landing on the saddle (flagged degenerate path).

    Without `near` the leaf through the saddle itself (c = x_saddle) is
    returned; with `near` the preimage leaf passing closest to that point.
    """
    P = UnimodalMap.from_family(family, a)
    x_star = saddle.point[0]
    c = x_star
    anchor = np.asarray(saddle.point, dtype=float)
    if near is not None:
        target = P(near[0]) + near[1]
        values = {x_star}
        frontier = [x_star]
        for _ in range(8):
            new = []
            for v in frontier:
                if v >= P.critical_value:
                    new.extend(inverse_branches(P, v))
            frontier = [v for v in new if v not in values]
            values.update(frontier)
        c = min(values, key=lambda v: abs(v - target))
        anchor = np.array([float(near[0]), c - P(near[0])])
    if direction is None:
        direction = -1 if anchor[0] > 0 else 1
    xs = [float(anchor[0])]
    nodes = [anchor.copy()]
    total = 0.0
    while total < length:
        slope = -P.deriv(xs[-1])
        dx = direction * max_step / math.hypot(1.0, slope)
        x = xs[-1] + dx
        node = np.array([x, c - P(x)])
        total += np.linalg.norm(node - nodes[-1])
        xs.append(x)
        nodes.append(node)
        if len(nodes) > 200000:
            break
    return ManifoldArc("stable", saddle.point, saddle.period, np.asarray(nodes), total, True)


def local_manifolds(
    family,
    a: float,
    saddle: PeriodicOrbit,
    length: float,
    unstable_direction: int | None = None,
    stable_direction: int | None = None,
) -> tuple[ManifoldArc, ManifoldArc]:
    """(stable, unstable) local-manifold arcs of arclength `length`."""
    unstable = grow_unstable_arc(family, a, saddle, length, unstable_direction)
    stable = grow_stable_arc(family, a, saddle, length, stable_direction)
    return stable, unstable


# --- tangency distance and location ---------------------------------------------


@dataclass(frozen=True)
class TangencyRecord:
    a_star: float
    point: tuple[float, float]
    xi_hat: float
    speed_hat: float
    nondegenerate: bool


def _stable_level(family, a: float, saddle_point) -> float:
    P = UnimodalMap.from_family(family, a)
    return P(saddle_point[0]) + saddle_point[1]


def _side_sign(family, a: float, level: float, p) -> float:
    P = UnimodalMap.from_family(family, a)
    return level - (P(p[0]) + p[1])


def tangency_distance(
    family,
    a: float,
    saddle: PeriodicOrbit,
    unstable_length: float = 16.0,
    stable_length: float = 2.0,
    exclude_arclength: float = 1.0,
    _details: dict | None = None,
) -> float:
    """Signed distance from the unstable arc's fold vertex to the stable arc.

    Positive when the vertex sits on the non-crossing side.  At b = 0 this
    reduces to beta(a) - P_a^2(0) (the critical orbit against the
    orientation-preserving fixed point).
    """
    if family.b == 0.0:
        P = UnimodalMap.from_family(family, a)
        _, beta = P.fixed_points()
        value = beta - P(P(0.0))
        if _details is not None:
            _details["vertex"] = (P(P(0.0)), 0.0)
            _details["mode"] = "1d"
        return value

    saddle = _continue_saddle(family, a, saddle)
    unstable = grow_unstable_arc(family, a, saddle, unstable_length)
    stable_nodes = _stable_polyline(family, a, saddle, stable_length)
    level = _stable_level(family, a, saddle.point)

    dists = np.empty(len(unstable.nodes))
    signs = np.empty(len(unstable.nodes))
    for i, p in enumerate(unstable.nodes):
        dists[i], _, _ = _point_polyline_distance(p, stable_nodes)
        signs[i] = math.copysign(1.0, _side_sign(family, a, level, p))
    signed = dists * signs

    # exclude the start of the arc, which crawls along the stable arc itself
    arclen = np.concatenate(
        ([0.0], np.cumsum(np.linalg.norm(np.diff(unstable.nodes, axis=0), axis=1)))
    )
    valid = arclen > exclude_arclength

    best = None
    for i in range(1, len(signed) - 1):
        if not (valid[i - 1] and valid[i] and valid[i + 1]):
            continue
        if (signed[i] - signed[i - 1]) * (signed[i + 1] - signed[i]) <= 0.0:
            if best is None or abs(signed[i]) < abs(signed[best]):
                best = i
    if best is None:
        raise NoFoldDetected("no interior extremum of the signed distance")

    # Quadratic fit over a fixed arclength window around the turning point
    # (node count there is resolution-dependent: the tip is sharp for small
    # b); it supplies the fold coefficient and locates the vertex.
    window = 0.12
    sel = np.flatnonzero(np.abs(arclen - arclen[best]) <= window)
    s_rel, keep = np.unique(np.round(arclen[sel] - arclen[best], 9), return_index=True)
    vals = signed[sel][keep]
    if len(s_rel) < FOLD_FIT_NODES:
        raise NoFoldDetected("too few distinct nodes near the fold")
    coeffs = np.polyfit(s_rel, vals, 2)
    if abs(coeffs[0]) < 1e-12:
        raise NoFoldDetected("fold curvature vanishes at resolution")

    # The touch point of the tangency is generically off-vertex (the stable
    # arc curves too), so the unfolding distance is the minimum signed gap
    # over the fold zone, refined by a local parabola at the dip.
    zone = np.flatnonzero(np.abs(arclen - arclen[best]) <= 4.0 * window)
    dip = zone[int(np.argmin(signed[zone]))]
    local = np.flatnonzero(np.abs(arclen - arclen[dip]) <= 0.03)
    s_loc, keep_loc = np.unique(np.round(arclen[local] - arclen[dip], 9), return_index=True)
    v_loc = signed[local][keep_loc]
    value = float(signed[dip])
    if len(s_loc) >= 5:
        c_loc = np.polyfit(s_loc, v_loc, 2)
        if c_loc[0] > 0.0:
            s_min = float(np.clip(-c_loc[1] / (2.0 * c_loc[0]), s_loc[0], s_loc[-1]))
            value = min(value, float(np.polyval(c_loc, s_min)))
    if _details is not None:
        _details["vertex"] = tuple(unstable.nodes[dip])
        _details["curvature"] = float(coeffs[0])
        _details["mode"] = "2d"
    return value


def _stable_polyline(family, a, saddle, stable_length) -> np.ndarray:
    left = grow_stable_arc(family, a, saddle, stable_length, direction=-1)
    right = grow_stable_arc(family, a, saddle, stable_length, direction=1)
    return np.vstack([left.nodes[::-1], right.nodes[1:]])


def _continue_saddle(family, a: float, saddle: PeriodicOrbit) -> PeriodicOrbit:
    return find_periodic_orbit(family, a, saddle.period, saddle.point, tol=1e-12)


def find_tangency(
    family,
    a_range: tuple[float, float],
    saddle: PeriodicOrbit,
    tol: float = 1e-10,
    tol_xi: float = TOL_XI,
    tol_speed: float = TOL_SPEED,
    **distance_kwargs,
) -> TangencyRecord:
    """Brent root of the tangency distance over a_range, plus the fold fit."""
    a_lo, a_hi = min(a_range), max(a_range)
    cache: dict[float, PeriodicOrbit] = {}

    def saddle_at(a: float) -> PeriodicOrbit:
        if a not in cache:
            near = min(cache, key=lambda x: abs(x - a)) if cache else None
            base = cache[near] if near is not None else saddle
            cache[a] = find_periodic_orbit(family, a, saddle.period, base.point, tol=1e-12)
        return cache[a]

    def dist(a: float) -> float:
        return tangency_distance(family, a, saddle_at(a), **distance_kwargs)

    f_lo, f_hi = dist(a_lo), dist(a_hi)
    if f_lo == 0.0:
        a_star = a_lo
    elif f_hi == 0.0:
        a_star = a_hi
    elif f_lo * f_hi > 0.0:
        raise NoSignChange(f"distance has signs ({f_lo:+.3e}, {f_hi:+.3e}) on the range")
    else:
        a_star = _brent(dist, a_lo, a_hi, f_lo, f_hi, tol)

    details: dict = {}
    saddle_star = saddle_at(a_star)
    tangency_distance(family, a_star, saddle_star, _details=details, **distance_kwargs)
    if details.get("mode") == "1d":
        P = UnimodalMap.from_family(family, a_star)
        xi_hat = 0.5 * P.second_deriv(0.0)
    else:
        xi_hat = details.get("curvature", 0.0)
    h = max(1e-7, (a_hi - a_lo) * 1e-4)
    speed_hat = (dist(a_star + h) - dist(a_star - h)) / (2.0 * h)
    nondegenerate = abs(xi_hat) > tol_xi and abs(speed_hat) > tol_speed
    if abs(xi_hat) <= tol_xi:
        raise FitDegenerate(f"fold coefficient {xi_hat:.3e} below tolerance")
    return TangencyRecord(
        a_star=float(a_star),
        point=tuple(details.get("vertex", (math.nan, math.nan))),
        xi_hat=float(xi_hat),
        speed_hat=float(speed_hat),
        nondegenerate=bool(nondegenerate),
    )


def _brent(f, a, b, fa, fb, tol, max_iter=200):
    """Brent-Dekker root finding on a bracketing interval."""
    if abs(fa) < abs(fb):
        a, b, fa, fb = b, a, fb, fa
    c, fc = a, fa
    mflag = True
    d = c
    for _ in range(max_iter):
        if fb == 0.0 or abs(b - a) < tol:
            return b
        if fa != fc and fb != fc:
            s = (
                a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
            )
        else:
            s = b - fb * (b - a) / (fb - fa)
        cond = (
            not ((3 * a + b) / 4 < s < b or b < s < (3 * a + b) / 4)
            or (mflag and abs(s - b) >= abs(b - c) / 2)
            or (not mflag and abs(s - b) >= abs(c - d) / 2)
            or (mflag and abs(b - c) < tol)
            or (not mflag and abs(c - d) < tol)
        )
        if cond:
            s = 0.5 * (a + b)
            mflag = True
        else:
            mflag = False
        fs = f(s)
        d, c, fc = c, b, fb
        if fa * fs < 0:
            b, fb = s, fs
        else:
            a, fa = s, fs
        if abs(fa) < abs(fb):
            a, b, fa, fb = b, a, fb, fa
    return b


# --- lamination slices -------------------------------------------------------------


def slice_thickness(
    family,
    a: float,
    horseshoe: str,
    transversal: ManifoldArc,
    depth: int,
    leaf_samples: int = 384,
    min_leaves_hit: int = 4,
    resolution: float = 1e-5,
) -> ThicknessReport:
    """Thickness of the horseshoe lamination traced on a transversal arc.

    A stable transversal is cut by the unstable lamination (depth-limited
    forward images of the one-dimensional cylinders); an unstable transversal
    is cut by the stable leaves (level sets of P(x) + y through cylinder
    endpoints, the O(b)-accurate graph form).  b = 0 degenerates to the
    one-dimensional cover thickness.
    """
    which = {"C1": "C1", "C2": "C2", "C2-renormalized": "C2"}.get(horseshoe)
    if which is None:
        raise ValueError("horseshoe must be 'C1', 'C2' or 'C2-renormalized'")
    P = UnimodalMap.from_family(family, a)
    cover = cantor_cover(P, which, depth)
    if family.b == 0.0:
        return thickness(cover)

    if transversal.kind == "stable":
        params = _slice_by_unstable_leaves(family, a, cover, transversal, depth, leaf_samples)
    else:
        params = _slice_by_stable_leaves(P, cover, transversal)
    if len(params) < min_leaves_hit:
        raise TooFewIntersections(f"only {len(params)} lamination crossings")
    # Structure below the instrument resolution (relative to the slice span)
    # is polyline-crossing noise, not lamination geometry; the thickness is
    # read off the resolvable levels of the hierarchy.
    span = max(params) - min(params)
    merged = []
    for p in sorted(params):
        if merged and p - merged[-1] <= resolution * span:
            continue
        merged.append(p)
    if len(merged) < 3:
        raise TooFewIntersections(f"only {len(merged)} resolvable crossings")
    return _point_set_thickness(IntervalCover.from_points(merged, depth=depth))


def stable_transversal(family, a: float, saddle: PeriodicOrbit, length: float) -> ManifoldArc:
    """Two-branch local stable manifold stitched into one transversal polyline.

    A single branch emanating from a saddle inside the lamination strip
    cannot cross both sides of it; slice measurements use this stitched arc.
    """
    nodes = _stable_polyline(family, a, saddle, length)
    arclength = float(np.sum(np.linalg.norm(np.diff(nodes, axis=0), axis=1)))
    return ManifoldArc("stable", saddle.point, saddle.period, nodes, arclength)


def _point_set_thickness(cover: IntervalCover) -> ThicknessReport:
    """Thickness of a point-sampled slice.

    The outermost sample points bound gaps whose outward bridge is empty, a
    finite-sample artifact (the limiting set extends past them); those
    zero-length records are excluded from the minimum.
    """
    from .cantor import gaps_and_bridges

    records = [r for r in gaps_and_bridges(cover) if r.bridge_length > 0.0]
    if not records:
        return ThicknessReport(math.inf, None, None, ())
    best = None
    for rec in records:
        if best is None or rec.ratio < best.ratio:
            best = rec
    return ThicknessReport(best.ratio, best.gap, best.bridge, tuple(records))


def _transversal_frame(transversal: ManifoldArc):
    nodes = transversal.nodes
    origin = nodes[0]
    chord = nodes[-1] - nodes[0]
    norm = np.linalg.norm(chord)
    if norm == 0.0:
        raise TooFewIntersections("degenerate transversal")
    tangent = chord / norm
    normal = np.array([-tangent[1], tangent[0]])
    return origin, tangent, normal


def _slice_by_unstable_leaves(family, a, cover, transversal, depth, leaf_samples):
    origin, tangent, normal = _transversal_frame(transversal)
    span = np.ptp(transversal.nodes @ tangent)
    params = []
    for lo, hi in cover.pairs():
        ts = np.linspace(lo, hi, leaf_samples)
        pts = np.column_stack([ts, np.zeros_like(ts)])
        for _ in range(depth):
            pts = np.column_stack(
                [
                    pts[:, 0] * pts[:, 0] + a + pts[:, 1]
                    + (0.0 if family.is_pure else np.array([family.perturb_a.value(x, y, a) for x, y in pts])),
                    family.b * (pts[:, 0] if family.is_pure else np.array([x + family.perturb_b.value(x, y, a) for x, y in pts])),
                ]
            )
        rel = pts - origin
        side = rel @ normal
        along = rel @ tangent
        for i in range(len(side) - 1):
            if side[i] == 0.0:
                if 0.0 <= along[i] <= span:
                    params.append(float(along[i]))
            elif side[i] * side[i + 1] < 0.0:
                w = side[i] / (side[i] - side[i + 1])
                s = along[i] + w * (along[i + 1] - along[i])
                if 0.0 <= s <= span:
                    params.append(float(s))
    return _dedupe(params)


def _slice_by_stable_leaves(P, cover, transversal):
    origin, tangent, _ = _transversal_frame(transversal)
    nodes = transversal.nodes
    levels = sorted({P(x) for pair in cover.pairs() for x in pair})
    phi = np.array([P(x) + y for x, y in nodes])
    along = (nodes - origin) @ tangent
    params = []
    for c in levels:
        g = phi - c
        for i in range(len(g) - 1):
            if g[i] == 0.0:
                params.append(float(along[i]))
            elif g[i] * g[i + 1] < 0.0:
                w = g[i] / (g[i] - g[i + 1])
                params.append(float(along[i] + w * (along[i + 1] - along[i])))
    return _dedupe(params)


def _dedupe(params, rel_tol: float = 1e-9):
    if not params:
        return []
    params = sorted(params)
    scale = max(abs(params[0]), abs(params[-1]), 1e-30)
    out = [params[0]]
    for p in params[1:]:
        if p - out[-1] > rel_tol * scale:
            out.append(p)
    return out
