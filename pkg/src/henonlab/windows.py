"""Sink stability windows near a tangency and their scaling laws.

A window is the parameter interval on which an attracting orbit of a fixed
minimal period persists.  Each window is attributed the unstable multiplier
sigma of its generating saddle evaluated at that saddle's own tangency
parameter; window length then scales like sigma^-2 and the distance to the
tangency parameter like sigma^-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    HenonLikeFamily,
    PeriodicOrbit,
    derivative_products,
    find_periodic_orbit,
)
from .errors import (
    DegenerateJacobian,
    InsufficientSpread,
    NoConvergence,
    NoSinkAtSeed,
)
from .unimodal import UnimodalMap

BOUNDARY_SADDLE_NODE = "saddle_node"
BOUNDARY_PERIOD_DOUBLING = "period_doubling"
BOUNDARY_UNKNOWN = "unknown"


@dataclass(frozen=True)
class StabilityWindow:
    period: int
    sigma: float
    a_lo: float
    a_hi: float
    dist: float
    tangency_parameter: float | None = None
    boundary_types: tuple[str, str] = (BOUNDARY_UNKNOWN, BOUNDARY_UNKNOWN)

    @property
    def interval(self) -> tuple[float, float]:
        return (self.a_lo, self.a_hi)

    @property
    def length(self) -> float:
        return self.a_hi - self.a_lo


# --- sink detection -----------------------------------------------------------


def _attracting_orbit(family, a, period, seed, mult_margin=0.0, resolve_minimal=False):
    """Newton-confirmed attracting orbit of exact minimal period, or None.

    With resolve_minimal the orbit is re-solved at its minimal period when
    the requested period is a proper multiple; without it such orbits are
    rejected.
    """
    try:
        orbit = find_periodic_orbit(family, a, period, seed, tol=1e-12)
    except (NoConvergence, DegenerateJacobian):
        return None
    if not abs(orbit.mult_unstable) < 1.0 - mult_margin:
        return None
    minimal = _minimal_period(family, a, orbit)
    if minimal != period:
        if not resolve_minimal:
            return None
        return _attracting_orbit(family, a, minimal, orbit.point, mult_margin)
    return orbit


def _minimal_period(family, a, orbit: PeriodicOrbit) -> int:
    pts = orbit.points
    p = orbit.period
    scale = max(1.0, max(abs(x) + abs(y) for x, y in pts))
    for d in range(1, p):
        if p % d:
            continue
        if all(
            math.hypot(pts[(i + d) % p][0] - pts[i][0], pts[(i + d) % p][1] - pts[i][1])
            < 1e-7 * scale
            for i in range(p)
        ):
            return d
    return p


def detect_sink(
    family,
    a: float,
    max_period: int,
    transient: int = 2000,
    tol: float = 1e-6,
    seed=(0.0, 0.0),
    escape_radius: float = 10.0,
):
    """(period, orbit) of the attracting cycle reached from the critical seed.

    Iterates past the transient, looks for the smallest near-return period,
    then confirms by Newton and a strict multiplier test.  None when the
    orbit escapes or no attracting cycle of period <= max_period is found.
    """
    x, y = float(seed[0]), float(seed[1])
    b = family.b
    pure = family.is_pure
    for _ in range(transient):
        if pure:
            x, y = x * x + a + y, b * x
        else:
            x, y = family.eval(a, (x, y))
        if abs(x) + abs(y) > escape_radius:
            return None
    tail = [(x, y)]
    for _ in range(2 * max_period):
        if pure:
            x, y = x * x + a + y, b * x
        else:
            x, y = family.eval(a, (x, y))
        if abs(x) + abs(y) > escape_radius:
            return None
        tail.append((x, y))
    gaps = [
        math.hypot(tail[p][0] - tail[0][0], tail[p][1] - tail[0][1])
        for p in range(1, max_period + 1)
    ]
    near = [p for p in range(1, max_period + 1) if gaps[p - 1] < max(tol, 1e-2)]
    for p in near[:4]:  # smallest near-returning periods first
        orbit = _attracting_orbit(family, a, p, tail[0], resolve_minimal=True)
        if orbit is not None:
            return orbit.period, orbit
    return None


def scan_sinks(
    family,
    a_range: tuple[float, float],
    grid_count: int,
    max_period: int = 14,
    transient: int = 2000,
    tol: float = 1e-6,
):
    """(a, period) observations over a parameter grid (empty result allowed)."""
    if grid_count < 2:
        raise ValueError("grid_count must be >= 2")
    out = []
    for a in np.linspace(a_range[0], a_range[1], grid_count):
        hit = detect_sink(family, float(a), max_period, transient, tol)
        if hit is not None:
            out.append((float(a), hit[0]))
    return out


# --- window location ------------------------------------------------------------


def locate_window(
    family,
    period: int,
    a_seed: float,
    a_tol: float = 1e-12,
    tangency_parameter: float | None = None,
    saddle_multiplier: float | None = None,
    max_expansion: float = 2.0,
    orbit_seed=None,
) -> StabilityWindow:
    """Outward bisection on sink existence around a_seed, plus sigma attachment.

    sigma is the expansion of the generating saddle accumulated over the
    window period, evaluated at the saddle's tangency parameter: pass
    (tangency_parameter, saddle_multiplier) from principal_tangency.  The
    period-p window of the cascade then carries sigma = |mult|^p and its
    distance to the tangency parameter.  orbit_seed (a point on the sink)
    bypasses attractor detection from the critical seed, which can land on a
    coexisting attractor for b > 0.
    """
    if orbit_seed is not None:
        orbit = _attracting_orbit(family, a_seed, period, orbit_seed)
        if orbit is None:
            raise NoSinkAtSeed(f"no period-{period} sink at a = {a_seed}")
    else:
        hit = detect_sink(family, a_seed, max_period=period, transient=4000)
        if hit is None or hit[0] != period:
            raise NoSinkAtSeed(f"no period-{period} sink at a = {a_seed}")
        orbit = hit[1]

    seeds = {a_seed: orbit}

    def sink_at(a: float):
        near = min(seeds, key=lambda s: abs(s - a))
        got = _attracting_orbit(family, a, period, seeds[near].point)
        if got is not None:
            seeds[a] = got
        return got

    def edge(direction: int) -> tuple[float, PeriodicOrbit]:
        step = max(abs(a_seed), 1.0) * 1e-13
        inside, inside_orbit = a_seed, orbit
        while True:
            probe = inside + direction * step
            got = sink_at(probe)
            if got is None:
                outside = probe
                break
            inside, inside_orbit = probe, got
            step *= 2.0
            if step > max_expansion:
                raise NoSinkAtSeed("sink persists beyond the search range")
        while abs(outside - inside) > a_tol:
            mid = 0.5 * (outside + inside)
            got = sink_at(mid)
            if got is None:
                outside = mid
            else:
                inside, inside_orbit = mid, got
        return inside, inside_orbit

    right, right_orbit = edge(+1)
    left, left_orbit = edge(-1)
    a_lo, a_hi = min(left, right), max(left, right)
    types = (_boundary_type(left_orbit), _boundary_type(right_orbit))
    if a_lo == right:
        types = (types[1], types[0])

    sigma = math.nan
    a_tangency = None
    dist = math.nan
    if saddle_multiplier is not None:
        sigma = abs(saddle_multiplier) ** period
    if tangency_parameter is not None:
        a_tangency = float(tangency_parameter)
        dist = max(0.0, max(a_lo - a_tangency, a_tangency - a_hi))
    return StabilityWindow(
        period=period,
        sigma=sigma,
        a_lo=a_lo,
        a_hi=a_hi,
        dist=dist,
        tangency_parameter=a_tangency,
        boundary_types=types,
    )


def _boundary_type(orbit: PeriodicOrbit, tol: float = 1e-3) -> str:
    m = orbit.mult_unstable
    if abs(m.imag) > tol:
        return BOUNDARY_UNKNOWN
    if abs(m.real - 1.0) < tol:
        return BOUNDARY_SADDLE_NODE
    if abs(m.real + 1.0) < tol:
        return BOUNDARY_PERIOD_DOUBLING
    return BOUNDARY_UNKNOWN


def follow_sink(
    family_from,
    family_to,
    period: int,
    a_seed: float,
    steps: int = 100,
    search_step: float | None = None,
    max_search: int = 120,
) -> tuple[float, PeriodicOrbit]:
    """Track a period-p sink parameter along a homotopy between families.

    The stability window is a thin sloped strip in the (a, dissipation)
    plane, so each homotopy step predicts the parameter drift from the
    previous step and re-centers with a short expanding search.  A proximity
    guard on the orbit points prevents capture by a foreign window.
    Returns (parameter, sink orbit) at family_to.
    """
    from .core import _blend_tables

    hit = detect_sink(family_from, a_seed, period, transient=4000)
    if hit is None or hit[0] != period:
        raise NoSinkAtSeed(f"no period-{period} sink at a = {a_seed}")
    orbit = hit[1]
    a = a_seed
    if search_step is None:
        w0 = locate_window(family_from, period, a_seed)
        search_step = max(w0.length / 4.0, 1e-13)

    def family_at(t: float):
        b = (1 - t) * family_from.b + t * family_to.b
        return HenonLikeFamily(
            b,
            _blend_tables(family_from.perturb_a, family_to.perturb_a, t),
            _blend_tables(family_from.perturb_b, family_to.perturb_b, t),
            max(family_from.delta_bound, family_to.delta_bound),
        )

    def recenter(fam, a_pred, prev_point):
        for j in range(0, max_search):
            for sgn in ((0.0,) if j == 0 else (-1.0, 1.0)):
                a_try = a_pred + sgn * j * search_step
                try:
                    cand = find_periodic_orbit(fam, a_try, period, prev_point, tol=1e-12)
                except (NoConvergence, DegenerateJacobian):
                    continue
                if (
                    abs(cand.mult_unstable) < 0.7
                    and math.hypot(
                        cand.point[0] - prev_point[0], cand.point[1] - prev_point[1]
                    )
                    < 0.3
                    and _minimal_period(fam, a_try, cand) == period
                ):
                    return a_try, cand
        return None

    # Adaptive homotopy: the drift slope da/dt is learned on the fly and the
    # step shrinks whenever the local search fails to reabsorb the window.
    t = 0.0
    dt = 1.0 / steps
    slope = 0.0
    guard = 0
    while t < 1.0:
        guard += 1
        if guard > 100000:
            raise NoSinkAtSeed("homotopy stalled")
        dt = min(dt, 1.0 - t)
        fam = family_at(t + dt)
        found = recenter(fam, a + slope * dt, orbit.point)
        if found is None:
            dt /= 4.0
            if dt < 1e-9:
                raise NoSinkAtSeed(f"window lost during homotopy at t = {t}")
            continue
        slope = (found[0] - a) / dt
        a, orbit = found
        t += dt
        dt *= 1.3
    return a, orbit


def horseshoe_saddles(family, a: float, periods=(4, 5, 6)) -> list[PeriodicOrbit]:
    """Distinct saddle cycles of the horseshoe at parameter a.

    Seeds come from the unimodal reduction: each branch word is pulled back
    through the two inverse branches to its one-dimensional periodic point,
    then polished by the planar Newton solve.
    """
    from .unimodal import inverse_branches

    P = UnimodalMap.build(a, family.perturb_a)
    orbits: list[PeriodicOrbit] = []
    seen = set()
    for p in periods:
        for word in range(2**p):
            signs = [1 if (word >> k) & 1 else -1 for k in range(p)]
            x = 0.5
            for _ in range(40):
                for s in reversed(signs):
                    pm, pp = inverse_branches(P, x)
                    x = pp if s > 0 else pm
            try:
                orb = find_periodic_orbit(family, a, p, (x, family.b * x), tol=1e-12)
            except (NoConvergence, DegenerateJacobian):
                continue
            key = (p, tuple(sorted(round(q[0], 7) for q in orb.points)))
            if key in seen or not orb.is_saddle():
                continue
            seen.add(key)
            orbits.append(orb)
    return orbits


# --- generating-saddle tangency ------------------------------------------------


def principal_tangency(
    family,
    a_range: tuple[float, float] = (-2.1, -1.9),
    seed_point=(1.9, 0.0),
) -> tuple[float, float]:
    """(a0, |mult_u|) of the family's primary saddle at its tangency parameter.

    The generating saddle of the window cascade is the orientation-preserving
    fixed point; its tangency parameter comes from find_tangency and the
    returned multiplier is the one-step unstable eigenvalue there.
    """
    from .tangency import find_tangency

    a_mid = 0.5 * (a_range[0] + a_range[1])
    saddle = find_periodic_orbit(family, a_mid, 1, seed_point, tol=1e-12)
    record = find_tangency(family, a_range, saddle)
    at_tangency = find_periodic_orbit(family, record.a_star, 1, saddle.point, tol=1e-12)
    return record.a_star, abs(at_tangency.mult_unstable)


# --- scaling fit -----------------------------------------------------------------


@dataclass(frozen=True)
class ScalingFit:
    slope_length: float
    slope_dist: float
    diagnostics: dict = field(default_factory=dict)


def scaling_fit(windows, min_count: int = 4, min_decades: float = 2.0) -> ScalingFit:
    """Least-squares slopes of log(length) and log(dist) against log(sigma)."""
    usable = [w for w in windows if math.isfinite(w.sigma) and w.sigma > 0.0]
    if len(usable) < min_count:
        raise InsufficientSpread(f"only {len(usable)} windows with multipliers")
    sigmas = np.array([w.sigma for w in usable])
    if math.log10(sigmas.max() / sigmas.min()) < min_decades:
        raise InsufficientSpread("multiplier spread below the required decades")
    log_sigma = np.log(sigmas)
    log_len = np.log(np.array([w.length for w in usable]))
    slope_len, icpt_len = np.polyfit(log_sigma, log_len, 1)
    dist_ok = [w for w in usable if math.isfinite(w.dist) and w.dist > 0.0]
    slope_dist = math.nan
    icpt_dist = math.nan
    if len(dist_ok) >= min_count:
        ls = np.log(np.array([w.sigma for w in dist_ok]))
        ld = np.log(np.array([w.dist for w in dist_ok]))
        slope_dist, icpt_dist = np.polyfit(ls, ld, 1)
    return ScalingFit(
        float(slope_len),
        float(slope_dist),
        {
            "intercept_length": float(icpt_len),
            "intercept_dist": float(icpt_dist),
            "count": len(usable),
            "sigma_range": (float(sigmas.min()), float(sigmas.max())),
        },
    )


# --- exponent balance -----------------------------------------------------------


@dataclass(frozen=True)
class ExponentBalanceReport:
    exponent: float
    bound_constant: float
    c_fit: float
    passes: bool
    pairs: tuple  # (n, n_prime, sigma_n, sigma_minus_nprime)


def exponent_balance_check(
    family,
    a: float,
    base,
    b: float,
    n_max: int,
    period: int | None = None,
    c_cap: float = 5.0,
) -> ExponentBalanceReport:
    """Fit sigma_n * sigma_{-n'} <= C * sigma_n^e with n' from the sandwich
    lambda_{-n'-1} <= sigma_n^{-1} <= lambda_{-n'}.

    For 0 < b < 1 the exponent satisfies e = 1 - c/log(b) with c > 0, i.e.
    the excess e - 1 ~ c/|log b| vanishes as b -> 0.  Passing requires the
    fitted c to stay below c_cap (and e not to dip materially below 1).
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    m_max = 2 * n_max + 10
    prods = derivative_products(
        family, a, base, range(-m_max, n_max + 1), period=period
    )
    sigma = {p.n: p.sigma_n for p in prods}
    lam = {p.n: p.lambda_n for p in prods}

    pairs = []
    for n in range(1, n_max + 1):
        target = 1.0 / sigma[n]
        if target >= 1.0:
            # no expansion accumulated yet; the sandwich degenerates to n' = 0
            n_prime = 0
        else:
            n_prime = None
            for m in range(0, m_max):
                lam_m = lam[-m] if m > 0 else 1.0
                lam_m1 = lam[-(m + 1)]
                if lam_m1 <= target <= lam_m:
                    n_prime = m
                    break
            if n_prime is None:
                n_prime = m_max
        sig_back = sigma[-n_prime] if n_prime > 0 else 1.0
        pairs.append((n, n_prime, sigma[n], sig_back))

    if len(pairs) < 2:
        return ExponentBalanceReport(1.0, 1.0, 0.0, True, tuple(pairs))
    xs = np.array([math.log(p[2]) for p in pairs])
    ys = np.array([math.log(p[2] * p[3]) for p in pairs])
    if np.ptp(xs) < 1e-12:
        return ExponentBalanceReport(1.0, 1.0, 0.0, True, tuple(pairs))
    e, icpt = np.polyfit(xs, ys, 1)
    bound_c = float(np.exp(np.max(ys - e * xs)))
    log_b = math.log(b)
    c_fit = float((e - 1.0) * (-log_b))
    passes = bool(e >= 0.9 and e <= 1.0 + c_cap / (-log_b))
    return ExponentBalanceReport(float(e), bound_c, c_fit, passes, tuple(pairs))
