"""Hénon-like map families and orbit-level numerics.

The family is (x, y) -> (x^2 + a + y + A_a(x,y), b*x + b*B_a(x,y)) where the
perturbations A, B are polynomials in (x, y, a) held as coefficient tables.
With empty tables this is the pure Hénon family, for which many quantities
(determinant -b, Chebyshev ground truths at a = -2, b = 0) are exact.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConeFieldViolation,
    DegenerateJacobian,
    InverseSolveFailed,
    LostHyperbolicity,
    NoConvergence,
)

Point = tuple[float, float]

DEFAULT_NEWTON_TOL = 1e-12
DEFAULT_NEWTON_MAXITER = 64
DEFAULT_ESCAPE_RADIUS = 10.0
HYPERBOLICITY_BAND = (0.95, 1.05)
POWER_ITER_STEPS = 20
CONE_TAN = 0.5  # cone opening tan; sin of the minimum splitting angle below


@dataclass(frozen=True)
class PolyTable:
    """Polynomial in (x, y, a) as a tuple of (i, j, k, coeff) monomials."""

    terms: tuple[tuple[int, int, int, float], ...] = ()

    @classmethod
    def from_entries(cls, entries) -> "PolyTable":
        terms = tuple(
            (int(e["i"]), int(e["j"]), int(e["k"]), float(e["coeff"]))
            if isinstance(e, dict)
            else (int(e[0]), int(e[1]), int(e[2]), float(e[3]))
            for e in entries
        )
        return cls(terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def max_abs_coeff(self) -> float:
        return max((abs(c) for *_, c in self.terms), default=0.0)

    def value(self, x: float, y: float, a: float) -> float:
        return sum(c * x**i * y**j * a**k for i, j, k, c in self.terms)

    def dx(self, x: float, y: float, a: float) -> float:
        return sum(
            c * i * x ** (i - 1) * y**j * a**k
            for i, j, k, c in self.terms
            if i > 0
        )

    def dy(self, x: float, y: float, a: float) -> float:
        return sum(
            c * j * x**i * y ** (j - 1) * a**k
            for i, j, k, c in self.terms
            if j > 0
        )

    def to_entries(self) -> list[dict]:
        return [
            {"i": i, "j": j, "k": k, "coeff": c} for i, j, k, c in self.terms
        ]


@dataclass(frozen=True)
class HenonLikeFamily:
    """Parameterized planar family with bounded polynomial perturbations.

    b is the dissipation parameter; delta_bound is the declared sup bound on
    every perturbation coefficient (checked at construction).
    """

    b: float
    perturb_a: PolyTable = field(default_factory=PolyTable)
    perturb_b: PolyTable = field(default_factory=PolyTable)
    delta_bound: float = 0.0

    def __post_init__(self):
        worst = max(self.perturb_a.max_abs_coeff(), self.perturb_b.max_abs_coeff())
        if worst > self.delta_bound + 1e-15:
            raise ValueError(
                f"perturbation coefficient {worst} exceeds delta_bound {self.delta_bound}"
            )

    @property
    def is_pure(self) -> bool:
        return not self.perturb_a and not self.perturb_b

    # --- pointwise maps ---------------------------------------------------

    def eval(self, a: float, p) -> Point:
        """Image (x^2 + a + y + A_a(x,y), b*(x + B_a(x,y)))."""
        x, y = float(p[0]), float(p[1])
        if self.is_pure:
            return (x * x + a + y, self.b * x)
        return (
            x * x + a + y + self.perturb_a.value(x, y, a),
            self.b * (x + self.perturb_b.value(x, y, a)),
        )

    def jacobian(self, a: float, p) -> np.ndarray:
        """Exact derivative with respect to (x, y); det = -b for the pure family."""
        x, y = float(p[0]), float(p[1])
        if self.is_pure:
            return np.array([[2.0 * x, 1.0], [self.b, 0.0]])
        return np.array(
            [
                [
                    2.0 * x + self.perturb_a.dx(x, y, a),
                    1.0 + self.perturb_a.dy(x, y, a),
                ],
                [
                    self.b * (1.0 + self.perturb_b.dx(x, y, a)),
                    self.b * self.perturb_b.dy(x, y, a),
                ],
            ]
        )

    def det_jacobian(self, a: float, p) -> float:
        if self.is_pure:
            return -self.b
        m = self.jacobian(a, p)
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]

    def invert(self, a: float, w, seed=None, tol: float = 1e-13) -> Point:
        """Solve eval(a, z) = w; the family is a diffeomorphism for b != 0."""
        if self.b == 0.0:
            raise InverseSolveFailed("family is not invertible at b = 0")
        wx, wy = float(w[0]), float(w[1])
        x = wy / self.b
        y = wx - x * x - a
        if self.is_pure:
            return (x, y)
        z = np.array(seed if seed is not None else (x, y), dtype=float)
        for _ in range(DEFAULT_NEWTON_MAXITER):
            fx, fy = self.eval(a, z)
            rx, ry = fx - wx, fy - wy
            if abs(rx) + abs(ry) < tol:
                return (float(z[0]), float(z[1]))
            m = self.jacobian(a, z)
            det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
            if abs(det) < 1e-15:
                raise InverseSolveFailed("near-singular Jacobian in inverse solve")
            z[0] -= (m[1, 1] * rx - m[0, 1] * ry) / det
            z[1] -= (-m[1, 0] * rx + m[0, 0] * ry) / det
        raise InverseSolveFailed("inverse Newton did not converge")

    # --- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "b": self.b,
            "delta_bound": self.delta_bound,
            "perturbA": self.perturb_a.to_entries(),
            "perturbB": self.perturb_b.to_entries(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "HenonLikeFamily":
        return cls(
            b=float(data["b"]),
            perturb_a=PolyTable.from_entries(data.get("perturbA", [])),
            perturb_b=PolyTable.from_entries(data.get("perturbB", [])),
            delta_bound=float(data.get("delta_bound", 0.0)),
        )

    @classmethod
    def load(cls, path) -> "HenonLikeFamily":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    @classmethod
    def pure(cls, b: float) -> "HenonLikeFamily":
        return cls(b=b)


class LinearPlanarMap:
    """Linear test map z -> M z, exposing the family interface.

    Used as ground truth for derivative products: a diagonal M with entries
    (lam, sig) has lambda_n = lam^n and sigma_n = sig^n exactly.
    """

    def __init__(self, matrix):
        self.m = np.asarray(matrix, dtype=float)
        self.b = float(abs(np.linalg.det(self.m)))

    @classmethod
    def diagonal(cls, lam: float, sig: float) -> "LinearPlanarMap":
        return cls([[sig, 0.0], [0.0, lam]])

    def eval(self, a: float, p) -> Point:
        q = self.m @ np.asarray(p, dtype=float)
        return (float(q[0]), float(q[1]))

    def jacobian(self, a: float, p) -> np.ndarray:
        return self.m

    def det_jacobian(self, a: float, p) -> float:
        return float(np.linalg.det(self.m))

    def invert(self, a: float, w, seed=None, tol: float = 1e-13) -> Point:
        q = np.linalg.solve(self.m, np.asarray(w, dtype=float))
        return (float(q[0]), float(q[1]))


@dataclass(frozen=True)
class PeriodicOrbit:
    """Periodic orbit with the multipliers of its period-map differential.

    Multipliers are stored as complex numbers; a real saddle has real ones.
    |mult_stable| <= |mult_unstable| always holds.
    """

    period: int
    points: tuple[Point, ...]
    mult_stable: complex
    mult_unstable: complex
    residual: float

    @property
    def point(self) -> Point:
        return self.points[0]

    def is_sink(self, margin: float = 0.0) -> bool:
        return abs(self.mult_unstable) < 1.0 - margin

    def is_saddle(self, margin: float = 0.0) -> bool:
        return (
            abs(self.mult_stable) < 1.0 - margin
            and abs(self.mult_unstable) > 1.0 + margin
        )


@dataclass(frozen=True)
class DerivativeProducts:
    """Contraction/expansion factors along the estimated splitting.

    n > 0 measures D f^n at the base point; n < 0 measures D f^{|n|} along
    the backward orbit ending at the base point.
    """

    n: int
    lambda_n: float
    sigma_n: float


# --- orbits ------------------------------------------------------------------


def iterate(family, a: float, p, n: int, escape_radius: float = DEFAULT_ESCAPE_RADIUS):
    """First n images of p, truncated at escape.

    Returns (points, escaped); points has min(n, steps-until-escape) entries
    and the escaping image is included.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    out = []
    z = (float(p[0]), float(p[1]))
    escaped = False
    for _ in range(n):
        z = family.eval(a, z)
        out.append(z)
        if math.hypot(z[0], z[1]) > escape_radius:
            escaped = True
            break
    return out, escaped


def orbit_points(family, a: float, p, period: int) -> tuple[Point, ...]:
    pts = [(float(p[0]), float(p[1]))]
    for _ in range(period - 1):
        pts.append(family.eval(a, pts[-1]))
    return tuple(pts)


def _period_map_jacobian(family, a: float, pts) -> np.ndarray:
    m = np.eye(2)
    for z in pts:
        m = family.jacobian(a, z) @ m
    return m


def _eig2(m: np.ndarray, det: float | None = None) -> tuple[complex, complex]:
    """Eigenvalues of a real 2x2, sorted by modulus (stable first).

    The small root comes from det / big to avoid subtractive cancellation
    when |det| is many orders below |trace|; an externally supplied det
    (e.g. the exact chain-rule product) sharpens it further.
    """
    tr = m[0, 0] + m[1, 1]
    if det is None:
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = tr * tr - 4.0 * det
    if disc >= 0.0:
        r = math.sqrt(disc)
        big = 0.5 * (tr + r) if tr >= 0.0 else 0.5 * (tr - r)
        if big == 0.0:
            return (0j, 0j)
        small = det / big
        e1, e2 = complex(small), complex(big)
    else:
        r = cmath.sqrt(complex(disc))
        e1, e2 = (tr - r) / 2.0, (tr + r) / 2.0
    return (e1, e2) if abs(e1) <= abs(e2) else (e2, e1)


def find_periodic_orbit(
    family,
    a: float,
    period: int,
    seed,
    tol: float = DEFAULT_NEWTON_TOL,
    max_iter: int = DEFAULT_NEWTON_MAXITER,
) -> PeriodicOrbit:
    """Newton solve of f^period(z) = z from the seed."""
    if period < 1:
        raise ValueError("period must be >= 1")
    eps = float(np.finfo(float).eps)
    z = np.array([float(seed[0]), float(seed[1])])
    accepted = False
    for _ in range(max_iter):
        pts = orbit_points(family, a, z, period)
        w = family.eval(a, pts[-1])
        rx, ry = w[0] - z[0], w[1] - z[1]
        if not (math.isfinite(rx) and math.isfinite(ry)) or math.hypot(*z) > 1e8:
            raise NoConvergence("orbit diverged during Newton iteration")
        period_jac = _period_map_jacobian(family, a, pts)
        # The closure residual is floor-limited by eps * |D f^p|.
        attainable = 64.0 * eps * max(1.0, float(np.abs(period_jac).max()))
        if math.hypot(rx, ry) <= max(tol, attainable):
            accepted = True
            break
        m = period_jac - np.eye(2)
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det) < 1e-12 * max(1.0, abs(m).max() ** 2):
            raise DegenerateJacobian(
                "period-map differential minus identity is singular"
            )
        z[0] -= (m[1, 1] * rx - m[0, 1] * ry) / det
        z[1] -= (-m[1, 0] * rx + m[0, 0] * ry) / det
    if not accepted:
        raise NoConvergence(f"no periodic orbit within {max_iter} Newton steps")

    residual = max(
        math.hypot(fx - qx, fy - qy)
        for (fx, fy), (qx, qy) in zip(
            [family.eval(a, p) for p in pts], list(pts[1:]) + [pts[0]]
        )
    )
    # chain-rule determinant: machine accurate even when the matrix product
    # is badly conditioned (pure family: exactly (-b)^period)
    det_exact = 1.0
    for p in pts:
        det_exact *= family.det_jacobian(a, p)
    mult_s, mult_u = _eig2(period_jac, det=det_exact)
    return PeriodicOrbit(period, pts, mult_s, mult_u, residual)


def continue_orbit(
    family,
    orbit: PeriodicOrbit,
    a_from: float,
    a_to: float,
    steps: int,
    family_to=None,
    band: tuple[float, float] = HYPERBOLICITY_BAND,
    tol: float = DEFAULT_NEWTON_TOL,
) -> PeriodicOrbit:
    """Predictor-corrector continuation of a hyperbolic periodic orbit.

    Follows the parameter path a_from -> a_to; if family_to is given, the
    dissipation b and perturbation tables are interpolated along the same
    path (homotopy between families).  Raises LostHyperbolicity when a
    multiplier modulus enters the declared band around 1.
    """
    lo, hi = band

    def check(orb: PeriodicOrbit, a: float):
        for mult in (orb.mult_stable, orb.mult_unstable):
            if lo <= abs(mult) <= hi:
                raise LostHyperbolicity(
                    f"multiplier modulus {abs(mult):.6f} inside [{lo}, {hi}] at a={a}"
                )

    check(orbit, a_from)
    if steps == 0:
        return orbit

    def family_at(t: float):
        if family_to is None:
            return family
        b = (1 - t) * family.b + t * family_to.b
        terms_a = _blend_tables(family.perturb_a, family_to.perturb_a, t)
        terms_b = _blend_tables(family.perturb_b, family_to.perturb_b, t)
        bound = max(family.delta_bound, family_to.delta_bound)
        return HenonLikeFamily(b, terms_a, terms_b, bound)

    current = orbit
    for k in range(1, steps + 1):
        t = k / steps
        a = a_from + t * (a_to - a_from)
        fam = family_at(t)
        try:
            current = find_periodic_orbit(
                fam, a, orbit.period, current.point, tol=tol
            )
        except (NoConvergence, DegenerateJacobian):
            if _near_band(current, lo, hi, widen=2.0):
                raise LostHyperbolicity(
                    f"orbit lost near a={a}; multipliers approached modulus 1"
                )
            raise
        check(current, a)
    return current


def _near_band(orbit: PeriodicOrbit, lo: float, hi: float, widen: float) -> bool:
    span = (hi - lo) * widen / 2.0
    mid = (hi + lo) / 2.0
    return any(
        abs(abs(m) - mid) <= span for m in (orbit.mult_stable, orbit.mult_unstable)
    )


def _blend_tables(t1: PolyTable, t2: PolyTable, t: float) -> PolyTable:
    keys = {term[:3] for term in t1.terms} | {term[:3] for term in t2.terms}
    d1 = {term[:3]: term[3] for term in t1.terms}
    d2 = {term[:3]: term[3] for term in t2.terms}
    return PolyTable(
        tuple(
            (i, j, k, (1 - t) * d1.get((i, j, k), 0.0) + t * d2.get((i, j, k), 0.0))
            for i, j, k in sorted(keys)
        )
    )


# --- derivative products along orbits ----------------------------------------


def _adjugate(m: np.ndarray) -> np.ndarray:
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])


def _orbit_segment(family, a, base, lo: int, hi: int, period=None) -> dict:
    """Orbit points indexed lo..hi around the base (index 0).

    Backward points come from cyclic wrap for periodic bases, otherwise from
    the inverse map (requires b != 0).
    """
    pts = {0: (float(base[0]), float(base[1]))}
    for i in range(1, hi + 1):
        pts[i] = family.eval(a, pts[i - 1])
    if lo < 0:
        if period is not None:
            cycle = orbit_points(family, a, base, period)
            for i in range(-1, lo - 1, -1):
                pts[i] = cycle[i % period]
        else:
            for i in range(-1, lo - 1, -1):
                pts[i] = family.invert(a, pts[i + 1])
    return pts


def _unstable_direction(family, a, pts, i: int, steps: int) -> np.ndarray:
    v = np.array([0.92387953, 0.38268343])  # generic direction
    for j in range(i - steps, i):
        v = family.jacobian(a, pts[j]) @ v
        norm = math.hypot(v[0], v[1])
        if norm == 0.0:
            raise ConeFieldViolation("unstable power iteration collapsed")
        v /= norm
    return v


def _stable_direction(family, a, pts, i: int, steps: int) -> np.ndarray:
    # Pull a generic vector back through the adjugate cocycle: the adjugate
    # of the one-step Jacobian exists even at b = 0, and its dominant
    # direction converges to the most contracted input direction of D f^n.
    v = np.array([0.80901699, 0.58778525])
    for j in range(i + steps - 1, i - 1, -1):
        v = _adjugate(family.jacobian(a, pts[j])) @ v
        norm = math.hypot(v[0], v[1])
        if norm == 0.0:
            raise ConeFieldViolation("stable adjugate iteration collapsed")
        v /= norm
    return v


def derivative_products(
    family,
    a: float,
    base,
    n_range,
    period: int | None = None,
    power_steps: int = POWER_ITER_STEPS,
    cone_tan: float = CONE_TAN,
) -> list[DerivativeProducts]:
    """lambda_n, sigma_n for each n in n_range along the orbit of base.

    Directions are re-estimated independently at every orbit point with
    power_steps cocycle iterations; each product then multiplies per-step
    norms of the one-step Jacobian on the estimated direction.  A cone test
    (splitting angle at least atan(cone_tan)) guards every point used.
    """
    ns = sorted(set(int(n) for n in n_range))
    lo = min(min(ns), 0)
    hi = max(max(ns), 0)
    pts = _orbit_segment(family, a, base, lo - power_steps, hi + power_steps, period)

    min_sin = cone_tan / math.hypot(1.0, cone_tan)
    e_u, e_s = {}, {}
    for i in range(lo, hi + 1):
        eu = _unstable_direction(family, a, pts, i, power_steps)
        es = _stable_direction(family, a, pts, i, power_steps)
        cross = abs(eu[0] * es[1] - eu[1] * es[0])
        if cross < min_sin:
            raise ConeFieldViolation(
                f"splitting angle sin {cross:.3e} below {min_sin:.3e} at orbit index {i}"
            )
        e_u[i], e_s[i] = eu, es

    step_sigma = {}
    step_lambda = {}
    for i in range(lo, hi):
        jac = family.jacobian(a, pts[i])
        su = jac @ e_u[i]
        ss = jac @ e_s[i]
        step_sigma[i] = math.hypot(su[0], su[1])
        step_lambda[i] = math.hypot(ss[0], ss[1])

    out = []
    for n in ns:
        if n == 0:
            out.append(DerivativeProducts(0, 1.0, 1.0))
            continue
        rng = range(0, n) if n > 0 else range(n, 0)
        log_sig = sum(math.log(step_sigma[i]) for i in rng)
        log_lam = sum(math.log(max(step_lambda[i], 1e-300)) for i in rng)
        out.append(DerivativeProducts(n, math.exp(log_lam), math.exp(log_sig)))
    return out


def diameter_proxy(products: list[DerivativeProducts], n: int, n_prime: int) -> float:
    """max(sigma_n^{-1}, lambda_{-n'}): the cylinder-diameter proxy."""
    sig = {p.n: p.sigma_n for p in products}
    lam = {p.n: p.lambda_n for p in products}
    return max(1.0 / sig[n], lam[-n_prime] if n_prime > 0 else 1.0)
