"""Numeric return-map renormalization near a tangency.

The (n+1)-step return map is sampled on an auto-scaled box around the fold
of the one-dimensional reduction, fitted to the quadratic normal form
(xi x^2 + theta (a - a_n) + gamma y, q + zeta x), and conjugated by the
affine chart normalizing the quadratic coefficient to one.  The determinant
of the rescaled return map decays like b^(n+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    FoldOutsideBox,
    NoConvergence,
    NoFixedPoint,
    OrbitEscaped,
    RankDeficientFit,
)
from .unimodal import UnimodalMap

DEFAULT_GRID = 33
DEFAULT_CHART_HALFWIDTH = 0.1  # box side 0.2 in normalized (chart) units
DEFAULT_PARAM_SAMPLES = 5


@dataclass(frozen=True)
class SampledReturnMap:
    """Grid samples of the composed return map over a small parameter slice."""

    n: int
    n_transit: int
    a_values: np.ndarray  # (A,)
    grid: np.ndarray  # (G, 2) input points, shared across parameters
    images: np.ndarray  # (A, G, 2)
    det_products: np.ndarray  # (A, G) chain-rule |det| along each orbit
    center: tuple[float, float]
    halfwidth: float  # x halfwidth
    halfwidth_y: float

    @property
    def steps(self) -> int:
        return self.n + self.n_transit

    def rows(self):
        for ia, a in enumerate(self.a_values):
            for g in range(self.grid.shape[0]):
                yield (
                    float(self.grid[g, 0]),
                    float(self.grid[g, 1]),
                    float(a),
                    float(self.images[ia, g, 0]),
                    float(self.images[ia, g, 1]),
                )


@dataclass(frozen=True)
class RenormalizedFamily:
    """Affine-chart-normalized quadratic fit of a sampled return map."""

    n: int
    chart: dict
    delta: float
    det_estimate: float
    a_map: tuple[float, float]  # renormalized parameter = slope*(a - a_mid) + intercept
    fitted: dict
    diagnostics: dict = field(default_factory=dict)

    def renormalized_parameter(self, a: float) -> float:
        slope, intercept = self.a_map
        return slope * (a - self.fitted["a_mid"]) + intercept

    def chart_forward(self, p) -> tuple[float, float]:
        xi = self.chart["xi"]
        return (
            xi * (p[0] - self.chart["fold_x"]),
            self.chart["y_scale"] * (p[1] - self.chart["y_offset"]),
        )

    def chart_inverse(self, u) -> tuple[float, float]:
        xi = self.chart["xi"]
        return (
            u[0] / xi + self.chart["fold_x"],
            u[1] / self.chart["y_scale"] + self.chart["y_offset"],
        )


def _fold_of_composition(g, g_at, x_seed: float = 0.0):
    """(x_fold, xi_probe, theta_probe) of the scalar section x -> g(a, x).

    g(a, x) is the first component of the composed return map along y = 0;
    g_at evaluates it at shifted parameters for the theta probe.  Two probe
    stages keep the finite-difference step proportional to the fold scale.
    """
    x = x_seed
    xi = 1.0
    for h in (1e-5, None):
        if h is None:
            h = max(1e-8, 0.01 / max(abs(xi), 1.0))
        for _ in range(80):
            d1 = (g(x + h) - g(x - h)) / (2.0 * h)
            d2 = (g(x + h) - 2.0 * g(x) + g(x - h)) / (h * h)
            if d2 == 0.0:
                raise NoConvergence("degenerate fold probe")
            step = d1 / d2
            x -= step
            if abs(step) < h * 1e-4:
                break
        else:
            raise NoConvergence("fold probe did not converge")
        xi = 0.5 * (g(x + h) - 2.0 * g(x) + g(x - h)) / (h * h)
    ha = 1e-7
    theta = (g_at(ha, x) - g_at(-ha, x)) / (2.0 * ha)
    return x, xi, theta


def return_map(
    family,
    tangency,
    n: int,
    box: tuple[tuple[float, float], float] | None = None,
    grid: int = DEFAULT_GRID,
    a_values=None,
    n_transit: int = 1,
    chart_halfwidth: float = DEFAULT_CHART_HALFWIDTH,
    escape_radius: float = 10.0,
) -> SampledReturnMap:
    """Sample the (n + n_transit)-step return map on a box at the fold.

    `tangency` is a TangencyRecord or a bare tangency parameter.  The box
    defaults to the region where the rescaled fold coordinate spans
    [-chart_halfwidth, chart_halfwidth]; it shrinks like the squared
    expansion, per the renormalization scaling.
    """
    a_star = getattr(tangency, "a_star", None)
    if a_star is None:
        a_star = float(tangency)
    steps = n + n_transit

    def compose(a, z):
        x, y = z
        for _ in range(steps):
            x, y = family.eval(a, (x, y))
        return x

    x_fold, xi_probe, theta_probe = _fold_of_composition(
        lambda x: compose(a_star, (x, 0.0)),
        lambda da, x: compose(a_star + da, (x, 0.0)),
    )

    h = 1e-8
    dy_probe = (
        compose(a_star, (x_fold, h)) - compose(a_star, (x_fold, -h))
    ) / (2.0 * h)
    if box is None:
        # chart coordinates are u = xi (x - p), v = xi gamma (y - y0): size
        # the physical box so both span [-chart_halfwidth, chart_halfwidth]
        halfwidth = chart_halfwidth / max(abs(xi_probe), 1.0)
        halfwidth_y = chart_halfwidth / max(abs(xi_probe * dy_probe), 1.0)
        center = (x_fold, 0.0)
    else:
        center, halfwidth = box
        halfwidth_y = halfwidth
    if a_values is None:
        da = chart_halfwidth / max(abs(xi_probe * theta_probe), 1e-12)
        a_values = a_star + np.linspace(-da, da, DEFAULT_PARAM_SAMPLES)
    a_values = np.asarray(a_values, dtype=float)

    side = np.linspace(-halfwidth, halfwidth, grid)
    side_y = np.linspace(-halfwidth_y, halfwidth_y, grid)
    gx, gy = np.meshgrid(center[0] + side, center[1] + side_y)
    pts = np.column_stack([gx.ravel(), gy.ravel()])

    images = np.empty((len(a_values), pts.shape[0], 2))
    dets = np.empty((len(a_values), pts.shape[0]))
    for ia, a in enumerate(a_values):
        for g in range(pts.shape[0]):
            x, y = pts[g]
            logdet = 0.0
            for k in range(steps):
                logdet += math.log(max(abs(family.det_jacobian(a, (x, y))), 1e-300))
                x, y = family.eval(a, (x, y))
                if abs(x) + abs(y) > escape_radius:
                    raise OrbitEscaped(
                        f"grid point {tuple(pts[g])} escaped at step {k + 1} (a={a})"
                    )
            images[ia, g] = (x, y)
            dets[ia, g] = math.exp(logdet)
    return SampledReturnMap(
        n=n,
        n_transit=n_transit,
        a_values=a_values,
        grid=pts,
        images=images,
        det_products=dets,
        center=(float(center[0]), float(center[1])),
        halfwidth=float(halfwidth),
        halfwidth_y=float(halfwidth_y),
    )


def _scaled_lstsq(design: np.ndarray, rhs: np.ndarray):
    """Column-scaled least squares; returns (coefficients, residuals)."""
    scale = np.abs(design).max(axis=0)
    if np.any(scale == 0.0):
        raise RankDeficientFit("degenerate design column")
    scaled = design / scale
    coef, _, rank, _ = np.linalg.lstsq(scaled, rhs, rcond=None)
    if rank < design.shape[1]:
        raise RankDeficientFit(f"design rank {rank} < {design.shape[1]}")
    coef = coef / scale
    return coef, rhs - design @ coef


def fit_normal_form(sampled: SampledReturnMap, min_grid: int = 25) -> RenormalizedFamily:
    """Least-squares quadratic normal form plus the normalizing affine chart.

    delta is the sup-norm, in chart units, of everything the normal form
    does not capture over the sampled grid.
    """
    if sampled.grid.shape[0] < min_grid:
        raise RankDeficientFit(f"need at least {min_grid} grid points")
    if len(sampled.a_values) < 3:
        raise RankDeficientFit("need at least 3 parameter samples")
    a_mid = float(np.mean(sampled.a_values))
    t = np.tile(sampled.grid[:, 0], len(sampled.a_values)) - sampled.center[0]
    y = np.tile(sampled.grid[:, 1], len(sampled.a_values)) - sampled.center[1]
    da = np.repeat(sampled.a_values - a_mid, sampled.grid.shape[0])
    X = sampled.images[:, :, 0].ravel()
    Y = sampled.images[:, :, 1].ravel()

    design = np.column_stack([np.ones_like(t), t, t * t, y, da])
    coef_x, r_x = _scaled_lstsq(design, X)
    A, B, C, D, E = (float(c) for c in coef_x)
    if C == 0.0:
        raise RankDeficientFit("quadratic coefficient vanished")

    # The second component keeps value and x-slope as normal-form data; its
    # quadratic fold shadow is admissible remainder content for an affine
    # chart, so it is fitted out before measuring delta.
    coef_y, r_y = _scaled_lstsq(design, Y)
    q, zeta = float(coef_y[0]), float(coef_y[1])

    t0 = -B / (2.0 * C)
    fold_x = sampled.center[0] + t0
    if abs(t0) > sampled.halfwidth:
        raise FoldOutsideBox(f"fitted fold offset {t0:.3e} beyond halfwidth")
    a_slope = C * E
    a_intercept = C * (A - B * B / (4.0 * C) - fold_x)
    y_scale = C * D if D != 0.0 else C
    delta = float(np.max(np.abs(C * r_x)) + np.max(np.abs(y_scale * r_y)))
    det_estimate = float(np.median(sampled.det_products))

    return RenormalizedFamily(
        n=sampled.n,
        chart={
            "xi": C,
            "fold_x": fold_x,
            "y_scale": y_scale,
            "y_offset": float(sampled.center[1]),
        },
        delta=delta,
        det_estimate=det_estimate,
        a_map=(a_slope, a_intercept),
        fitted={
            "xi": C,
            "theta": E,
            "gamma": D,
            "zeta": zeta,
            "q": q,
            "const": A,
            "linear": B,
            "a_mid": a_mid,
        },
        diagnostics={
            "residual_sup_x": float(np.max(np.abs(r_x))),
            "residual_sup_y": float(np.max(np.abs(r_y))),
            "halfwidth": sampled.halfwidth,
        },
    )


def renormalized_fixed_points(a_hat: float) -> tuple[float, float]:
    """(beta_minus, beta_plus) of u -> u^2 + a_hat; beta_minus is the
    negative preimage of the orientation-preserving fixed point."""
    disc = 1.0 - 4.0 * a_hat
    if disc < 0.0:
        raise NoFixedPoint(f"no real fixed points at renormalized parameter {a_hat}")
    beta_plus = 0.5 * (1.0 + math.sqrt(disc))
    beta_minus = -math.sqrt(max(beta_plus - a_hat, 0.0))
    return beta_minus, beta_plus


@dataclass(frozen=True)
class ConditionsReport:
    c1: bool
    c2: bool
    witness: dict


def conditions_c1_c2(
    renormalized: RenormalizedFamily,
    b: float,
    margin: float = 0.1,
    a: float | None = None,
    b_n: float | None = None,
    beta_minus: float | None = None,
) -> ConditionsReport:
    """Evaluate the two smallness conditions guarding the thick-horseshoe step.

    C1: 0 < beta'^- - a_hat < margin * b^4;
    C2: 0 < b_N < margin * (beta'^- - a_hat)^2, with b_N the measured
    determinant of the rescaled return map.  `margin` operationalizes the
    paper-level "much smaller than".
    """
    a_hat = (
        renormalized.renormalized_parameter(a)
        if a is not None
        else renormalized.a_map[1]
    )
    if beta_minus is None:
        beta_minus, _ = renormalized_fixed_points(a_hat)
    gap = beta_minus - a_hat
    if b_n is None:
        b_n = renormalized.det_estimate
    c1 = bool(0.0 < gap < margin * b**4)
    c2 = bool(0.0 < b_n < margin * gap * gap)
    return ConditionsReport(
        c1=c1,
        c2=c2,
        witness={
            "a_hat": float(a_hat),
            "beta_minus": float(beta_minus),
            "gap": float(gap),
            "b_fourth": float(b**4),
            "b_n": float(b_n),
            "gap_squared": float(gap * gap),
            "margin": float(margin),
        },
    )
