"""Desk-scale numerics for dissipative planar families near a homoclinic tangency.

Subpackages: planar family dynamics (core), the unimodal reduction and its
Cantor covers (unimodal), interval-cover thickness and dimension bounds
(cantor), invariant manifolds and tangency location (tangency), sink
stability windows (windows), return-map renormalization (renorm), and the
nested parameter-Cantor construction (paramcantor).
"""

from .cantor import (
    CantorSchedule,
    DimensionEstimate,
    GapLemmaReport,
    IntervalCover,
    ThicknessReport,
    box_dimension,
    covering_upper_bound,
    falconer_bound,
    gap_lemma,
    gaps_and_bridges,
    middle_thirds_cover,
    thickness,
    two_branch_affine_cover,
)
from .core import (
    DerivativeProducts,
    HenonLikeFamily,
    LinearPlanarMap,
    PeriodicOrbit,
    PolyTable,
    continue_orbit,
    derivative_products,
    find_periodic_orbit,
    iterate,
)
from .paramcantor import (
    CantorTree,
    MeasuredWindowSource,
    SyntheticWindowSource,
    build_tree,
    calibrate_schedule,
    synthetic_window_oracle,
    tree_dimension,
    validate_tree,
)
from .renorm import (
    RenormalizedFamily,
    SampledReturnMap,
    conditions_c1_c2,
    fit_normal_form,
    return_map,
)
from .tangency import (
    ManifoldArc,
    TangencyRecord,
    find_tangency,
    grow_stable_arc,
    grow_unstable_arc,
    local_manifolds,
    slice_thickness,
    tangency_distance,
)
from .unimodal import (
    AlphaLadder,
    UnimodalMap,
    alpha_ladder,
    cantor_cover,
    expansion_check,
    inverse_branches,
)
from .windows import (
    ExponentBalanceReport,
    ScalingFit,
    StabilityWindow,
    detect_sink,
    exponent_balance_check,
    follow_sink,
    locate_window,
    principal_tangency,
    scaling_fit,
    scan_sinks,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
