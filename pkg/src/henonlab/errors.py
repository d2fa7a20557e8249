"""Exception types shared across the package.

Every domain error derives from DynamicsError so callers (and the CLI) can
distinguish "the math said no" from genuine bugs.  The class name is the
stable error name reported in CLI manifests.
"""


class DynamicsError(Exception):
    """Base class for all domain-level failures."""

    @property
    def name(self) -> str:
        return type(self).__name__


# --- solvers -------------------------------------------------------------

class NoConvergence(DynamicsError):
    """An iterative solver exhausted its iteration budget."""


class DegenerateJacobian(DynamicsError):
    """Newton matrix singular beyond tolerance (bifurcation point)."""


class LostHyperbolicity(DynamicsError):
    """A multiplier crossed modulus one along a continuation path."""


class ConeFieldViolation(DynamicsError):
    """No dominated splitting detected; direction estimates unreliable."""


class InverseSolveFailed(DynamicsError):
    """Backward iteration impossible (b = 0) or inverse Newton failed."""


# --- one-dimensional dynamics -------------------------------------------

class BelowCriticalValue(DynamicsError):
    """Requested preimage of a value below the minimum of the map."""


class GuardViolated(DynamicsError):
    """A parameter guard for a ladder/cover construction fails."""


class MetricSingularity(DynamicsError):
    """Sample too close to the boundary where the expansion metric blows up."""


# --- interval covers and dimension estimates ------------------------------

class InsufficientRange(DynamicsError):
    """Too few scales/levels for a meaningful regression."""


class InvalidSchedule(DynamicsError):
    """A multiplicity/gap schedule violates monotonicity or positivity."""


class NonHyperbolicBin(DynamicsError):
    """Covering bound requested for an expansion bin with i*eps <= 1."""


# --- manifolds and tangencies ---------------------------------------------

class NotASaddle(DynamicsError):
    """Periodic orbit lacks the one-expanding/one-contracting spectrum."""


class NoFoldDetected(DynamicsError):
    """Unstable arc shows no quadratic turning point near the stable arc."""


class NoSignChange(DynamicsError):
    """Tangency distance does not change sign on the bracketing interval."""


class FitDegenerate(DynamicsError):
    """Quadratic fold coefficient below tolerance; tangency not quadratic."""


class TooFewIntersections(DynamicsError):
    """Transversal meets fewer lamination leaves than required."""


# --- stability windows -----------------------------------------------------

class NoSinkAtSeed(DynamicsError):
    """No attracting orbit of the requested period at the seed parameter."""


class InsufficientSpread(DynamicsError):
    """Window set spans too small a multiplier range for a scaling fit."""


# --- renormalization --------------------------------------------------------

class OrbitEscaped(DynamicsError):
    """A grid point left the working region mid-composition."""


class RankDeficientFit(DynamicsError):
    """Least-squares design matrix is rank deficient."""


class FoldOutsideBox(DynamicsError):
    """Fitted fold vertex falls outside the sampling box."""


class NoFixedPoint(DynamicsError):
    """Renormalized one-dimensional map has no real fixed point."""


# --- parameter Cantor construction ------------------------------------------

class InvalidParams(DynamicsError):
    """Synthetic window source parameters violate their invariants."""


class MultiplicityCollapse(DynamicsError):
    """Some interval yields fewer than two admissible child windows."""


class ResolutionFloor(DynamicsError):
    """Interval lengths hit the floating-point resolution floor."""
