"""Exception types shared across the package."""


class AronssonLabError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(AronssonLabError):
    """Operands have incompatible shapes."""


class EigenvalueCoalescence(AronssonLabError):
    """The top eigenvalue of P P^T is not a strict maximum within the gap
    tolerance, so the dual-norm eigenvector field (and everything built on
    it) is undefined at this point."""


class NonSmoothPoint(AronssonLabError):
    """A second-order jet was requested where the map is not twice
    differentiable."""


class DomainMargin(AronssonLabError):
    """A point (or a finite-difference stencil around it) leaves the
    family domain."""


class StartOutsideXi(AronssonLabError):
    """Flow started at a point with xi^T Du = 0, outside the admissible
    parameter set."""


class StartInVerticalSet(AronssonLabError):
    """Horizontal flow started where the horizontal component h vanishes."""


class RankJump(AronssonLabError):
    """Rank of H_P(Du) changed along a trace where constant rank was
    required."""


class UnitSpeedViolation(AronssonLabError):
    """Interface detection requires unit-speed curve factors."""


class NonDecreaseStall(AronssonLabError):
    """Line search could not decrease the energy while the gradient was
    still far from tolerance."""


class ConfigError(AronssonLabError):
    """Invalid run configuration."""
