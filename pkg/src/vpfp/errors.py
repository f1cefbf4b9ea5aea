"""Exception hierarchy shared by all vpfp modules."""


class VpfpError(Exception):
    """Base class for all errors raised by this package."""


class NonPositiveExtent(VpfpError):
    """Domain length or velocity half-width is not strictly positive."""


class BadCount(VpfpError):
    """Grid point count below the supported minimum."""


class NonFiniteSample(VpfpError):
    """An initializer produced NaN/Inf at some grid node."""


class DegenerateDensity(VpfpError):
    """Moments are unusable: density or temperature not strictly positive."""


class EquilibriumSingularity(VpfpError):
    """L2-form interface weights undefined: f is locally proportional to its Maxwellian."""


class StencilTooSmall(VpfpError):
    """Velocity grid too coarse for the requested finite-difference stencil."""


class BadStageCount(VpfpError):
    """Stabilized integrators need at least two stages."""


class NonFiniteState(VpfpError):
    """A time step produced NaN/Inf values (instability)."""


class StepUnderflow(VpfpError):
    """Adaptive controller repeatedly proposed steps below dt_min."""


class DisplacementTooLarge(VpfpError):
    """Semi-Lagrangian foot displacement exceeds the velocity domain width."""


class TooFewPeaks(VpfpError):
    """Not enough oscillation maxima inside the fit window."""


class IoFailure(VpfpError):
    """Reading or writing a data file failed."""


class UnknownScenario(VpfpError):
    """Scenario name not in the built-in catalog."""
