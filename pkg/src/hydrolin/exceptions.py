"""Exception types shared across the toolkit."""


class HydrolinError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(HydrolinError):
    """Invalid plant configuration or curve data."""


class CurveDomainError(HydrolinError):
    """Evaluation outside the valid domain of the turbine model.

    Raised for queries outside the characteristic-curve grid (the toolkit
    never extrapolates hill charts) and for non-positive heads in the
    unit-variable transform.
    """


class DegenerateOriginError(CurveDomainError):
    """Polar transform undefined: discharge and speed are both zero."""


class EquilibriumError(HydrolinError):
    """No feasible steady state, or the root search failed to converge."""


class SimulationError(HydrolinError):
    """Time-domain integration failed (e.g. the state left the curve domain)."""
