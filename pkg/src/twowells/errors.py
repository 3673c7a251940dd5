"""Exception types shared by all engines."""


class EngineError(Exception):
    """Base class for physics/numerics failures raised by the engines."""


class InvalidParamsError(EngineError):
    """Physical parameters violate a precondition."""


class InvalidStateError(EngineError):
    """A quantum state fails its structural invariants."""


class StepFailureError(EngineError):
    """A propagator or integrator could not meet its tolerance."""


class ConvergenceError(EngineError):
    """A long-time result failed its convergence check."""


class VanishingSurvivalError(EngineError):
    """Conditioning on a null record whose probability has underflowed."""


class RecurrenceGuardError(EngineError):
    """Requested horizon exceeds the validity window of a finite reservoir."""


class DegenerateFitError(EngineError):
    """A fit was requested on data with no usable signal."""


class ConfigError(Exception):
    """Invalid run configuration (CLI / config file)."""
