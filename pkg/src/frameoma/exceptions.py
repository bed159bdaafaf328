"""Exception hierarchy for frameoma."""


class FrameOMAError(Exception):
    """Base class for all package errors."""


class ModelReferenceError(FrameOMAError, ValueError):
    """An element or support points at a node id that does not exist."""


class SingularStructureError(FrameOMAError, ValueError):
    """The stiffness matrix on the free DOFs is not positive definite."""


class ConvergenceError(FrameOMAError, RuntimeError):
    def __init__(self, message, mode_index=None):
        super().__init__(message)
        self.mode_index = mode_index


class InstabilityError(FrameOMAError, RuntimeError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class RecordTooShortError(FrameOMAError, ValueError):
    pass


class DegenerateSpectrumError(FrameOMAError, ValueError):
    """A channel has zero power over every frequency line."""


class ZeroReferencePowerError(FrameOMAError, ValueError):
    pass


class DataIntegrityError(FrameOMAError, ValueError):
    """Input data violates a structural invariant (e.g. non-Hermitian CPSD)."""


class InfeasibleCoverError(FrameOMAError, ValueError):
    pass


class ConfigError(FrameOMAError, ValueError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class TimeSeriesFormatError(FrameOMAError, ValueError):
    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
