"""Exception types shared across the toolkit."""


class TpaError(Exception):
    """Base class for toolkit errors."""


class ShapeError(TpaError, ValueError):
    """Operands have incompatible shapes for the requested operation."""


class UnknownPrimitiveError(TpaError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown primitive"


class GradientError(TpaError):
    """Backward pass requested on an unsuitable output."""


class DataError(TpaError):
    """Malformed or insufficient input data."""


class TrainingDiverged(TpaError, FloatingPointError):
    def __init__(self, step, loss):
        super().__init__(f"non-finite loss {loss!r} at optimizer step {step}")
        self.step = step
        self.loss = loss
