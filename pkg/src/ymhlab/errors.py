"""Exception types shared across the package."""


class StructureError(ValueError):
    """Raised when operands are structurally incompatible.

    Examples: mismatched algebra kinds, mismatched grids, an unregistered
    Fourier symbol, or a bilinear symbol that is not in tensor-product form.
    """


class ConfigError(ValueError):
    """Raised for invalid run configurations (bad keys, out-of-range values)."""


class BlowupError(RuntimeError):
    """Raised when a time integration produces non-finite values."""

    def __init__(self, last_valid_time: float, message: str | None = None):
        self.last_valid_time = last_valid_time
        super().__init__(
            message or f"non-finite values detected; last valid time t={last_valid_time:.6g}"
        )
