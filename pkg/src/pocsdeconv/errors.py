"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition (bad dims, range, ...)."""


class SymmetryViolationError(RuntimeError):
    """A spectrum expected to be conjugate-symmetric produced a complex image."""


class UnsupportedImageFormatError(ValueError):
    """An image file exists but cannot be decoded into a grayscale image."""
