"""Exception types shared across the package."""


class NumericalError(ArithmeticError):
    """A matrix decomposition or iteration failed to produce finite output.

    ``diagnostics`` carries whatever the failing routine knew at the time
    (iteration counts, matrix shape, the underlying LinAlgError message).
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class ImageFormatError(OSError):
    """A PGM file could not be parsed."""

    def __init__(self, message, path=None, offset=None):
        detail = message
        if path is not None:
            detail = f"{path}: {message}"
        if offset is not None:
            detail = f"{detail} (at byte {offset})"
        super().__init__(detail)
        self.path = path
        self.offset = offset


class UnsupportedFormatError(ImageFormatError):
    """A well-formed PGM file uses a feature we do not read (e.g. 16-bit)."""
