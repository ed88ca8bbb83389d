class PolyptychError(Exception):
    """Base class for all package errors."""


class DimensionError(PolyptychError):
    """Shapes or sizes violate an operation's contract."""


class BankError(PolyptychError):
    """Reference bank construction or sampling failed."""


class BundleParseError(PolyptychError):
    """A serialized bank or model file is malformed.

    ``offset`` is the byte position at which parsing failed, when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class TrainingDiverged(PolyptychError):
    """A non-finite loss was observed; a diagnostic checkpoint was written."""
