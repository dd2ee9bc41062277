"""Exception types raised by segrank."""


class SegrankError(Exception):
    """Base class for all segrank errors."""


class MaskDecodeError(SegrankError, ValueError):
    """A mask byte stream could not be decoded."""


class MaskFormatError(SegrankError, ValueError):
    """A decoded mask is not a single-channel grid of 16-bit instance ids."""


class ShapeError(SegrankError, ValueError):
    """Two masks that must be compared have different dimensions."""


class ConfigError(SegrankError, ValueError):
    """A numeric parameter or table shape is outside its valid range."""


class InputError(SegrankError, ValueError):
    """Input data is inconsistent (unknown case, missing metadata, ...)."""
