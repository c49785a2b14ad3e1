"""Exception hierarchy.

Every error raised on bad input derives from :class:`GPCError`. The CLI maps
:class:`ValidationError` subclasses to exit code 2; :class:`TamperSuspected`
is a warning category, never raised by the decoder itself.
"""

from __future__ import annotations


class GPCError(Exception):
    """Base class for all library errors."""


class ValidationError(GPCError, ValueError):
    """Input rejected before or during processing."""


class UnsupportedChar(ValidationError):
    def __init__(self, char: str, position: int | None = None):
        self.char = char
        self.position = position
        where = "" if position is None else f" at position {position}"
        super().__init__(f"unsupported character {char!r}{where}")


class UnsupportedSecretChar(UnsupportedChar):
    pass


class InsufficientCapacity(ValidationError):
    def __init__(self, char: str | None, count: int, needed: int, detail: str = ""):
        self.char = char
        self.count = count
        self.needed = needed
        if char is None:
            msg = f"tile cannot hold {needed} eligible pixels per glyph"
        else:
            msg = f"glyph {char!r} has {count} eligible pixels, need >= {needed}"
        if detail:
            msg = f"{msg} ({detail})"
        super().__init__(msg)


class CapacityExceeded(ValidationError):
    def __init__(self, glyph_index: int, v: int, capacity: int):
        self.glyph_index = glyph_index
        self.v = v
        self.capacity = capacity
        super().__init__(
            f"glyph {glyph_index}: payload {v} exceeds capacity {capacity}"
        )


class DimensionMismatch(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class ValueOutOfRange(ValidationError):
    def __init__(self, index: int, value: int, lo: int, hi: int):
        self.index = index
        self.value = value
        super().__init__(f"value {value} at index {index} outside [{lo}, {hi}]")


class TooShort(ValidationError):
    pass


class FrameCountMismatch(ValidationError):
    pass


class EmptyVideo(ValidationError):
    pass


class EmptyReference(ValidationError):
    pass


class ZeroReferenceSignal(ValidationError):
    pass


class MixedTileSizes(ValidationError):
    pass


class GeometryMismatch(ValidationError):
    pass


class AtlasMismatch(ValidationError):
    def __init__(self, expected: str, actual: str):
        self.expected = expected
        self.actual = actual
        super().__init__(f"atlas mismatch: manifest wants {expected}, got {actual}")


class AtlasCorrupt(ValidationError):
    pass


class CoverTooShort(ValidationError):
    def __init__(self, needed: int, available: int):
        self.needed = needed
        self.available = available
        super().__init__(
            f"cover text has {available} carrier glyphs, payload needs {needed}"
        )


class ManifestParse(ValidationError):
    pass


class VersionUnsupported(ValidationError):
    pass


class UnsupportedFormat(ValidationError):
    pass


class MissingFrame(ValidationError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"missing frame {index}")


class MixedDimensions(ValidationError):
    pass


class TamperSuspected(UserWarning):
    """Encoded raster differs from canonical in a way embedding never produces."""
