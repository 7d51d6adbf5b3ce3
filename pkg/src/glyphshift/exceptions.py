"""Error types raised by glyphshift.

Every error also derives from the closest builtin so callers that only know
about ``ValueError`` or ``FileNotFoundError`` keep working.
"""


class GlyphshiftError(Exception):
    """Base class for all glyphshift errors."""


# Rendering


class EmptyText(GlyphshiftError, ValueError):
    """Raised when asked to render an empty string."""

    def __init__(self) -> None:
        super().__init__("Cannot render empty text")


class MissingGlyph(GlyphshiftError, ValueError):
    """Raised when the font has no glyph for a character of the text."""

    def __init__(self, char: str, font: str):
        self.char = char
        self.font = font
        super().__init__(f"Font '{font}' has no glyph for {char!r} (U+{ord(char):04X})")


class FontLoadError(GlyphshiftError, OSError):
    """Raised when a font asset cannot be resolved or read."""


class EmptyCorpus(GlyphshiftError, ValueError):
    """Raised when sampling from a corpus with no entries."""


# Tensor shapes


class ShapeMismatch(GlyphshiftError, ValueError):
    """Raised when two tensors that must agree in layout do not."""


class ShapeError(GlyphshiftError, ValueError):
    """Raised when an image tensor does not have the expected channel/height layout."""


class InvalidPatchSize(GlyphshiftError, ValueError):
    """Raised for even or oversized local attention windows."""


class InvalidDomain(GlyphshiftError, ValueError):
    """Raised when a domain label is outside the configured range."""


# Training


class InsufficientClasses(GlyphshiftError, ValueError):
    """Raised when a font dataset has fewer than two classes."""


class FrozenModuleError(GlyphshiftError, RuntimeError):
    """Raised when something tries to update a frozen network."""


class NonFiniteLoss(GlyphshiftError, RuntimeError):
    """Raised when a loss term becomes NaN or infinite."""

    def __init__(self, term: str, value: float):
        self.term = term
        self.value = value
        super().__init__(f"Loss term '{term}' is not finite ({value})")


class EmptyBatch(GlyphshiftError, ValueError):
    """Raised when a batch is built from no samples."""


class CheckpointMismatch(GlyphshiftError, ValueError):
    """Raised when a checkpoint was written for a different configuration."""


class CheckpointWriteError(GlyphshiftError, OSError):
    """Raised when a checkpoint cannot be written."""


# Datasets


class OutputUnwritable(GlyphshiftError, OSError):
    """Raised when the output directory cannot be created or written."""


class OutputNotEmpty(OutputUnwritable):
    """Raised when a generation run would mix new images with existing ones."""


class ManifestMissing(GlyphshiftError, FileNotFoundError):
    """Raised when a dataset directory has no labels.tsv."""


class DanglingReference(GlyphshiftError, FileNotFoundError):
    """Raised when a manifest line references a missing image."""

    def __init__(self, filename: str):
        self.filename = filename
        super().__init__(f"Manifest references missing image: {filename}")


class MalformedLine(GlyphshiftError, ValueError):
    """Raised for manifest lines that cannot be parsed."""

    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        super().__init__(f"Malformed manifest line {line_no}: {reason}")


# Evaluation


class BothEmpty(GlyphshiftError, ValueError):
    """Raised when both strings of an edit-distance pair are empty."""


class EmptyInput(GlyphshiftError, ValueError):
    """Raised when evaluating an empty list of pairs."""


class GenerationExhausted(GlyphshiftError, RuntimeError):
    """Raised when too many samples in a row fail to render during dataset generation."""
