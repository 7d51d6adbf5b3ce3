"""Font asset resolution on top of matplotlib's bundled fonts, fontTools and Pillow."""

import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
from fontTools.ttLib import TTFont, TTLibError
from PIL import ImageFont

from ..exceptions import FontLoadError

logger = logging.getLogger(__name__)

# Named font assets shipped inside matplotlib's mpl-data directory.
BUNDLED_FONTS: dict[str, str] = {
    "dejavu-sans": "DejaVuSans.ttf",
    "dejavu-sans-bold": "DejaVuSans-Bold.ttf",
    "dejavu-sans-oblique": "DejaVuSans-Oblique.ttf",
    "dejavu-sans-mono": "DejaVuSansMono.ttf",
    "dejavu-serif": "DejaVuSerif.ttf",
    "dejavu-serif-bold": "DejaVuSerif-Bold.ttf",
    "dejavu-serif-italic": "DejaVuSerif-Italic.ttf",
    "stix": "STIXGeneral.ttf",
    "stix-bold": "STIXGeneralBol.ttf",
    "stix-italic": "STIXGeneralItalic.ttf",
}

DEFAULT_FONT = "dejavu-sans"


def bundled_font_dir() -> Path:
    """Directory holding matplotlib's TrueType fonts."""
    return Path(matplotlib.get_data_path()) / "fonts" / "ttf"


def resolve_font_path(font: str) -> Path:
    """Resolve a registered font name or a filesystem path to a font file."""
    if font in BUNDLED_FONTS:
        path = bundled_font_dir() / BUNDLED_FONTS[font]
    else:
        path = Path(font).expanduser()
    if not path.is_file():
        raise FontLoadError(f"Font asset not found: {font} ({path})")
    return path


@dataclass
class FontAsset:
    """A loaded font file: its code point coverage and sized Pillow fonts."""

    font_id: str
    path: Path
    codepoints: frozenset[int]
    _sized: dict[int, ImageFont.FreeTypeFont] = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def has_glyph(self, char: str) -> bool:
        return ord(char) in self.codepoints

    def missing_chars(self, text: str) -> list[str]:
        """Characters of ``text`` without a glyph, in order of appearance."""
        seen: list[str] = []
        for ch in text:
            if not self.has_glyph(ch) and ch not in seen:
                seen.append(ch)
        return seen

    def sized(self, size: int) -> ImageFont.FreeTypeFont:
        """Pillow font at the given pixel size (cached)."""
        with self._lock:
            font = self._sized.get(size)
            if font is None:
                try:
                    font = ImageFont.truetype(str(self.path), size=size)
                except OSError as e:
                    raise FontLoadError(f"Failed to load font {self.path}: {e}") from e
                self._sized[size] = font
            return font


class FontIntegration:
    """Loads and caches font assets. Loading is one-time and idempotent."""

    def __init__(self) -> None:
        self._assets: dict[str, FontAsset] = {}
        self._lock = threading.Lock()

    def load(self, font: str = DEFAULT_FONT) -> FontAsset:
        """Return the cached asset for ``font``, loading it on first use."""
        with self._lock:
            asset = self._assets.get(font)
            if asset is None:
                asset = self._load_asset(font)
                self._assets[font] = asset
            return asset

    def _load_asset(self, font: str) -> FontAsset:
        path = resolve_font_path(font)
        try:
            with TTFont(str(path), lazy=True) as ttf:
                cmap = ttf.getBestCmap() or {}
        except (TTLibError, OSError) as e:
            raise FontLoadError(f"Unreadable font asset {path}: {e}") from e
        if not cmap:
            raise FontLoadError(f"Font {path} has no unicode character map")
        logger.debug(f"Loaded font '{font}' from {path} ({len(cmap)} code points)")
        return FontAsset(font_id=font, path=path, codepoints=frozenset(cmap))


_default_integration = FontIntegration()


def load_font(font: str = DEFAULT_FONT) -> FontAsset:
    """Load a font asset through the process-wide cache."""
    return _default_integration.load(font)
