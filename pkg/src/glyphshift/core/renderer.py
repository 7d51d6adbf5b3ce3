"""Content image rendering and random text sampling."""

import logging
import math
import random

import numpy as np
from PIL import Image, ImageDraw

from ..exceptions import EmptyCorpus, EmptyText, MissingGlyph
from ..integrations.font_integration import DEFAULT_FONT, FontIntegration, load_font
from ..models.config import RendererConfig
from ..models.corpus import TextCorpus
from ..models.images import ContentImage
from ..utils.serialization import SerializationHelpers

logger = logging.getLogger(__name__)

Color = tuple[int, int, int]
BLACK: Color = (0, 0, 0)


def round_up4(value: float) -> int:
    """Smallest positive multiple of 4 that is >= value."""
    return max(4, 4 * math.ceil(value / 4))


def render_word(
    text: str,
    height: int = 64,
    font: str = DEFAULT_FONT,
    *,
    background: Color = (127, 127, 127),
    color: Color = BLACK,
    config: RendererConfig | None = None,
    fonts: FontIntegration | None = None,
) -> ContentImage:
    """Rasterize ``text`` left to right, vertically centred, on a flat canvas."""
    config = config or RendererConfig()
    if not text:
        raise EmptyText()
    if height < 16:
        raise ValueError(f"Canvas height must be at least 16, got {height}")

    asset = fonts.load(font) if fonts else load_font(font)
    missing = asset.missing_chars(text)
    if missing:
        raise MissingGlyph(missing[0], font)

    pil_font = asset.sized(max(1, round(height * config.font_scale)))
    margin = config.margin_ratio * height
    advance = pil_font.getlength(text)
    width = max(round_up4(math.ceil(advance + 2 * margin)), config.min_width)

    canvas = Image.new("RGB", (width, height), background)
    draw = ImageDraw.Draw(canvas)
    draw.text((margin, height / 2), text, font=pil_font, fill=color, anchor="lm")

    pixels = SerializationHelpers.from_uint8(np.asarray(canvas))
    return ContentImage(pixels=pixels, text=text)


def render_content(
    text: str,
    height: int = 64,
    font: str = DEFAULT_FONT,
    config: RendererConfig | None = None,
) -> ContentImage:
    """Black standard-font text on the plain grey content canvas."""
    config = config or RendererConfig()
    grey = config.background
    return render_word(
        text, height, font, background=(grey, grey, grey), color=BLACK, config=config
    )


def sample_random_text(
    corpus: TextCorpus,
    length_range: tuple[int, int],
    rng: random.Random,
    mode: str = "entry",
) -> str:
    """Draw a corpus entry (or a character-level resample) with length in range."""
    if not corpus:
        raise EmptyCorpus("Cannot sample from an empty corpus")
    low, high = length_range
    if low < 1 or low > high:
        raise ValueError(f"length_range must satisfy 1 <= min <= max, got {length_range}")

    if mode == "entry":
        candidates = [entry for entry in corpus.entries if low <= len(entry) <= high]
        if candidates:
            return rng.choice(candidates)
        logger.debug(f"No corpus entry with length in {length_range}, resampling characters")
    elif mode != "chars":
        raise ValueError(f"Unknown random text mode: {mode}")

    # sorted: frozenset iteration order depends on hash randomisation
    alphabet = sorted(corpus.charset)
    length = rng.randint(low, high)
    return "".join(rng.choice(alphabet) for _ in range(length))


def resize_image(image: np.ndarray, height: int, width: int) -> np.ndarray:
    """Resize an HxWx3 uint8 image to exactly ``height`` x ``width``."""
    if image.shape[0] == height and image.shape[1] == width:
        return image
    resized = Image.fromarray(image).resize(
        (width, height), resample=Image.Resampling.BILINEAR
    )
    return np.asarray(resized, dtype=np.uint8)


def aspect_width(image: np.ndarray, height: int, min_width: int = 32) -> int:
    """Width after scaling to ``height`` with the aspect ratio kept, rounded up to 4."""
    scaled = image.shape[1] * height / max(image.shape[0], 1)
    return max(round_up4(scaled), min_width)


def prepare_style_image(
    image: np.ndarray, height: int = 64, min_width: int = 32
) -> np.ndarray:
    """Scale a scene-text crop to ``height``, keeping its aspect ratio."""
    return resize_image(image, height, aspect_width(image, height, min_width))


class ContentRenderer:
    """Renders content images for both content branches of a training batch."""

    def __init__(self, config: RendererConfig | None = None):
        self.config = config or RendererConfig()
        self.fonts = FontIntegration()

    def render(self, text: str, domain: int | None = None) -> ContentImage:
        """Render ``text`` with the standard font of ``domain``."""
        font = self.config.font if domain is None else self.config.font_for_domain(domain)
        grey = self.config.background
        return render_word(
            text,
            self.config.height,
            font,
            background=(grey, grey, grey),
            config=self.config,
            fonts=self.fonts,
        )

    def render_to_width(self, text: str, width: int, domain: int | None = None) -> np.ndarray:
        """Render ``text`` and resize the canvas to ``width`` (float pixels, 3xHxW)."""
        content = self.render(text, domain)
        if content.width == width:
            return content.pixels
        image = SerializationHelpers.to_uint8(content.pixels)
        return SerializationHelpers.from_uint8(resize_image(image, self.config.height, width))

    def random_text(self, corpus: TextCorpus, rng: random.Random) -> str:
        return sample_random_text(
            corpus,
            self.config.random_text_length,
            rng,
            mode=self.config.random_text_mode,
        )
