"""
Test configuration and fixtures for the glyphshift test suite.

This module provides common fixtures and builders for testing glyphshift
components on small synthetic datasets rendered with the bundled fonts.
"""

import random
import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest
import torch

from glyphshift.core.loader import prepare_output_dir, write_manifest
from glyphshift.core.renderer import render_word
from glyphshift.models.config import AblationFlags, RendererConfig, TrainConfig
from glyphshift.models.dataset import IMAGES_DIR, DatasetRecord
from glyphshift.utils.serialization import SerializationHelpers

WORDS = ["hello", "world", "scene", "text", "glyph", "shift", "style", "font"]


@pytest.fixture
def temp_dir():
    """Create a temporary working directory."""
    temp_dir = tempfile.mkdtemp()
    yield Path(temp_dir)
    shutil.rmtree(temp_dir)


@pytest.fixture(autouse=True)
def _seed_everything():
    """Seed the global RNGs so tests do not depend on execution order."""
    random.seed(0)
    np.random.seed(0)
    torch.manual_seed(0)


def random_image(width: int, height: int = 64, seed: int = 0) -> np.ndarray:
    """Random HxWx3 uint8 image."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)


def style_word(
    text: str,
    font: str = "dejavu-sans",
    background=(40, 90, 160),
    color=(250, 240, 120),
    height: int = 64,
) -> np.ndarray:
    """A rendered word with colours, standing in for a scene-text crop."""
    image = render_word(text, height, font, background=background, color=color)
    return SerializationHelpers.to_uint8(image.pixels)


class DatasetBuilder:
    """Builder class for creating labeled datasets on disk."""

    def __init__(self, root: Path):
        self.root = root
        self.records: list[DatasetRecord] = []
        self.images: list[np.ndarray] = []

    def with_image(self, image: np.ndarray, text: str, domain: int = 0, filename: str | None = None):
        """Add an arbitrary image with its label."""
        filename = filename or f"{len(self.records):07d}.png"
        self.records.append(DatasetRecord(filename=filename, text=text, domain=domain))
        self.images.append(image)
        return self

    def with_word(self, text: str, domain: int = 0, font: str = "dejavu-sans", seed: int = 0):
        """Add a coloured rendering of ``text``."""
        rng = random.Random(seed)
        background = (rng.randrange(0, 100), rng.randrange(0, 100), rng.randrange(100, 256))
        color = (rng.randrange(180, 256), rng.randrange(180, 256), rng.randrange(0, 80))
        return self.with_image(style_word(text, font, background, color), text, domain)

    def with_words(self, count: int, domains: int = 2):
        """Add ``count`` words cycling through WORDS and the domains."""
        fonts = ["dejavu-sans", "dejavu-serif"]
        for i in range(count):
            domain = i % domains
            self.with_word(WORDS[i % len(WORDS)], domain, fonts[domain % 2], seed=i)
        return self

    def build(self) -> Path:
        """Write images and labels.tsv; return the dataset root."""
        prepare_output_dir(self.root)
        for record, image in zip(self.records, self.images, strict=True):
            path = self.root / IMAGES_DIR / record.filename
            SerializationHelpers.save_png(SerializationHelpers.from_uint8(image), path)
        write_manifest(self.root, self.records)
        return self.root


@pytest.fixture
def dataset_builder(temp_dir):
    """Factory fixture for creating labeled datasets."""

    def _builder(name: str = "dataset") -> DatasetBuilder:
        return DatasetBuilder(temp_dir / name)

    return _builder


@pytest.fixture
def small_dataset_dir(dataset_builder):
    """Four coloured words in two domains."""
    return dataset_builder("small").with_words(4).build()


def tiny_train_config(**overrides) -> TrainConfig:
    """Settings for quick CPU training runs without the typeface loss."""
    settings = {
        "epochs": 1,
        "batch_size": 2,
        "seed": 0,
        "ablation": AblationFlags(typeface_loss=False),
        "renderer": RendererConfig(domain_fonts={1: "dejavu-serif"}),
    }
    settings.update(overrides)
    return TrainConfig(**settings)


@pytest.fixture
def train_config():
    return tiny_train_config()
