"""
glyphshift - Weakly supervised scene text generation for low-resource languages.
"""

from .core.engine import GlyphshiftEngine
from .models.config import TrainConfig, TypefaceConfig
from .networks.generator import Generator

__version__ = "0.1.0"

__all__ = [
    "GlyphshiftEngine",
    "TrainConfig",
    "TypefaceConfig",
    "Generator",
]
