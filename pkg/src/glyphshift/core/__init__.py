"""Core components: rendering, dataset loading and the inference engine."""

__all__ = ["GlyphshiftEngine", "DatasetLoader", "ContentRenderer"]
