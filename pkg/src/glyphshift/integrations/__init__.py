"""Integration layer for external packages."""

__all__ = ["FontIntegration", "FontAsset"]
