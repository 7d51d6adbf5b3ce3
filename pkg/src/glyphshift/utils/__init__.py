"""Utility modules for glyphshift."""

__all__ = ["SerializationHelpers", "setup_logging"]
