"""User interface components."""

__all__ = ["app", "main"]
