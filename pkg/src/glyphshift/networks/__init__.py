"""Attention primitives, generator, discriminator and typeface classifier."""

__all__ = [
    "Generator",
    "Discriminator",
    "TypefaceClassifier",
    "IntegratedAttention",
    "init_weights",
    "count_parameters",
]
