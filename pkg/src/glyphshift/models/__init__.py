"""Data records and configuration models for glyphshift."""

__all__ = [
    "TrainConfig",
    "TypefaceConfig",
    "GeneratorConfig",
    "RendererConfig",
    "LossWeights",
    "AblationFlags",
    "ContentImage",
    "StyleSample",
    "TextCorpus",
    "LabeledDataset",
    "LossReport",
    "EvalReport",
]
