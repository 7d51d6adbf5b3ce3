"""Losses, batching, checkpoints and the training loops."""

__all__ = ["Trainer", "train_step", "fit", "train_typeface_classifier"]
