"""Recognition metrics over prediction / ground-truth pairs."""

__all__ = ["levenshtein", "normalized_edit_distance", "evaluate"]
