"""Word accuracy and normalized edit distance."""

import logging
from collections.abc import Iterable
from pathlib import Path

import Levenshtein

from ..exceptions import BothEmpty, EmptyInput, MalformedLine
from ..models.report import EvalReport
from ..utils.serialization import SerializationHelpers

logger = logging.getLogger(__name__)


def levenshtein(a: str, b: str) -> int:
    """Unit-cost insert/delete/substitute distance over code points."""
    return Levenshtein.distance(a, b)


def normalized_edit_distance(pred: str, gt: str) -> float:
    """1 - levenshtein / max length; 1.0 exactly when the strings are equal."""
    longest = max(len(pred), len(gt))
    if longest == 0:
        raise BothEmpty("Normalized edit distance is undefined for two empty strings")
    return 1.0 - levenshtein(pred, gt) / longest


def evaluate(pairs: Iterable[tuple[str, str]]) -> EvalReport:
    """Exact-match accuracy and mean normalized edit distance of (prediction, truth) pairs."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyInput("evaluate needs at least one (prediction, truth) pair")
    correct = sum(1 for pred, gt in pairs if pred == gt)
    total_ned = sum(normalized_edit_distance(pred, gt) for pred, gt in pairs)
    n = len(pairs)
    return EvalReport(accuracy=correct / n, mean_norm_ed=total_ned / n, n=n)


def read_tsv_labels(path: str | Path) -> dict[str, str]:
    """Map filename -> text from ``filename<TAB>text[<TAB>...]`` lines."""
    labels: dict[str, str] = {}
    with open(path, encoding="utf-8", newline="") as f:
        content = f.read()
    lines = content.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for line_no, line in enumerate(lines, start=1):
        fields = line.rstrip("\r").split("\t")
        if len(fields) < 2:
            raise MalformedLine(line_no, f"{path}: expected at least 2 tab-separated fields")
        try:
            key = SerializationHelpers.unescape_field(fields[0])
            text = SerializationHelpers.unescape_field(fields[1])
        except ValueError as e:
            raise MalformedLine(line_no, f"{path}: {e}") from e
        if key in labels:
            raise MalformedLine(line_no, f"{path}: duplicate key {key!r}")
        labels[key] = text
    return labels


def read_tsv_pairs(pred_path: str | Path, gt_path: str | Path) -> list[tuple[str, str]]:
    """Join prediction and ground-truth files on filename, in ground-truth order."""
    predictions = read_tsv_labels(pred_path)
    truths = read_tsv_labels(gt_path)
    only_pred = sorted(set(predictions) - set(truths))
    only_gt = sorted(set(truths) - set(predictions))
    if only_pred or only_gt:
        raise ValueError(
            f"Prediction and ground-truth keys differ: {len(only_pred)} only in predictions "
            f"(e.g. {only_pred[:3]}), {len(only_gt)} only in ground truth (e.g. {only_gt[:3]})"
        )
    return [(predictions[key], truth) for key, truth in truths.items()]


def evaluate_files(pred_path: str | Path, gt_path: str | Path) -> EvalReport:
    report = evaluate(read_tsv_pairs(pred_path, gt_path))
    logger.info(f"Evaluated {report.n} pairs: {report.to_line()}")
    return report
