"""Versioned checkpoint files for the generator/discriminator pair and the typeface classifier."""

import contextlib
import logging
import os
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import torch

from ..exceptions import CheckpointMismatch, CheckpointWriteError
from ..networks.typeface import TypefaceClassifier

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
GAN_KIND = "gan"
TYPEFACE_KIND = "typeface"


@dataclass
class Checkpoint:
    """Everything needed to resume training or run inference."""

    fingerprint: str
    config: dict[str, Any]
    step: int
    epoch: int
    model_states: dict[str, dict[str, Any]]
    optimizer_states: dict[str, dict[str, Any]] = field(default_factory=dict)
    rng_state: dict[str, Any] = field(default_factory=dict)
    best_img: float | None = None
    format_version: int = FORMAT_VERSION
    kind: str = GAN_KIND

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Checkpoint":
        return cls(**data)


def capture_rng_state() -> dict[str, Any]:
    return {
        "torch": torch.get_rng_state(),
        "python": random.getstate(),
        "numpy": np.random.get_state(),
    }


def restore_rng_state(state: dict[str, Any]) -> None:
    if not state:
        return
    torch.set_rng_state(state["torch"])
    random.setstate(state["python"])
    np.random.set_state(state["numpy"])


def _atomic_save(payload: dict[str, Any], path: Path) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        torch.save(payload, tmp)
        os.replace(tmp, path)
    except OSError as e:
        with contextlib.suppress(OSError):
            tmp.unlink(missing_ok=True)
        raise CheckpointWriteError(f"Failed to write checkpoint {path}: {e}") from e


def _read(path: Path) -> dict[str, Any]:
    if not path.is_file():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    # Checkpoints carry RNG state and config dicts, not only tensors.
    data = torch.load(path, map_location="cpu", weights_only=False)
    if not isinstance(data, dict) or "format_version" not in data:
        raise CheckpointMismatch(f"{path} is not a glyphshift checkpoint")
    if data["format_version"] != FORMAT_VERSION:
        raise CheckpointMismatch(
            f"{path} has format version {data['format_version']}, expected {FORMAT_VERSION}"
        )
    return data


def save_checkpoint(checkpoint: Checkpoint, path: str | Path) -> Path:
    path = Path(path)
    _atomic_save(checkpoint.to_dict(), path)
    logger.info(f"Saved checkpoint at step {checkpoint.step} to {path}")
    return path


def load_checkpoint(path: str | Path, expected_fingerprint: str | None = None) -> Checkpoint:
    """Read a GAN checkpoint, failing on a fingerprint other than ``expected_fingerprint``."""
    path = Path(path)
    data = _read(path)
    if data.get("kind") != GAN_KIND:
        raise CheckpointMismatch(f"{path} holds a {data.get('kind')} checkpoint, not a generator")
    checkpoint = Checkpoint.from_dict(data)
    if expected_fingerprint is not None and checkpoint.fingerprint != expected_fingerprint:
        raise CheckpointMismatch(
            f"Checkpoint {path} was written for network fingerprint "
            f"{checkpoint.fingerprint[:12]}, current configuration is {expected_fingerprint[:12]}"
        )
    return checkpoint


def save_typeface_checkpoint(
    classifier: TypefaceClassifier,
    class_names: list[str],
    path: str | Path,
    metrics: dict[str, float] | None = None,
) -> Path:
    path = Path(path)
    payload = {
        "format_version": FORMAT_VERSION,
        "kind": TYPEFACE_KIND,
        "config": classifier.config_dict(),
        "class_names": list(class_names),
        "metrics": dict(metrics or {}),
        "state": classifier.state_dict(),
    }
    _atomic_save(payload, path)
    logger.info(f"Saved typeface classifier ({len(class_names)} classes) to {path}")
    return path


def load_typeface_classifier(path: str | Path, freeze: bool = True) -> TypefaceClassifier:
    """Rebuild a typeface classifier from its checkpoint; frozen unless asked otherwise."""
    path = Path(path)
    data = _read(path)
    if data.get("kind") != TYPEFACE_KIND:
        raise CheckpointMismatch(f"{path} does not hold a typeface classifier")
    classifier = TypefaceClassifier(**data["config"])
    classifier.load_state_dict(data["state"])
    classifier.class_names = data.get("class_names", [])
    return classifier.freeze() if freeze else classifier


def read_checkpoint_summary(path: str | Path) -> dict[str, Any]:
    """Header fields of either checkpoint kind, without building networks."""
    data = _read(Path(path))
    summary: dict[str, Any] = {
        "kind": data.get("kind"),
        "format_version": data["format_version"],
    }
    if data.get("kind") == TYPEFACE_KIND:
        summary["classes"] = len(data.get("class_names", []))
        summary["metrics"] = data.get("metrics", {})
        summary["parameters"] = {"classifier": _state_parameter_count(data["state"])}
        return summary
    summary.update(
        fingerprint=data["fingerprint"],
        step=data["step"],
        epoch=data["epoch"],
        best_img=data.get("best_img"),
        parameters={
            name: _state_parameter_count(state) for name, state in data["model_states"].items()
        },
    )
    return summary


def _state_parameter_count(state: dict[str, Any]) -> int:
    """Learnable values in a state dict (batch norm running statistics excluded)."""
    return sum(
        t.numel()
        for key, t in state.items()
        if t.is_floating_point() and not key.endswith(("running_mean", "running_var"))
    )
