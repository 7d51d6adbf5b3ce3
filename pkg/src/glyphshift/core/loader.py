"""Loading and writing of labeled datasets, style image folders and config files."""

import logging
import os
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Any, TypeVar

import numpy as np
import yaml
from PIL import Image, UnidentifiedImageError
from pydantic import BaseModel

from ..exceptions import (
    DanglingReference,
    MalformedLine,
    ManifestMissing,
    OutputNotEmpty,
    OutputUnwritable,
)
from ..models.config import TrainConfig
from ..models.dataset import IMAGES_DIR, MANIFEST_NAME, DatasetRecord, LabeledDataset
from ..utils.serialization import SerializationHelpers

logger = logging.getLogger(__name__)

ENV_PREFIX = "GLYPHSHIFT_"
TYPEFACE_ENV_PREFIX = "GLYPHSHIFT_TYPEFACE_"
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")

ConfigT = TypeVar("ConfigT", bound=BaseModel)


class DatasetLoader:
    """Loads labeled datasets from disk and caches the validated handles."""

    def __init__(self) -> None:
        self._loaded: dict[Path, LabeledDataset] = {}

    def load_dataset(self, root: str | Path, use_cache: bool = True) -> LabeledDataset:
        """Parse and validate ``root/labels.tsv``; records keep manifest order."""
        root = Path(root)
        key = root.resolve()
        if use_cache and key in self._loaded:
            return self._loaded[key]

        manifest = root / MANIFEST_NAME
        if not manifest.is_file():
            raise ManifestMissing(f"{MANIFEST_NAME} not found in {root}")

        logger.debug(f"Loading dataset from {root}")
        records = self._parse_manifest(manifest)
        dataset = LabeledDataset(root=root, records=records)
        self._check_images(dataset)

        self._loaded[key] = dataset
        logger.debug(f"Loaded {len(records)} records from {manifest}")
        return dataset

    def _parse_manifest(self, manifest: Path) -> list[DatasetRecord]:
        raw_lines = manifest.read_bytes().split(b"\n")
        if raw_lines and raw_lines[-1] == b"":
            raw_lines.pop()

        records: list[DatasetRecord] = []
        seen: set[str] = set()
        for line_no, raw in enumerate(raw_lines, start=1):
            record = self._parse_line(raw, line_no)
            if record.filename in seen:
                raise MalformedLine(line_no, f"duplicate filename {record.filename!r}")
            seen.add(record.filename)
            records.append(record)
        return records

    def _parse_line(self, raw: bytes, line_no: int) -> DatasetRecord:
        try:
            line = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise MalformedLine(line_no, f"invalid UTF-8 ({e.reason})") from e
        fields = line.split("\t")
        if len(fields) != 3:
            raise MalformedLine(line_no, f"expected 3 tab-separated fields, got {len(fields)}")
        try:
            filename = SerializationHelpers.unescape_field(fields[0])
            text = SerializationHelpers.unescape_field(fields[1])
        except ValueError as e:
            raise MalformedLine(line_no, str(e)) from e
        if not filename or "/" in filename or filename in (".", ".."):
            raise MalformedLine(line_no, f"invalid filename {filename!r}")
        try:
            domain = int(fields[2])
        except ValueError as e:
            raise MalformedLine(line_no, f"domain id is not an integer: {fields[2]!r}") from e
        if domain < 0:
            raise MalformedLine(line_no, f"domain id must be non-negative, got {domain}")
        return DatasetRecord(filename=filename, text=text, domain=domain)

    def _check_images(self, dataset: LabeledDataset) -> None:
        for record in dataset:
            if not dataset.image_path(record).is_file():
                raise DanglingReference(record.filename)
        if dataset.images_dir.is_dir():
            referenced = {record.filename for record in dataset}
            extra = [p.name for p in dataset.images_dir.iterdir() if p.name not in referenced]
            if extra:
                logger.warning(
                    f"{len(extra)} image(s) in {dataset.images_dir} are not in the manifest"
                )


def prepare_output_dir(root: str | Path, require_empty: bool = False) -> Path:
    """Create ``root/images``; raise OutputUnwritable if that fails.

    With ``require_empty`` an ``images/`` directory that already holds files
    raises OutputNotEmpty, so a new manifest never leaves stale images behind.
    """
    root = Path(root)
    images_dir = root / IMAGES_DIR
    try:
        images_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputUnwritable(f"Cannot create output directory {root}: {e}") from e
    if require_empty and any(images_dir.iterdir()):
        raise OutputNotEmpty(
            f"{images_dir} already holds files; generate into an empty directory"
        )
    if not os.access(root, os.W_OK):
        raise OutputUnwritable(f"Output directory is not writable: {root}")
    return root


def write_manifest(root: str | Path, records: Iterable[DatasetRecord]) -> Path:
    """Write labels.tsv in record order (temporary file, then rename)."""
    root = Path(root)
    manifest = root / MANIFEST_NAME
    tmp = root / (MANIFEST_NAME + ".tmp")
    try:
        SerializationHelpers.write_tsv(
            ((r.filename, r.text, r.domain) for r in records), tmp
        )
        os.replace(tmp, manifest)
    except OSError as e:
        raise OutputUnwritable(f"Cannot write manifest {manifest}: {e}") from e
    return manifest


def load_dataset(root: str | Path) -> LabeledDataset:
    """Validated dataset handle for ``root`` (uncached)."""
    return DatasetLoader().load_dataset(root, use_cache=False)


def load_style_images(root: str | Path) -> list[tuple[str, np.ndarray]]:
    """Style images as (name, HxWx3 uint8) pairs.

    A directory with a manifest is read in manifest order; a plain folder of
    images in sorted filename order.
    """
    root = Path(root)
    if (root / MANIFEST_NAME).is_file():
        dataset = load_dataset(root)
        return [(record.filename, dataset.load_image(i)) for i, record in enumerate(dataset)]

    if not root.is_dir():
        raise FileNotFoundError(f"Style image directory not found: {root}")
    images = []
    for path in sorted(root.iterdir()):
        if path.suffix.lower() not in IMAGE_SUFFIXES:
            continue
        try:
            with Image.open(path) as img:
                images.append((path.name, np.asarray(img.convert("RGB"), dtype=np.uint8).copy()))
        except (UnidentifiedImageError, OSError) as e:
            logger.warning(f"Skipping unreadable style image {path}: {e}")
    return images


def env_overrides(
    prefix: str = ENV_PREFIX,
    environ: Mapping[str, str] | None = None,
    exclude: Iterable[str] = (),
) -> dict[str, Any]:
    """Dotted-key overrides from ``<PREFIX><KEY>`` variables, ``__`` standing for a dot."""
    environ = os.environ if environ is None else environ
    excluded = tuple(exclude)
    overrides: dict[str, Any] = {}
    for name, raw in environ.items():
        if not name.startswith(prefix) or (excluded and name.startswith(excluded)):
            continue
        key = name[len(prefix) :].lower().replace("__", ".")
        overrides[key] = yaml.safe_load(raw) if raw.strip() else None
    return overrides


def load_settings(
    model: type[ConfigT],
    path: str | Path | None = None,
    prefix: str = ENV_PREFIX,
    environ: Mapping[str, str] | None = None,
    exclude: Iterable[str] = (),
) -> ConfigT:
    """Validate a flat dotted-key YAML file plus environment overrides into ``model``."""
    data: dict[str, Any] = {}
    if path is not None:
        loaded = SerializationHelpers.load_from_file(path)
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ValueError(f"Config file {path} must hold a key/value mapping")
        data = SerializationHelpers.flatten_dict(loaded)

    overrides = env_overrides(prefix, environ, exclude)
    if overrides:
        logger.debug(f"Environment overrides: {sorted(overrides)}")
    data.update(overrides)
    return model.model_validate(SerializationHelpers.unflatten_dict(data))


def load_config(
    path: str | Path | None = None, environ: Mapping[str, str] | None = None
) -> TrainConfig:
    """Training config from a file (or defaults) with ``GLYPHSHIFT_*`` overrides."""
    return load_settings(
        TrainConfig, path, ENV_PREFIX, environ, exclude=(TYPEFACE_ENV_PREFIX,)
    )
