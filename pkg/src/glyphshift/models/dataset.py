"""Labeled dataset models for glyphshift."""

from collections.abc import Iterator
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .images import StyleSample

MANIFEST_NAME = "labels.tsv"
IMAGES_DIR = "images"


@dataclass(frozen=True)
class DatasetRecord:
    """One manifest line: image filename, transcription and domain (or font) id."""

    filename: str
    text: str
    domain: int


@dataclass
class LabeledDataset:
    """A directory of PNG images described by a labels.tsv manifest."""

    root: Path
    records: list[DatasetRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[DatasetRecord]:
        return iter(self.records)

    def __getitem__(self, index: int) -> DatasetRecord:
        return self.records[index]

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_NAME

    @property
    def images_dir(self) -> Path:
        return self.root / IMAGES_DIR

    def image_path(self, record: DatasetRecord) -> Path:
        return self.images_dir / record.filename

    def load_image(self, index: int) -> np.ndarray:
        """Decode the image of a record as uint8 RGB, height x width x 3."""
        with Image.open(self.image_path(self.records[index])) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8).copy()

    def sample(self, index: int) -> StyleSample:
        record = self.records[index]
        return StyleSample(image=self.load_image(index), text=record.text, domain=record.domain)

    def texts(self) -> list[str]:
        return [record.text for record in self.records]

    def class_ids(self) -> list[int]:
        return sorted({record.domain for record in self.records})
