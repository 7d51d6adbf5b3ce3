"""Synthetic font datasets and typeface classifier training."""

import logging
import random
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from torch.utils.data import DataLoader, Dataset

from ..core.loader import load_dataset, prepare_output_dir, write_manifest
from ..core.renderer import Color, prepare_style_image, render_word, resize_image, sample_random_text
from ..exceptions import GenerationExhausted, InsufficientClasses, MissingGlyph
from ..integrations.font_integration import FontIntegration
from ..models.config import RendererConfig, TypefaceConfig
from ..models.corpus import TextCorpus
from ..models.dataset import IMAGES_DIR, DatasetRecord, LabeledDataset
from ..networks.typeface import TypefaceClassifier
from ..utils.serialization import SerializationHelpers
from .batching import SeededBatchSampler, batch_width

logger = logging.getLogger(__name__)

CLASSES_NAME = "classes.txt"
MIN_CONTRAST = 96
MAX_FAILURES_PER_FONT = 200


@dataclass
class FontDataset:
    """Word images (HxWx3 uint8, common height) with font class labels."""

    images: list[np.ndarray]
    labels: list[int]
    class_names: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.images) != len(self.labels):
            raise ValueError(f"{len(self.images)} images but {len(self.labels)} labels")
        if not self.class_names:
            count = max(self.labels) + 1 if self.labels else 0
            self.class_names = [str(i) for i in range(count)]
        for label in self.labels:
            if not 0 <= label < self.class_count:
                raise ValueError(f"Label {label} outside [0, {self.class_count})")
        if len(set(self.labels)) < 2:
            raise InsufficientClasses(
                f"A font dataset needs at least 2 classes, got {len(set(self.labels))}"
            )

    @property
    def class_count(self) -> int:
        return len(self.class_names)

    def __len__(self) -> int:
        return len(self.labels)

    @classmethod
    def from_labeled(cls, dataset: LabeledDataset, height: int = 64) -> "FontDataset":
        """Read a font dataset whose domain column holds the font class id."""
        names_file = dataset.root / CLASSES_NAME
        class_names: list[str] = []
        if names_file.is_file():
            class_names = [
                line.strip() for line in names_file.read_text(encoding="utf-8").splitlines()
                if line.strip()
            ]
        images = [prepare_style_image(dataset.load_image(i), height) for i in range(len(dataset))]
        return cls(images=images, labels=[r.domain for r in dataset], class_names=class_names)


@dataclass
class TypefaceTrainingResult:
    classifier: TypefaceClassifier
    history: list[dict[str, float]]

    @property
    def val_accuracy(self) -> float | None:
        if not self.history:
            return None
        return self.history[-1].get("val_accuracy")


def _luminance(color: Color) -> float:
    r, g, b = color
    return 0.299 * r + 0.587 * g + 0.114 * b


def random_colors(rng: random.Random) -> tuple[Color, Color]:
    """Background and glyph colours at least MIN_CONTRAST apart in luminance."""
    background = (rng.randrange(256), rng.randrange(256), rng.randrange(256))
    for _ in range(32):
        glyph = (rng.randrange(256), rng.randrange(256), rng.randrange(256))
        if abs(_luminance(glyph) - _luminance(background)) >= MIN_CONTRAST:
            return background, glyph
    glyph = (0, 0, 0) if _luminance(background) >= 128 else (255, 255, 255)
    return background, glyph


def synthesize_font_dataset(
    fonts: Sequence[str],
    corpus: TextCorpus,
    per_font: int,
    out_dir: str | Path,
    seed: int = 0,
    config: RendererConfig | None = None,
) -> LabeledDataset:
    """Render ``per_font`` random corpus words in every font with random colours.

    The domain column of the written manifest is the font's class index;
    ``classes.txt`` lists the font ids in class order.
    """
    config = config or RendererConfig()
    if len(set(fonts)) < 2:
        raise InsufficientClasses(f"Need at least 2 distinct fonts, got {list(fonts)}")
    root = prepare_output_dir(out_dir, require_empty=True)
    rng = random.Random(seed)
    integration = FontIntegration()
    records: list[DatasetRecord] = []

    for class_id, font in enumerate(fonts):
        made = failures = 0
        while made < per_font:
            text = sample_random_text(corpus, config.random_text_length, rng, config.random_text_mode)
            background, glyph = random_colors(rng)
            try:
                image = render_word(
                    text,
                    config.height,
                    font,
                    background=background,
                    color=glyph,
                    config=config,
                    fonts=integration,
                )
            except MissingGlyph as e:
                failures += 1
                logger.debug(f"Font {font} cannot render {text!r}: {e}")
                if failures >= MAX_FAILURES_PER_FONT:
                    raise GenerationExhausted(
                        f"Font {font} failed to render {failures} corpus samples"
                    ) from e
                continue
            filename = f"{len(records):07d}.png"
            SerializationHelpers.save_png(image.pixels, root / IMAGES_DIR / filename)
            records.append(DatasetRecord(filename=filename, text=text, domain=class_id))
            made += 1
        logger.info(f"Rendered {made} words in font {font} ({failures} skipped)")

    write_manifest(root, records)
    (root / CLASSES_NAME).write_text("".join(f"{font}\n" for font in fonts), encoding="utf-8")
    return load_dataset(root)


class FontImageDataset(Dataset):
    """Map-style view of a FontDataset yielding (image, label) pairs."""

    def __init__(self, data: FontDataset):
        self.data = data

    def __len__(self) -> int:
        return len(self.data)

    def __getitem__(self, index: int) -> tuple[np.ndarray, int]:
        return self.data.images[index], self.data.labels[index]


class FontBatchCollator:
    """collate_fn resizing word images to the batch's average width."""

    def __init__(self, height: int, min_width: int = 32):
        self.height = height
        self.min_width = min_width

    def __call__(self, items: Sequence[tuple[np.ndarray, int]]) -> tuple[torch.Tensor, torch.Tensor]:
        images = [image for image, _ in items]
        width = batch_width([img.shape[1] for img in images], self.min_width)
        arrays = [
            SerializationHelpers.from_uint8(resize_image(img, self.height, width)) for img in images
        ]
        labels = torch.tensor([label for _, label in items], dtype=torch.long)
        return torch.from_numpy(np.stack(arrays)), labels


def font_loader(
    data: FontDataset,
    indices: Sequence[int],
    batch_size: int,
    height: int,
    seed: int = 0,
    epoch: int = 0,
    shuffle: bool = True,
    num_workers: int = 0,
) -> DataLoader:
    """DataLoader over ``indices`` of ``data`` in (seed, epoch) order."""
    return DataLoader(
        FontImageDataset(data),
        batch_sampler=SeededBatchSampler(indices, batch_size, seed, epoch, shuffle=shuffle),
        collate_fn=FontBatchCollator(height),
        num_workers=num_workers,
    )


def _split(n: int, val_fraction: float, rng: random.Random) -> tuple[list[int], list[int]]:
    order = list(range(n))
    rng.shuffle(order)
    n_val = round(n * val_fraction)
    if val_fraction > 0 and n >= 2:
        n_val = max(1, min(n_val, n - 1))
    return order[n_val:], order[:n_val]


def classifier_accuracy(
    classifier: TypefaceClassifier,
    data: FontDataset,
    indices: Sequence[int],
    batch_size: int = 64,
    device: torch.device | str = "cpu",
) -> float:
    """Top-1 accuracy of ``classifier`` on the given samples."""
    if not indices:
        return 0.0
    was_training = classifier.training
    classifier.eval()
    correct = 0
    loader = font_loader(data, indices, batch_size, classifier.height, shuffle=False)
    with torch.no_grad():
        for images, labels in loader:
            predicted = classifier(images.to(device)).argmax(dim=1).cpu()
            correct += int((predicted == labels).sum())
    classifier.train(was_training)
    return correct / len(indices)


def train_typeface_classifier(
    data: FontDataset,
    config: TypefaceConfig | None = None,
    epochs: int | None = None,
    device: str = "cpu",
    on_epoch: Callable[[dict[str, float]], None] | None = None,
) -> TypefaceTrainingResult:
    """Train a VGG-19 font classifier with softmax cross-entropy and return it frozen."""
    config = config or TypefaceConfig()
    epochs = config.epochs if epochs is None else epochs
    if data.class_count < 2:
        raise InsufficientClasses("A font dataset needs at least 2 classes")

    torch.manual_seed(config.seed)
    train_idx, val_idx = _split(len(data), config.val_fraction, random.Random(config.seed))
    if not train_idx:
        raise ValueError("No training samples left after the validation split")

    classifier = TypefaceClassifier(
        data.class_count, config.width_mult, config.embedding_dim, config.height
    ).to(device)
    classifier.class_names = list(data.class_names)
    optimizer = torch.optim.Adam(classifier.parameters(), lr=config.lr)
    history: list[dict[str, float]] = []
    logger.info(
        f"Training typeface classifier: {data.class_count} classes, "
        f"{len(train_idx)} train / {len(val_idx)} val samples"
    )

    for epoch in range(epochs):
        classifier.train()
        loader = font_loader(
            data,
            train_idx,
            config.batch_size,
            config.height,
            seed=config.seed,
            epoch=epoch,
            num_workers=config.num_workers,
        )
        total_loss = 0.0
        for images, labels in loader:
            images, labels = images.to(device), labels.to(device)
            loss = F.cross_entropy(classifier(images), labels)
            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            optimizer.step()
            total_loss += float(loss.detach()) * len(labels)

        record = {"epoch": float(epoch + 1), "train_loss": total_loss / len(train_idx)}
        if val_idx:
            record["val_accuracy"] = classifier_accuracy(
                classifier, data, val_idx, config.batch_size, device
            )
        history.append(record)
        logger.info(f"Typeface epoch {epoch + 1}/{epochs}: {record}")
        if on_epoch is not None:
            on_epoch(record)

    classifier.freeze()
    return TypefaceTrainingResult(classifier=classifier, history=history)
