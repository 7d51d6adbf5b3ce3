"""Training batches: average-width resizing and content rendering for both branches."""

import logging
import math
import random
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass

import numpy as np
import torch
from torch.utils.data import DataLoader, Dataset, Sampler

from ..core.renderer import ContentRenderer, resize_image, round_up4
from ..exceptions import EmptyBatch
from ..models.corpus import TextCorpus
from ..models.dataset import LabeledDataset
from ..models.images import StyleSample
from ..utils.serialization import SerializationHelpers

logger = logging.getLogger(__name__)


@dataclass
class TrainingBatch:
    """Style images with their labels and the two rendered content branches.

    All image tensors are N x 3 x H x ``width``.
    """

    style_images: torch.Tensor
    style_labels: list[str]
    domains: torch.Tensor
    content_images_1: torch.Tensor
    content_images_2: torch.Tensor
    random_texts: list[str]
    width: int

    def __len__(self) -> int:
        return len(self.style_labels)

    def to(self, device: torch.device | str) -> "TrainingBatch":
        return TrainingBatch(
            style_images=self.style_images.to(device),
            style_labels=self.style_labels,
            domains=self.domains.to(device),
            content_images_1=self.content_images_1.to(device),
            content_images_2=self.content_images_2.to(device),
            random_texts=self.random_texts,
            width=self.width,
        )


def batch_width(widths: Sequence[float], min_width: int = 32) -> int:
    """Mean width rounded up to a multiple of 4, at least ``min_width``."""
    if not widths:
        raise EmptyBatch("Cannot compute the width of an empty batch")
    return max(round_up4(sum(widths) / len(widths)), min_width)


def _scaled_width(sample: StyleSample, height: int) -> float:
    return sample.width * height / max(sample.height, 1)


def make_batch(
    samples: Sequence[StyleSample],
    rng: random.Random,
    renderer: ContentRenderer,
    corpora: Mapping[int, TextCorpus] | TextCorpus,
) -> TrainingBatch:
    """Resize the style images to the batch width and render both content branches.

    Branch 1 renders each style label; branch 2 renders a random text drawn
    from the corpus of the sample's domain.
    """
    if not samples:
        raise EmptyBatch("make_batch needs at least one sample")
    height = renderer.config.height
    width = batch_width([_scaled_width(s, height) for s in samples], renderer.config.min_width)

    styles, content_1, content_2, random_texts = [], [], [], []
    for sample in samples:
        corpus = corpora if isinstance(corpora, TextCorpus) else corpora[sample.domain]
        text_2 = renderer.random_text(corpus, rng)
        random_texts.append(text_2)
        styles.append(
            SerializationHelpers.from_uint8(resize_image(sample.image, height, width))
        )
        content_1.append(renderer.render_to_width(sample.text, width, sample.domain))
        content_2.append(renderer.render_to_width(text_2, width, sample.domain))

    return TrainingBatch(
        style_images=torch.from_numpy(np.stack(styles)),
        style_labels=[s.text for s in samples],
        domains=torch.tensor([s.domain for s in samples], dtype=torch.long),
        content_images_1=torch.from_numpy(np.stack(content_1)),
        content_images_2=torch.from_numpy(np.stack(content_2)),
        random_texts=random_texts,
        width=width,
    )


def domain_corpora(dataset: LabeledDataset) -> dict[int, TextCorpus]:
    """Random-text corpora built from the dataset's own labels, one per domain."""
    texts: dict[int, list[str]] = {}
    for record in dataset:
        texts.setdefault(record.domain, []).append(record.text)
    return {domain: TextCorpus(entries=entries) for domain, entries in texts.items()}


def epoch_order(num_samples: int, seed: int, epoch: int) -> list[int]:
    """Sample order of one epoch; depends only on (seed, epoch)."""
    order = list(range(num_samples))
    random.Random(f"{seed}:{epoch}").shuffle(order)
    return order


def step_rng(seed: int, step: int) -> random.Random:
    return random.Random(f"{seed}:step:{step}")


class SeededBatchSampler(Sampler[list[int]]):
    """Batches of ``indices`` in an order fixed by (seed, epoch).

    The trailing partial batch is kept; the first ``start_batch`` batches are skipped.
    """

    def __init__(
        self,
        indices: Sequence[int],
        batch_size: int,
        seed: int = 0,
        epoch: int = 0,
        shuffle: bool = True,
        start_batch: int = 0,
    ):
        super().__init__()
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        self.indices = list(indices)
        self.batch_size = batch_size
        self.seed = seed
        self.epoch = epoch
        self.shuffle = shuffle
        self.start_batch = start_batch

    def batches(self) -> list[list[int]]:
        order = self.indices
        if self.shuffle:
            order = [order[i] for i in epoch_order(len(order), self.seed, self.epoch)]
        chunks = [order[i : i + self.batch_size] for i in range(0, len(order), self.batch_size)]
        return chunks[self.start_batch :]

    def __iter__(self) -> Iterator[list[int]]:
        yield from self.batches()

    def __len__(self) -> int:
        return max(0, math.ceil(len(self.indices) / self.batch_size) - self.start_batch)


class StepBatchSampler(SeededBatchSampler):
    """Tags every index with the global step of its batch."""

    def __init__(self, *args, first_step: int = 0, **kwargs):
        super().__init__(*args, **kwargs)
        self.first_step = first_step

    def __iter__(self) -> Iterator[list[tuple[int, int]]]:  # type: ignore[override]
        for offset, batch in enumerate(self.batches()):
            step = self.first_step + self.start_batch + offset
            yield [(step, index) for index in batch]


class StyleSampleDataset(Dataset):
    """Map-style view of a labeled dataset, indexed by (step, index) pairs."""

    def __init__(self, dataset: LabeledDataset):
        self.dataset = dataset

    def __len__(self) -> int:
        return len(self.dataset)

    def __getitem__(self, item: tuple[int, int]) -> tuple[int, StyleSample]:
        step, index = item
        return step, self.dataset.sample(index)


class BatchCollator:
    """collate_fn turning step-tagged samples into one TrainingBatch."""

    def __init__(
        self,
        renderer: ContentRenderer,
        corpora: Mapping[int, TextCorpus] | TextCorpus,
        seed: int = 0,
    ):
        self.renderer = renderer
        self.corpora = corpora
        self.seed = seed

    def __call__(self, items: Sequence[tuple[int, StyleSample]]) -> tuple[int, TrainingBatch]:
        if not items:
            raise EmptyBatch("Cannot collate an empty batch")
        step = items[0][0]
        samples = [sample for _, sample in items]
        return step, make_batch(samples, step_rng(self.seed, step), self.renderer, self.corpora)


class BatchStream:
    """Seed-ordered batches of a labeled dataset fed through a DataLoader.

    Rendering runs in ``num_workers`` worker processes, each keeping ``prefetch``
    batches ahead; batches come out in step order whatever the worker count.
    """

    def __init__(
        self,
        dataset: LabeledDataset,
        renderer: ContentRenderer,
        batch_size: int,
        seed: int = 0,
        num_workers: int = 0,
        prefetch: int = 2,
    ):
        if len(dataset) == 0:
            raise EmptyBatch(f"Dataset at {dataset.root} has no samples")
        self.dataset = dataset
        self.batch_size = batch_size
        self.seed = seed
        self.num_workers = num_workers
        self.prefetch = max(1, prefetch)
        self.samples = StyleSampleDataset(dataset)
        self.collate = BatchCollator(renderer, domain_corpora(dataset), seed)

    @property
    def steps_per_epoch(self) -> int:
        return math.ceil(len(self.dataset) / self.batch_size)

    def sampler(self, epoch: int, start_step: int = 0) -> StepBatchSampler:
        return StepBatchSampler(
            range(len(self.dataset)),
            self.batch_size,
            seed=self.seed,
            epoch=epoch,
            start_batch=start_step,
            first_step=epoch * self.steps_per_epoch,
        )

    def loader(self, epoch: int, start_step: int = 0) -> DataLoader:
        return DataLoader(
            self.samples,
            batch_sampler=self.sampler(epoch, start_step),
            collate_fn=self.collate,
            num_workers=self.num_workers,
            prefetch_factor=self.prefetch if self.num_workers else None,
        )

    def epoch(self, epoch: int, start_step: int = 0) -> Iterator[tuple[int, TrainingBatch]]:
        """Yield (global step, batch) for one epoch, skipping the first ``start_step`` batches."""
        yield from self.loader(epoch, start_step)
