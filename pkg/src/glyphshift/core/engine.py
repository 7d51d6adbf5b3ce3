"""Inference engine: text replacement and labeled dataset generation."""

import logging
import random
from collections.abc import Callable, Sequence
from pathlib import Path

import numpy as np
import torch

from ..exceptions import (
    CheckpointMismatch,
    EmptyCorpus,
    EmptyText,
    GenerationExhausted,
    InvalidDomain,
    MissingGlyph,
)
from ..models.config import TrainConfig
from ..models.corpus import TextCorpus
from ..models.dataset import IMAGES_DIR, DatasetRecord, LabeledDataset
from ..models.images import GeneratedImage
from ..networks.generator import Generator
from ..training.checkpoint import Checkpoint, load_checkpoint
from ..utils.serialization import SerializationHelpers
from .loader import load_dataset, prepare_output_dir, write_manifest
from .renderer import ContentRenderer, prepare_style_image

logger = logging.getLogger(__name__)

DEFAULT_TARGET_DOMAIN = 1
# Give up after this many consecutive per-sample failures.
MAX_CONSECUTIVE_FAILURES = 1000

StyleEntry = tuple[str, np.ndarray]


class GlyphshiftEngine:
    """Runs a trained generator on (style image, text) pairs."""

    def __init__(
        self,
        checkpoint: str | Path | Checkpoint,
        config: TrainConfig | None = None,
        device: str = "cpu",
    ):
        expected = config.fingerprint() if config is not None else None
        if isinstance(checkpoint, Checkpoint):
            if expected is not None and checkpoint.fingerprint != expected:
                raise CheckpointMismatch("Checkpoint does not match the network configuration")
            ckpt = checkpoint
        else:
            ckpt = load_checkpoint(checkpoint, expected)

        self.config = config or TrainConfig.model_validate(ckpt.config)
        self.device = torch.device(device)
        self.generator = Generator(self.config.generator, self.config.ablation)
        self.generator.load_state_dict(ckpt.model_states["generator"])
        self.generator.to(self.device).eval()
        self.renderer = ContentRenderer(self.config.renderer)
        self.step = ckpt.step
        logger.debug(f"Engine ready with generator from step {ckpt.step}")

    @property
    def num_domains(self) -> int:
        return self.config.generator.num_domains

    def replace_text(
        self, style_image: np.ndarray, text: str, domain: int | None = None
    ) -> GeneratedImage:
        """Render ``text`` in the style of ``style_image`` (HxWx3 uint8).

        The result has the width of the rendered content image.
        """
        content = self.renderer.render(text, domain)
        style = prepare_style_image(
            style_image, self.renderer.config.height, self.renderer.config.min_width
        )
        style_tensor = torch.from_numpy(SerializationHelpers.from_uint8(style)).unsqueeze(0)
        with torch.no_grad():
            output = self.generator(
                style_tensor.to(self.device), content.to_tensor().to(self.device)
            )
        return GeneratedImage(pixels=output[0].cpu().numpy(), text=text)

    def generate_dataset(
        self,
        styles: Sequence[StyleEntry],
        texts: TextCorpus,
        n: int,
        out_dir: str | Path,
        seed: int = 0,
        target_domain: int = DEFAULT_TARGET_DOMAIN,
        on_progress: Callable[[int], None] | None = None,
    ) -> LabeledDataset:
        """Emit ``n`` generated images with a labels.tsv manifest under ``out_dir``.

        Style images and texts are drawn independently and uniformly; samples
        whose text cannot be rendered are skipped and replaced.
        """
        if not styles:
            raise EmptyCorpus("No style images to draw from")
        if not texts:
            raise EmptyCorpus("No texts to draw from")
        if n < 0:
            raise ValueError(f"n must be non-negative, got {n}")
        if not 0 <= target_domain < self.num_domains:
            raise InvalidDomain(
                f"Target domain must lie in [0, {self.num_domains}), got {target_domain}"
            )

        root = prepare_output_dir(out_dir, require_empty=True)
        rng = random.Random(seed)
        records: list[DatasetRecord] = []
        skipped = failures = 0
        while len(records) < n:
            _, style_image = styles[rng.randrange(len(styles))]
            text = rng.choice(texts.entries)
            try:
                generated = self.replace_text(style_image, text, target_domain)
            except (MissingGlyph, EmptyText) as e:
                skipped += 1
                failures += 1
                logger.warning(f"Skipping text {text!r}: {e}")
                if failures >= MAX_CONSECUTIVE_FAILURES:
                    raise GenerationExhausted(
                        f"{failures} consecutive samples failed to render; check the font coverage"
                    ) from e
                continue
            failures = 0

            filename = f"{len(records):07d}.png"
            SerializationHelpers.save_png(generated.pixels, root / IMAGES_DIR / filename)
            records.append(DatasetRecord(filename=filename, text=text, domain=target_domain))
            if on_progress is not None:
                on_progress(len(records))

        write_manifest(root, records)
        logger.info(f"Wrote {len(records)} images to {root} ({skipped} skipped)")
        return load_dataset(root)


def replace_text(
    checkpoint: str | Path, style_image: np.ndarray, text: str, config: TrainConfig | None = None
) -> GeneratedImage:
    return GlyphshiftEngine(checkpoint, config).replace_text(style_image, text)


def generate_dataset(
    checkpoint: str | Path,
    styles: Sequence[StyleEntry],
    texts: TextCorpus,
    n: int,
    out_dir: str | Path,
    seed: int = 0,
    config: TrainConfig | None = None,
) -> LabeledDataset:
    return GlyphshiftEngine(checkpoint, config).generate_dataset(styles, texts, n, out_dir, seed)
