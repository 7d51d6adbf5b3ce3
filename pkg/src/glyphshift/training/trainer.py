"""Adversarial training loop."""

import logging
from collections.abc import Callable, Iterator
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import torch
from torch import nn

from ..core.renderer import ContentRenderer
from ..exceptions import CheckpointMismatch
from ..models.config import TrainConfig
from ..models.dataset import LabeledDataset
from ..models.report import LossReport
from ..networks.discriminator import Discriminator
from ..networks.generator import Generator
from ..networks.init import count_parameters, init_weights
from ..networks.typeface import TypefaceClassifier
from ..utils.serialization import SerializationHelpers
from .batching import BatchStream, TrainingBatch
from .checkpoint import (
    Checkpoint,
    capture_rng_state,
    load_checkpoint,
    restore_rng_state,
    save_checkpoint,
)
from .losses import (
    check_finite,
    content_consistency_levels,
    hinge_d_loss,
    hinge_g_loss,
    r1_penalty,
    reconstruction_loss,
    style_alignment_loss,
    total_generator_loss,
)

logger = logging.getLogger(__name__)

LOG_NAME = "train_log.jsonl"
BEST_NAME = "best.pt"
LAST_NAME = "last.pt"


@dataclass
class TrainingModels:
    """The networks one training run owns, plus the frozen classifier it borrows."""

    generator: Generator
    discriminator: Discriminator
    classifier: TypefaceClassifier | None = None

    def trainable(self) -> dict[str, nn.Module]:
        return {"generator": self.generator, "discriminator": self.discriminator}

    def parameter_counts(self) -> dict[str, int]:
        generator = self.generator
        return {
            "style_encoder": count_parameters(generator.style_encoder),
            "content_encoder": count_parameters(generator.content_encoder),
            "mapping": count_parameters(generator.mapping),
            "decoder": count_parameters(generator.decoder),
            "discriminator": count_parameters(self.discriminator),
            "classifier": count_parameters(self.classifier),
        }

    def state_dicts(self) -> dict[str, dict[str, Any]]:
        return {name: module.state_dict() for name, module in self.trainable().items()}

    def load_state_dicts(self, states: dict[str, dict[str, Any]]) -> None:
        for name, module in self.trainable().items():
            module.load_state_dict(states[name])

    def to(self, device: torch.device | str) -> "TrainingModels":
        self.generator.to(device)
        self.discriminator.to(device)
        if self.classifier is not None:
            self.classifier.to(device)
        return self


def build_models(
    config: TrainConfig, classifier: TypefaceClassifier | None = None
) -> TrainingModels:
    """Freshly initialized generator and discriminator, seeded from the config."""
    torch.manual_seed(config.seed)
    generator = init_weights(Generator(config.generator, config.ablation))
    discriminator = init_weights(Discriminator(config.generator.num_domains))
    if classifier is not None and not classifier.frozen:
        classifier.freeze()
    return TrainingModels(generator, discriminator, classifier)


@dataclass
class Optimizers:
    """Adam for the style pathway and the discriminator, RMSprop for content encoder and decoder."""

    style: torch.optim.Adam
    mapping: torch.optim.Adam
    content: torch.optim.RMSprop
    discriminator: torch.optim.Adam

    def generator_side(self) -> list[torch.optim.Optimizer]:
        return [self.style, self.mapping, self.content]

    def named(self) -> dict[str, torch.optim.Optimizer]:
        return {
            "style": self.style,
            "mapping": self.mapping,
            "content": self.content,
            "discriminator": self.discriminator,
        }

    def state_dicts(self) -> dict[str, dict[str, Any]]:
        return {name: opt.state_dict() for name, opt in self.named().items()}

    def load_state_dicts(self, states: dict[str, dict[str, Any]]) -> None:
        for name, opt in self.named().items():
            opt.load_state_dict(states[name])


def _param_groups(
    modules: list[nn.Module], weight_decay: float, decay_norm_params: bool
) -> list[dict[str, Any]]:
    params = [p for module in modules for p in module.parameters() if p.requires_grad]
    if decay_norm_params:
        return [{"params": params, "weight_decay": weight_decay}]
    # biases and normalization scales/shifts are the 1-D parameters
    decay = [p for p in params if p.dim() > 1]
    no_decay = [p for p in params if p.dim() <= 1]
    return [
        {"params": decay, "weight_decay": weight_decay},
        {"params": no_decay, "weight_decay": 0.0},
    ]


def build_optimizers(models: TrainingModels, config: TrainConfig) -> Optimizers:
    generator = models.generator

    def groups(*modules: nn.Module) -> list[dict[str, Any]]:
        return _param_groups(list(modules), config.weight_decay, config.decay_norm_params)

    return Optimizers(
        style=torch.optim.Adam(
            groups(generator.style_encoder), lr=config.lr, betas=config.adam_betas
        ),
        mapping=torch.optim.Adam(groups(generator.mapping), lr=config.lr, betas=config.adam_betas),
        content=torch.optim.RMSprop(
            groups(generator.content_encoder, generator.decoder),
            lr=config.lr,
            alpha=config.rmsprop_alpha,
        ),
        discriminator=torch.optim.Adam(
            groups(models.discriminator), lr=config.lr, betas=config.adam_betas
        ),
    )


def _set_requires_grad(module: nn.Module, flag: bool) -> None:
    for param in module.parameters():
        param.requires_grad_(flag)


def train_step(
    batch: TrainingBatch,
    models: TrainingModels,
    optimizers: Optimizers,
    config: TrainConfig,
    step: int = 0,
) -> LossReport:
    """One discriminator update followed by one generator update."""
    weights = config.weights
    generator, discriminator = models.generator, models.discriminator
    use_typeface = config.ablation.typeface_loss and models.classifier is not None
    generator.train()
    discriminator.train()
    style, y = batch.style_images, batch.domains
    fake_y = torch.cat((y, y))

    # Discriminator
    _set_requires_grad(discriminator, True)
    with torch.no_grad():
        fake = torch.cat(
            (generator(style, batch.content_images_1), generator(style, batch.content_images_2))
        )
    real = style.detach().requires_grad_(True)
    real_scores = discriminator(real, y)
    adv_d = hinge_d_loss(real_scores, discriminator(fake, fake_y))
    r1 = r1_penalty(discriminator, real, y, weights.gamma_r1, real_scores=real_scores)
    total_d = adv_d + r1
    values = {"adv_d": check_finite("adv_d", adv_d), "r1": check_finite("r1", r1)}
    optimizers.discriminator.zero_grad(set_to_none=True)
    total_d.backward()
    optimizers.discriminator.step()

    # Generator
    _set_requires_grad(discriminator, False)
    params = generator.map_style(generator.encode_style(style))
    content_1 = generator.encode_content(batch.content_images_1)
    content_2 = generator.encode_content(batch.content_images_2)
    out_1 = generator.decode(content_1, params)
    out_2 = generator.decode(content_2, params)

    parts: dict[str, torch.Tensor] = {
        "adv_g": hinge_g_loss(discriminator(torch.cat((out_1, out_2)), fake_y)),
        "img": reconstruction_loss(out_1, style),
        "cnt": 0.5
        * (
            content_consistency_levels(
                content_1, generator.encode_content(out_1), config.content_loss_levels
            )
            + content_consistency_levels(
                content_2, generator.encode_content(out_2), config.content_loss_levels
            )
        ),
    }
    if use_typeface:
        assert models.classifier is not None
        parts["sty1"] = style_alignment_loss(style, out_1, models.classifier, weights)
        parts["sty2"] = style_alignment_loss(style, out_2, models.classifier, weights)
    for term, value in parts.items():
        values[term] = check_finite(term, value)

    total_g = total_generator_loss(parts, weights)
    assert isinstance(total_g, torch.Tensor)
    check_finite("total_g", total_g)
    for optimizer in optimizers.generator_side():
        optimizer.zero_grad(set_to_none=True)
    total_g.backward()
    for optimizer in optimizers.generator_side():
        optimizer.step()
    _set_requires_grad(discriminator, True)

    report = LossReport(step=step, **values)
    report.total_g = float(total_generator_loss(values, weights))
    report.total_d = report.adv_d + report.r1
    return report


class Trainer:
    """Owns one training run: models, optimizers, batch stream and checkpoints."""

    def __init__(
        self,
        config: TrainConfig,
        dataset: LabeledDataset,
        classifier: TypefaceClassifier | None = None,
        out_dir: str | Path | None = None,
    ):
        self.config = config
        self.dataset = dataset
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.device = torch.device(config.device)
        self.models = build_models(config, classifier).to(self.device)
        self.optimizers = build_optimizers(self.models, config)
        self.renderer = ContentRenderer(config.renderer)
        self.stream = BatchStream(
            dataset,
            self.renderer,
            config.batch_size,
            seed=config.seed,
            num_workers=config.num_workers,
            prefetch=config.prefetch,
        )
        self.step = 0
        self.epoch = 0
        self.best_img: float | None = None
        self.history: list[LossReport] = []
        self.written: list[Path] = []
        if config.ablation.typeface_loss and classifier is None:
            logger.warning("Typeface loss enabled but no classifier given; style terms are zero")

        counts = self.models.parameter_counts()
        logger.info(f"Parameter counts: {counts}")

    @property
    def total_steps(self) -> int:
        steps = self.config.epochs * self.stream.steps_per_epoch
        if self.config.max_steps is not None:
            steps = min(steps, self.config.max_steps)
        return steps

    def train_step(self, batch: TrainingBatch, step: int) -> LossReport:
        return train_step(batch.to(self.device), self.models, self.optimizers, self.config, step)

    def iter_steps(self) -> Iterator[LossReport]:
        """Run the remaining steps, yielding one report per step."""
        spe = self.stream.steps_per_epoch
        total = self.total_steps
        start_epoch, offset = divmod(self.step, spe)
        for epoch in range(start_epoch, self.config.epochs):
            if self.step >= total:
                break
            img_values: list[float] = []
            for step, batch in self.stream.epoch(epoch, offset if epoch == start_epoch else 0):
                if step >= total:
                    break
                report = self.train_step(batch, step)
                self.step = step + 1
                self.history.append(report)
                img_values.append(report.img)
                self._log(report)
                yield report
            if self.step == (epoch + 1) * spe:
                self.epoch = epoch + 1
                self._end_of_epoch(img_values)

    def fit(self, callback: Callable[[LossReport], None] | None = None) -> list[Path]:
        """Train to ``epochs`` (or ``max_steps``) and return the checkpoint files written."""
        if self.config.epochs == 0 or self.total_steps == 0:
            logger.info("Nothing to train (zero epochs or steps)")
            return []
        logger.info(f"Training from step {self.step} to {self.total_steps}")
        for report in self.iter_steps():
            if callback is not None:
                callback(report)
        if self.out_dir is not None:
            self.written.append(self.save(self.out_dir / LAST_NAME))
        return self.written

    def _log(self, report: LossReport) -> None:
        logger.debug(
            f"step {report.step}: total_g={report.total_g:.4f} total_d={report.total_d:.4f} "
            f"img={report.img:.4f}"
        )
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            SerializationHelpers.append_json_line(report.to_dict(), self.out_dir / LOG_NAME)

    def _end_of_epoch(self, img_values: list[float]) -> None:
        if self.out_dir is None:
            return
        if self.epoch % self.config.checkpoint_interval == 0:
            self.written.append(self.save(self.out_dir / f"epoch_{self.epoch:04d}.pt"))
        if img_values:
            mean_img = sum(img_values) / len(img_values)
            if self.best_img is None or mean_img < self.best_img:
                self.best_img = mean_img
                self.written.append(self.save(self.out_dir / BEST_NAME))
                logger.info(f"New best reconstruction {mean_img:.4f} at epoch {self.epoch}")

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(
            fingerprint=self.config.fingerprint(),
            config=self.config.model_dump(mode="json"),
            step=self.step,
            epoch=self.epoch,
            model_states=self.models.state_dicts(),
            optimizer_states=self.optimizers.state_dicts(),
            rng_state=capture_rng_state(),
            best_img=self.best_img,
        )

    def save(self, path: str | Path) -> Path:
        return save_checkpoint(self.checkpoint(), path)

    def restore(self, checkpoint: Checkpoint) -> None:
        if checkpoint.fingerprint != self.config.fingerprint():
            raise CheckpointMismatch("Checkpoint does not match the network configuration")
        self.models.load_state_dicts(checkpoint.model_states)
        self.optimizers.load_state_dicts(checkpoint.optimizer_states)
        restore_rng_state(checkpoint.rng_state)
        self.step = checkpoint.step
        self.epoch = checkpoint.epoch
        self.best_img = checkpoint.best_img
        logger.info(f"Resumed at step {self.step} (epoch {self.epoch})")

    @classmethod
    def resume(
        cls,
        checkpoint_path: str | Path,
        config: TrainConfig,
        dataset: LabeledDataset,
        classifier: TypefaceClassifier | None = None,
        out_dir: str | Path | None = None,
    ) -> "Trainer":
        trainer = cls(config, dataset, classifier, out_dir)
        trainer.restore(load_checkpoint(checkpoint_path, config.fingerprint()))
        return trainer


def fit(
    config: TrainConfig,
    dataset: LabeledDataset,
    classifier: TypefaceClassifier | None = None,
    out_dir: str | Path | None = None,
    resume_from: str | Path | None = None,
) -> list[Path]:
    """Train a generator on ``dataset`` and return the written checkpoints."""
    if resume_from is not None:
        trainer = Trainer.resume(resume_from, config, dataset, classifier, out_dir)
    else:
        trainer = Trainer(config, dataset, classifier, out_dir)
    return trainer.fit()
