"""Configuration models for glyphshift."""

import hashlib
import json
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class RendererConfig(BaseModel):
    """Content image rendering settings."""

    model_config = ConfigDict(extra="forbid")

    height: int = Field(64, ge=16)
    font: str = "dejavu-sans"
    # Domain id -> font id, for languages the default font does not cover.
    domain_fonts: dict[int, str] = Field(default_factory=dict)
    font_scale: float = Field(0.7, gt=0.0, le=1.0)
    margin_ratio: float = Field(0.1, ge=0.0)
    min_width: int = Field(32, ge=4)
    background: int = Field(127, ge=0, le=255)
    random_text_mode: Literal["entry", "chars"] = "entry"
    random_text_length: tuple[int, int] = (1, 16)

    @field_validator("min_width")
    @classmethod
    def _multiple_of_four(cls, value: int) -> int:
        if value % 4:
            raise ValueError("min_width must be a multiple of 4")
        return value

    @field_validator("random_text_length")
    @classmethod
    def _ordered_range(cls, value: tuple[int, int]) -> tuple[int, int]:
        low, high = value
        if low < 1 or low > high:
            raise ValueError(f"random_text_length must satisfy 1 <= min <= max, got {value}")
        return value

    def font_for_domain(self, domain: int) -> str:
        """Return the standard font used for a domain."""
        return self.domain_fonts.get(domain, self.font)


class AttentionConfig(BaseModel):
    """Integrated attention settings."""

    model_config = ConfigDict(extra="forbid")

    patch_size: int = Field(3, ge=1)
    dense_depth: int = Field(3, ge=1)
    local_hidden: int = Field(256, ge=1)
    local_normalize: bool = False

    @field_validator("patch_size")
    @classmethod
    def _odd(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError("patch_size must be odd")
        return value


class AblationFlags(BaseModel):
    """Switches removing one component each (all on = full model)."""

    model_config = ConfigDict(extra="forbid")

    global_attention_low: bool = True
    local_attention_high: bool = True
    typeface_loss: bool = True


class GeneratorConfig(BaseModel):
    """Architecture settings of the generator and discriminator."""

    model_config = ConfigDict(extra="forbid")

    style_dim: int = Field(128, ge=1)
    num_domains: int = Field(2, ge=1)
    mapping_hidden: int = Field(256, ge=1)
    norm_eps: float = Field(1e-5, gt=0.0)
    attention: AttentionConfig = Field(default_factory=AttentionConfig)


class LossWeights(BaseModel):
    """Weights of the style alignment loss and of the full objective."""

    model_config = ConfigDict(extra="forbid")

    lambda1: float = Field(1.0, ge=0.0)
    lambda2: float = Field(250.0, ge=0.0)
    lambda3: float = Field(1.0, ge=0.0)
    lambda_cnt: float = Field(1.0, ge=0.0)
    lambda_img: float = Field(10.0, ge=0.0)
    lambda_sty1: float = Field(1.0, ge=0.0)
    lambda_sty2: float = Field(0.1, ge=0.0)
    gamma_r1: float = Field(10.0, ge=0.0)


class TypefaceConfig(BaseModel):
    """Typeface classifier architecture and training settings."""

    model_config = ConfigDict(extra="forbid")

    width_mult: float = Field(1.0, gt=0.0)
    embedding_dim: int = Field(512, ge=1)
    epochs: int = Field(10, ge=0)
    batch_size: int = Field(256, ge=1)
    lr: float = Field(1e-3, gt=0.0)
    val_fraction: float = Field(0.1, ge=0.0, lt=1.0)
    seed: int = 0
    height: int = Field(64, ge=16)
    num_workers: int = Field(0, ge=0)


class TrainConfig(BaseModel):
    """Adversarial training settings."""

    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(200, ge=0)
    batch_size: int = Field(16, ge=1)
    lr: float = Field(1e-4, gt=0.0)
    weight_decay: float = Field(1e-4, ge=0.0)
    decay_norm_params: bool = True
    adam_betas: tuple[float, float] = (0.9, 0.99)
    rmsprop_alpha: float = Field(0.99, gt=0.0, lt=1.0)
    weights: LossWeights = Field(default_factory=LossWeights)
    ablation: AblationFlags = Field(default_factory=AblationFlags)
    generator: GeneratorConfig = Field(default_factory=GeneratorConfig)
    renderer: RendererConfig = Field(default_factory=RendererConfig)
    content_loss_levels: Literal["top", "all"] = "top"
    seed: int = 0
    max_steps: int | None = Field(None, ge=0)
    checkpoint_interval: int = Field(1, ge=1)
    num_workers: int = Field(0, ge=0)
    prefetch: int = Field(2, ge=1)
    device: str = "cpu"

    @model_validator(mode="after")
    def _betas_in_range(self) -> "TrainConfig":
        for beta in self.adam_betas:
            if not 0.0 <= beta < 1.0:
                raise ValueError(f"adam_betas must lie in [0, 1), got {self.adam_betas}")
        return self

    def fingerprint(self) -> str:
        """Hash of every setting that changes the network graph."""
        return network_fingerprint(self.generator, self.ablation)


def network_fingerprint(generator: GeneratorConfig, ablation: AblationFlags) -> str:
    """SHA-256 over the canonical JSON of the graph-shaping settings."""
    payload = {
        "generator": generator.model_dump(mode="json"),
        "global_attention_low": ablation.global_attention_low,
        "local_attention_high": ablation.local_attention_high,
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
