"""Typeface classifier whose internal features drive the style alignment loss."""

import logging
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

import torch
from torch import nn
from torchvision.models.vgg import cfgs, make_layers

from ..exceptions import FrozenModuleError, ShapeError

logger = logging.getLogger(__name__)

# VGG-19 layout: 16 convolutions in five blocks separated by max pooling.
VGG19_LAYOUT = cfgs["E"]
NUM_TAPS = 5


@dataclass
class StyleFeatures:
    """Activations of the first ReLU of each block (shallow to deep) and the embedding."""

    layer_maps: list[torch.Tensor]
    embedding: torch.Tensor


def _scaled_layout(width_mult: float) -> list[str | int]:
    return [v if v == "M" else max(1, round(int(v) * width_mult)) for v in VGG19_LAYOUT]


class TypefaceClassifier(nn.Module):
    """VGG-19 with batch normalization, global average pooling and an FC embedding.

    Inputs follow the generator's [-1, 1] pixel convention.
    """

    def __init__(
        self,
        num_classes: int,
        width_mult: float = 1.0,
        embedding_dim: int = 512,
        height: int = 64,
    ):
        super().__init__()
        if num_classes < 2:
            raise ValueError(f"A typeface classifier needs at least 2 classes, got {num_classes}")
        self.num_classes = num_classes
        self.width_mult = width_mult
        self.embedding_dim = embedding_dim
        self.height = height

        layout = _scaled_layout(width_mult)
        self.features = make_layers(layout, batch_norm=True)
        self.tap_indices = self._first_relu_per_block()
        channels = [v for v in layout if v != "M"][-1]
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.embed = nn.Sequential(nn.Linear(int(channels), embedding_dim), nn.ReLU())
        self.classifier = nn.Linear(embedding_dim, num_classes)
        self.class_names: list[str] = []
        self._frozen = False

    def _first_relu_per_block(self) -> list[int]:
        taps: list[int] = []
        waiting = True
        for index, layer in enumerate(self.features):
            if isinstance(layer, nn.MaxPool2d):
                waiting = True
            elif waiting and isinstance(layer, nn.ReLU):
                taps.append(index)
                waiting = False
        return taps

    @property
    def frozen(self) -> bool:
        return self._frozen

    def config_dict(self) -> dict[str, Any]:
        return {
            "num_classes": self.num_classes,
            "width_mult": self.width_mult,
            "embedding_dim": self.embedding_dim,
            "height": self.height,
        }

    def check_input(self, images: torch.Tensor) -> None:
        if images.dim() != 4 or images.shape[1] != 3:
            raise ShapeError(f"Expected N x 3 x H x W images, got {tuple(images.shape)}")
        if images.shape[2] != self.height:
            raise ShapeError(f"Expected height {self.height}, got {images.shape[2]}")
        if images.shape[3] < 32:
            raise ShapeError(f"Images must be at least 32 pixels wide, got {images.shape[3]}")

    def _run(self, images: torch.Tensor) -> tuple[list[torch.Tensor], torch.Tensor]:
        self.check_input(images)
        taps = set(self.tap_indices)
        maps: list[torch.Tensor] = []
        x = images
        for index, layer in enumerate(self.features):
            x = layer(x)
            if index in taps:
                maps.append(x)
        embedding = self.embed(self.pool(x).flatten(1))
        return maps, embedding

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        """Class logits."""
        _, embedding = self._run(images)
        return self.classifier(embedding)

    def extract_features(self, images: torch.Tensor) -> StyleFeatures:
        maps, embedding = self._run(images)
        return StyleFeatures(layer_maps=maps, embedding=embedding)

    @torch.no_grad()
    def classify_font(self, images: torch.Tensor) -> torch.Tensor:
        """Class probabilities, one row per image."""
        return torch.softmax(self(images), dim=1)

    def freeze(self) -> "TypefaceClassifier":
        """Stop all updates: no gradients, evaluation-mode batch norm, no reloading."""
        for param in self.parameters():
            param.requires_grad_(False)
        self._frozen = True
        super().train(False)
        return self

    def train(self, mode: bool = True) -> "TypefaceClassifier":
        if self._frozen and mode:
            logger.debug("Ignoring train() on a frozen typeface classifier")
            mode = False
        return super().train(mode)

    def load_state_dict(
        self, state_dict: Mapping[str, Any], strict: bool = True, assign: bool = False
    ) -> Any:
        if self._frozen:
            raise FrozenModuleError("Cannot load weights into a frozen typeface classifier")
        return super().load_state_dict(state_dict, strict=strict, assign=assign)


def extract_features(classifier: TypefaceClassifier, images: torch.Tensor) -> StyleFeatures:
    return classifier.extract_features(images)


def classify_font(classifier: TypefaceClassifier, images: torch.Tensor) -> torch.Tensor:
    return classifier.classify_font(images)
