"""Image records passed between the renderer, the networks and the datasets."""

from dataclasses import dataclass

import numpy as np
import torch


@dataclass(frozen=True)
class ContentImage:
    """Text rendered in a standard font on a plain grey canvas.

    ``pixels`` is a float32 array laid out as channels x height x width with
    values in [-1, 1].
    """

    pixels: np.ndarray
    text: str

    def __post_init__(self) -> None:
        if self.pixels.ndim != 3 or self.pixels.shape[0] != 3:
            raise ValueError(f"ContentImage pixels must be 3xHxW, got {self.pixels.shape}")
        if self.width % 4:
            raise ValueError(f"ContentImage width must be a multiple of 4, got {self.width}")

    @property
    def height(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[2])

    def to_tensor(self) -> torch.Tensor:
        """Return the pixels as a 1x3xHxW tensor."""
        return torch.from_numpy(np.ascontiguousarray(self.pixels)).unsqueeze(0)


@dataclass(frozen=True)
class StyleSample:
    """A cropped scene-text image with its transcription and domain id.

    ``image`` holds uint8 RGB pixels as height x width x 3.
    """

    image: np.ndarray
    text: str
    domain: int

    @property
    def width(self) -> int:
        return int(self.image.shape[1])

    @property
    def height(self) -> int:
        return int(self.image.shape[0])


@dataclass(frozen=True)
class GeneratedImage:
    """Generator output for one (style image, text) pair."""

    pixels: np.ndarray
    text: str

    @property
    def height(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[2])
