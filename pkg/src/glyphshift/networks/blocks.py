"""Normalization and convolution blocks shared by the generator."""

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from ..exceptions import ShapeMismatch


def adain(
    features: torch.Tensor, gamma: torch.Tensor, beta: torch.Tensor, eps: float = 1e-5
) -> torch.Tensor:
    """Adaptive instance normalization.

    Normalizes every channel of ``features`` (N,C,H,W) over its spatial
    positions, then scales by ``gamma`` and shifts by ``beta``. Both are
    either (C,) or (N,C). Statistics use the biased variance, and epsilon
    sits inside the square root, so a constant channel maps to ``beta``.
    """
    if features.dim() != 4:
        raise ShapeMismatch(f"adain expects N x C x H x W features, got {tuple(features.shape)}")
    n, c = features.shape[:2]
    gamma = _per_sample(gamma, n, c, "gamma")
    beta = _per_sample(beta, n, c, "beta")

    mean = features.mean(dim=(2, 3), keepdim=True)
    var = features.var(dim=(2, 3), keepdim=True, unbiased=False)
    normalized = (features - mean) / torch.sqrt(var + eps)
    return gamma.view(n, c, 1, 1) * normalized + beta.view(n, c, 1, 1)


def _per_sample(param: torch.Tensor, n: int, c: int, name: str) -> torch.Tensor:
    if param.dim() == 1:
        param = param.unsqueeze(0).expand(n, -1)
    if param.dim() != 2 or param.shape[1] != c or param.shape[0] not in (1, n):
        raise ShapeMismatch(f"{name} must have {c} channels, got shape {tuple(param.shape)}")
    return param.expand(n, c)


@dataclass
class AdaINParams:
    """One (gamma, beta) pair per AdaIN layer of the decoder, decoder order."""

    pairs: list[tuple[torch.Tensor, torch.Tensor]]

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, index: int) -> tuple[torch.Tensor, torch.Tensor]:
        return self.pairs[index]

    @property
    def channels(self) -> list[int]:
        return [gamma.shape[-1] for gamma, _ in self.pairs]

    def is_finite(self) -> bool:
        return all(
            bool(torch.isfinite(gamma).all() and torch.isfinite(beta).all())
            for gamma, beta in self.pairs
        )


class ResBlock(nn.Module):
    """Two 3x3 convolutions with instance normalization and an identity skip."""

    def __init__(self, channels: int, eps: float = 1e-5):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.norm1 = nn.InstanceNorm2d(channels, eps=eps, affine=True)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)
        self.norm2 = nn.InstanceNorm2d(channels, eps=eps, affine=True)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = F.relu(self.norm1(self.conv1(x)))
        out = self.norm2(self.conv2(out))
        return x + out


class AdaINResBlock(nn.Module):
    """Residual block whose first normalization is AdaIN, the second a plain IN."""

    def __init__(self, channels: int, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)
        self.norm2 = nn.InstanceNorm2d(channels, eps=eps, affine=True)

    def forward(self, x: torch.Tensor, gamma: torch.Tensor, beta: torch.Tensor) -> torch.Tensor:
        out = F.relu(adain(self.conv1(x), gamma, beta, self.eps))
        out = self.norm2(self.conv2(out))
        return x + out


class UpConv(nn.Module):
    """Nearest-neighbour x2 upsampling, 5x5 convolution, AdaIN, ReLU."""

    def __init__(self, in_channels: int, out_channels: int, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self.conv = nn.Conv2d(in_channels, out_channels, 5, padding=2)

    def forward(self, x: torch.Tensor, gamma: torch.Tensor, beta: torch.Tensor) -> torch.Tensor:
        out = self.conv(F.interpolate(x, scale_factor=2, mode="nearest"))
        return F.relu(adain(out, gamma, beta, self.eps))
