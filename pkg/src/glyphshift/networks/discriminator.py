"""Domain-conditioned patch discriminator."""

import torch
from torch import nn

from ..exceptions import InvalidDomain
from .generator import check_image

DISCRIMINATOR_CHANNELS = (64, 128, 256, 512, 512)


class Discriminator(nn.Module):
    """Five stride-2 convolution stages shared by all domains, one 1x1 head per domain.

    The score of an image is the mean patch score of the head its domain selects.
    """

    def __init__(self, num_domains: int = 2, negative_slope: float = 0.2):
        super().__init__()
        if num_domains < 1:
            raise ValueError(f"num_domains must be >= 1, got {num_domains}")
        self.num_domains = num_domains
        layers: list[nn.Module] = []
        in_channels = 3
        for out_channels in DISCRIMINATOR_CHANNELS:
            layers += [
                nn.Conv2d(in_channels, out_channels, 4, stride=2, padding=1),
                nn.LeakyReLU(negative_slope),
            ]
            in_channels = out_channels
        self.features = nn.Sequential(*layers)
        self.heads = nn.ModuleList(nn.Conv2d(in_channels, 1, 1) for _ in range(num_domains))

    def check_domains(self, domains: torch.Tensor) -> None:
        if domains.numel() and (int(domains.min()) < 0 or int(domains.max()) >= self.num_domains):
            raise InvalidDomain(
                f"Domain labels must lie in [0, {self.num_domains}), got {domains.tolist()}"
            )

    def forward(self, images: torch.Tensor, domains: torch.Tensor | int) -> torch.Tensor:
        """Scores of shape (N,) for images (N,3,64,W) and domain labels (N,) or a single int."""
        check_image(images, "discriminator input")
        n = images.shape[0]
        if isinstance(domains, int):
            domains = torch.full((n,), domains, dtype=torch.long, device=images.device)
        domains = domains.to(device=images.device, dtype=torch.long).reshape(-1)
        if domains.shape[0] != n:
            raise InvalidDomain(f"Expected {n} domain labels, got {domains.shape[0]}")
        self.check_domains(domains)

        features = self.features(images)
        scores = torch.cat([head(features).mean(dim=(2, 3)) for head in self.heads], dim=1)
        return scores.gather(1, domains.unsqueeze(1)).squeeze(1)

    def discriminate(self, images: torch.Tensor, domains: torch.Tensor | int) -> torch.Tensor:
        return self(images, domains)
