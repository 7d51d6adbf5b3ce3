"""Style encoder, content encoder, mapping network and decoder."""

import logging
from dataclasses import dataclass

import torch
from torch import nn

from ..exceptions import ShapeError
from ..models.config import AblationFlags, GeneratorConfig
from .attention import DeformConv2d, IntegratedAttention
from .blocks import AdaINParams, AdaINResBlock, ResBlock, UpConv

logger = logging.getLogger(__name__)

IMAGE_HEIGHT = 64
STYLE_CHANNELS = (64, 128, 256, 256, 512, 512, 512, 512)
# Max pooling follows these convolutions (1-based), halving the height five times.
STYLE_POOL_AFTER = frozenset({1, 2, 4, 6, 8})
ADAIN_CHANNELS = (256, 256, 128, 64)


def check_image(images: torch.Tensor, what: str = "image") -> None:
    """Raise ShapeError unless ``images`` is N x 3 x 64 x W with W a multiple of 4."""
    if images.dim() != 4:
        raise ShapeError(f"{what}: expected N x 3 x {IMAGE_HEIGHT} x W, got {tuple(images.shape)}")
    _, channels, height, width = images.shape
    if channels != 3:
        raise ShapeError(f"{what}: expected 3 channels, got {channels}")
    if height != IMAGE_HEIGHT:
        raise ShapeError(f"{what}: expected height {IMAGE_HEIGHT}, got {height}")
    if width < 4 or width % 4:
        raise ShapeError(f"{what}: width must be a positive multiple of 4, got {width}")


@dataclass
class ContentFeatures:
    """Content encoder activations at three depths."""

    low: torch.Tensor
    high: torch.Tensor
    top: torch.Tensor

    def levels(self) -> list[torch.Tensor]:
        return [self.low, self.high, self.top]


class StyleEncoder(nn.Module):
    """Eight 3x3 conv-BN-ReLU layers, five height-only max pools, global average pooling, FC.

    Convolutions pad circularly and pooling never mixes columns, so the feature
    map of a horizontally tiled image is the tiled feature map and both average
    to the same style vector at every width.
    """

    def __init__(self, style_dim: int = 128):
        super().__init__()
        layers: list[nn.Module] = []
        in_channels = 3
        for index, out_channels in enumerate(STYLE_CHANNELS, start=1):
            layers += [
                nn.Conv2d(in_channels, out_channels, 3, padding=1, padding_mode="circular"),
                nn.BatchNorm2d(out_channels),
                nn.ReLU(inplace=True),
            ]
            if index in STYLE_POOL_AFTER:
                layers.append(nn.MaxPool2d((2, 1)))
            in_channels = out_channels
        self.features = nn.Sequential(*layers)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.fc = nn.Linear(in_channels, style_dim)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        pooled = self.pool(self.features(images)).flatten(1)
        return self.fc(pooled)


class ContentEncoder(nn.Module):
    """Deformable convolutions down to 1/4 resolution, then two residual blocks."""

    def __init__(self, eps: float = 1e-5):
        super().__init__()
        self.stem = DeformConv2d(3, 64, 7, padding=3)
        self.stem_norm = nn.InstanceNorm2d(64, eps=eps, affine=True)
        self.down1 = DeformConv2d(64, 128, 4, stride=2, padding=1)
        self.down1_norm = nn.InstanceNorm2d(128, eps=eps, affine=True)
        self.down2 = DeformConv2d(128, 256, 4, stride=2, padding=1)
        self.down2_norm = nn.InstanceNorm2d(256, eps=eps, affine=True)
        self.res = nn.Sequential(ResBlock(256, eps), ResBlock(256, eps))
        self.act = nn.ReLU()

    def forward(self, images: torch.Tensor) -> ContentFeatures:
        x = self.act(self.stem_norm(self.stem(images)))
        low = self.act(self.down1_norm(self.down1(x)))
        high = self.act(self.down2_norm(self.down2(low)))
        return ContentFeatures(low=low, high=high, top=self.res(high))


class MappingNetwork(nn.Module):
    """Two fully connected layers, then one (gamma, beta) head per AdaIN layer.

    Heads emit ``gamma - 1`` so small initial weights start near identity.
    """

    def __init__(
        self,
        style_dim: int = 128,
        hidden: int = 256,
        channels: tuple[int, ...] = ADAIN_CHANNELS,
    ):
        super().__init__()
        self.channels = channels
        self.shared = nn.Sequential(
            nn.Linear(style_dim, hidden),
            nn.ReLU(),
            nn.Linear(hidden, hidden),
            nn.ReLU(),
        )
        self.heads = nn.ModuleList(nn.Linear(hidden, 2 * c) for c in channels)

    def forward(self, style: torch.Tensor) -> AdaINParams:
        if style.dim() == 1:
            style = style.unsqueeze(0)
        hidden = self.shared(style)
        pairs = []
        for head, c in zip(self.heads, self.channels, strict=True):
            out = head(hidden)
            pairs.append((1.0 + out[:, :c], out[:, c:]))
        return AdaINParams(pairs)


class Decoder(nn.Module):
    """AdaIN residual blocks and upsampling with integrated attention.

    The high-level attention output joins the decoder before the first
    upsampling, the low-level one before the last.
    """

    def __init__(self, config: GeneratorConfig, ablation: AblationFlags):
        super().__init__()
        eps = config.norm_eps
        self.res1 = AdaINResBlock(256, eps)
        self.res2 = AdaINResBlock(256, eps)
        self.attention = IntegratedAttention(
            256,
            128,
            config.attention,
            use_global_low=ablation.global_attention_low,
            use_local_high=ablation.local_attention_high,
        )
        self.up1 = UpConv(512, 128, eps)
        low_in = 256 if ablation.global_attention_low else 128
        self.up2 = UpConv(low_in, 64, eps)
        self.out = nn.Conv2d(64, 3, 7, padding=3)

    def forward(self, content: ContentFeatures, params: AdaINParams) -> torch.Tensor:
        x = self.res1(content.top, *params[0])
        f_dec_high = self.res2(x, *params[1])
        attended_high = self.attention.attend_high(content.high, f_dec_high)
        x = self.up1(torch.cat((f_dec_high, attended_high), dim=1), *params[2])

        attended_low = self.attention.attend_low(content.low, x)
        if attended_low is not None:
            x = torch.cat((x, attended_low), dim=1)
        x = self.up2(x, *params[3])
        return torch.tanh(self.out(x))


class Generator(nn.Module):
    """Renders the text of a content image in the style of a style image."""

    def __init__(
        self,
        config: GeneratorConfig | None = None,
        ablation: AblationFlags | None = None,
    ):
        super().__init__()
        self.config = config or GeneratorConfig()
        self.ablation = ablation or AblationFlags()
        self.style_encoder = StyleEncoder(self.config.style_dim)
        self.content_encoder = ContentEncoder(self.config.norm_eps)
        self.mapping = MappingNetwork(self.config.style_dim, self.config.mapping_hidden)
        self.decoder = Decoder(self.config, self.ablation)

    def encode_style(self, style_images: torch.Tensor) -> torch.Tensor:
        check_image(style_images, "style image")
        return self.style_encoder(style_images)

    def map_style(self, style: torch.Tensor) -> AdaINParams:
        return self.mapping(style)

    def encode_content(self, content_images: torch.Tensor) -> ContentFeatures:
        check_image(content_images, "content image")
        return self.content_encoder(content_images)

    def decode(self, content: ContentFeatures, params: AdaINParams) -> torch.Tensor:
        return self.decoder(content, params)

    def forward(self, style_images: torch.Tensor, content_images: torch.Tensor) -> torch.Tensor:
        params = self.map_style(self.encode_style(style_images))
        return self.decode(self.encode_content(content_images), params)

    def generate(self, style_images: torch.Tensor, content_images: torch.Tensor) -> torch.Tensor:
        """Alias of the forward pass."""
        return self(style_images, content_images)
