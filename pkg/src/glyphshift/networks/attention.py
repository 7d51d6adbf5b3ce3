"""Integrated attention primitives.

Reference implementations in plain tensor operations, differentiable end to end
through autograd. Feature maps are laid out as N x C x H x W; sampling
coordinates are (y, x) pairs in feature-map pixels. Everything outside a map
reads as zero.
"""

import logging

import torch
import torch.nn.functional as F
from torch import nn

from ..exceptions import InvalidPatchSize, ShapeMismatch
from ..models.config import AttentionConfig

logger = logging.getLogger(__name__)


def _pair(value: int | tuple[int, int]) -> tuple[int, int]:
    return (value, value) if isinstance(value, int) else (int(value[0]), int(value[1]))


def _check_same_spatial(a: torch.Tensor, b: torch.Tensor, what: str) -> None:
    if a.dim() != 4 or b.dim() != 4:
        raise ShapeMismatch(f"{what}: expected 4-D feature maps, got {tuple(a.shape)} and {tuple(b.shape)}")
    if a.shape[0] != b.shape[0] or a.shape[2:] != b.shape[2:]:
        raise ShapeMismatch(
            f"{what}: spatial layout differs, {tuple(a.shape)} vs {tuple(b.shape)}"
        )


def bilinear_sample(feature_map: torch.Tensor, coords: torch.Tensor) -> torch.Tensor:
    """Sample ``feature_map`` (N,C,H,W) at ``coords`` (N,Ho,Wo,2) -> (N,C,Ho,Wo)."""
    if feature_map.dim() != 4 or feature_map.numel() == 0:
        raise ShapeMismatch(f"Expected a non-empty N x C x H x W map, got {tuple(feature_map.shape)}")
    if coords.dim() != 4 or coords.shape[-1] != 2 or coords.shape[0] != feature_map.shape[0]:
        raise ShapeMismatch(
            f"Coordinates must be N x Ho x Wo x 2 with N={feature_map.shape[0]}, "
            f"got {tuple(coords.shape)}"
        )
    if not torch.isfinite(coords).all():
        raise ValueError("Sampling coordinates must be finite")

    n, c, h, w = feature_map.shape
    ho, wo = coords.shape[1], coords.shape[2]
    y, x = coords[..., 0], coords[..., 1]
    y0 = torch.floor(y).detach()
    x0 = torch.floor(x).detach()
    frac_y = y - y0
    frac_x = x - x0

    flat = feature_map.reshape(n, c, h * w)
    out = feature_map.new_zeros(n, c, ho * wo)
    for dy, weight_y in ((0, 1.0 - frac_y), (1, frac_y)):
        for dx, weight_x in ((0, 1.0 - frac_x), (1, frac_x)):
            yy = y0 + dy
            xx = x0 + dx
            inside = (yy >= 0) & (yy <= h - 1) & (xx >= 0) & (xx <= w - 1)
            index = yy.clamp(0, h - 1) * w + xx.clamp(0, w - 1)
            index = index.long().reshape(n, 1, ho * wo).expand(n, c, ho * wo)
            corner = torch.gather(flat, 2, index)
            weight = (weight_y * weight_x * inside.to(frac_y.dtype)).reshape(n, 1, ho * wo)
            out = out + corner * weight
    return out.reshape(n, c, ho, wo)


def deformable_conv(
    value: torch.Tensor,
    offsets: torch.Tensor,
    weight: torch.Tensor,
    bias: torch.Tensor | None = None,
    stride: int | tuple[int, int] = 1,
    padding: int | tuple[int, int] = 0,
    dilation: int | tuple[int, int] = 1,
) -> torch.Tensor:
    """Convolution whose taps are displaced by per-position learned offsets.

    ``offsets`` is N x 2K x Ho x Wo with (dy, dx) interleaved per kernel tap,
    taps in row-major kernel order.
    """
    if value.dim() != 4 or weight.dim() != 4:
        raise ShapeMismatch("deformable_conv expects 4-D value and weight tensors")
    n, c, h, w = value.shape
    c_out, c_in, kh, kw = weight.shape
    if c_in != c:
        raise ShapeMismatch(f"Kernel expects {c_in} input channels, value has {c}")
    (sh, sw), (ph, pw), (dh, dw) = _pair(stride), _pair(padding), _pair(dilation)
    ho = (h + 2 * ph - dh * (kh - 1) - 1) // sh + 1
    wo = (w + 2 * pw - dw * (kw - 1) - 1) // sw + 1
    taps = kh * kw
    if tuple(offsets.shape) != (n, 2 * taps, ho, wo):
        raise ShapeMismatch(
            f"Offsets must be {(n, 2 * taps, ho, wo)} for this kernel, got {tuple(offsets.shape)}"
        )

    dtype, device = value.dtype, value.device
    out_y = torch.arange(ho, dtype=dtype, device=device) * sh - ph
    out_x = torch.arange(wo, dtype=dtype, device=device) * sw - pw
    tap_y, tap_x = torch.meshgrid(
        torch.arange(kh, dtype=dtype, device=device) * dh,
        torch.arange(kw, dtype=dtype, device=device) * dw,
        indexing="ij",
    )
    base_y = out_y.view(1, 1, ho, 1) + tap_y.reshape(1, taps, 1, 1)
    base_x = out_x.view(1, 1, 1, wo) + tap_x.reshape(1, taps, 1, 1)

    displacement = offsets.view(n, taps, 2, ho, wo)
    pos_y = base_y + displacement[:, :, 0]
    pos_x = base_x + displacement[:, :, 1]
    coords = torch.stack((pos_y, pos_x), dim=-1).reshape(n, taps * ho, wo, 2)

    sampled = bilinear_sample(value, coords).reshape(n, c, taps, ho, wo)
    out = torch.einsum("nckhw,ock->nohw", sampled, weight.reshape(c_out, c, taps))
    if bias is not None:
        out = out + bias.view(1, -1, 1, 1)
    return out


class OffsetPredictor(nn.Module):
    """Regular convolution mapping concat(query, key) to a 2K-channel offset field.

    Weights start at zero so a fresh predictor yields the regular sampling grid.
    """

    def __init__(
        self,
        query_channels: int,
        key_channels: int,
        kernel_positions: int,
        kernel_size: int = 3,
        stride: int = 1,
        padding: int = 1,
    ):
        super().__init__()
        self.kernel_positions = kernel_positions
        self.conv = nn.Conv2d(
            query_channels + key_channels,
            2 * kernel_positions,
            kernel_size,
            stride=stride,
            padding=padding,
        )
        self.reset_parameters()

    def reset_parameters(self) -> None:
        nn.init.zeros_(self.conv.weight)
        nn.init.zeros_(self.conv.bias)

    def forward(self, query: torch.Tensor, key: torch.Tensor | None = None) -> torch.Tensor:
        if key is None:
            return self.conv(query)
        _check_same_spatial(query, key, "predict_offsets")
        return self.conv(torch.cat((query, key), dim=1))


def predict_offsets(
    predictor: OffsetPredictor, query: torch.Tensor, key: torch.Tensor
) -> torch.Tensor:
    """Offset field for ``query`` guided by ``key``."""
    return predictor(query, key)


class DeformConv2d(nn.Module):
    """Deformable convolution predicting its offsets from its own input."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        stride: int = 1,
        padding: int = 0,
    ):
        super().__init__()
        self.stride = stride
        self.padding = padding
        self.conv = nn.Conv2d(in_channels, out_channels, kernel_size, stride, padding)
        self.offset = OffsetPredictor(
            in_channels, 0, kernel_size * kernel_size, kernel_size, stride, padding
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        offsets = self.offset(x)
        return deformable_conv(
            x, offsets, self.conv.weight, self.conv.bias, self.stride, self.padding
        )


class GlobalAttentionStage(nn.Module):
    """One offset-guided deformation of ``query`` toward ``key``."""

    def __init__(self, query_channels: int, key_channels: int, out_channels: int, kernel_size: int = 3):
        super().__init__()
        self.padding = kernel_size // 2
        self.offsets = OffsetPredictor(
            query_channels, key_channels, kernel_size * kernel_size, kernel_size, 1, self.padding
        )
        self.conv = nn.Conv2d(query_channels, out_channels, kernel_size, padding=self.padding)

    def forward(self, query: torch.Tensor, key: torch.Tensor) -> torch.Tensor:
        offsets = self.offsets(query, key)
        return deformable_conv(
            query, offsets, self.conv.weight, self.conv.bias, padding=self.padding
        )


class GlobalAttentionBlock(nn.Module):
    """Densely connected sequence of global attention stages.

    Stage t deforms the concatenation of the content feature and every
    earlier stage output; the last stage output is returned.
    """

    def __init__(self, channels: int, key_channels: int, depth: int = 3, kernel_size: int = 3):
        super().__init__()
        if depth < 1:
            raise ValueError(f"dense_depth must be >= 1, got {depth}")
        self.channels = channels
        self.stages = nn.ModuleList(
            GlobalAttentionStage(channels * (t + 1), key_channels, channels, kernel_size)
            for t in range(depth)
        )

    @property
    def depth(self) -> int:
        return len(self.stages)

    def forward(self, f_cnt: torch.Tensor, f_dec: torch.Tensor) -> torch.Tensor:
        _check_same_spatial(f_cnt, f_dec, "global_attention_block")
        features = [f_cnt]
        out = f_cnt
        for stage in self.stages:
            query = features[0] if len(features) == 1 else torch.cat(features, dim=1)
            out = stage(query, f_dec)
            features.append(out)
        return out


def local_attention(
    query: torch.Tensor,
    key: torch.Tensor,
    patch_size: int,
    fcn: nn.Module,
    normalize: bool = False,
    return_weights: bool = False,
) -> torch.Tensor | tuple[torch.Tensor, torch.Tensor]:
    """Patch-wise attention: an FCN turns (key patch, query vector) into s x s x c weights.

    The output at (i, j) is the weighted key patch summed over the window.
    With ``return_weights`` the weights are also returned as N x H x W x s x s x c.
    """
    _check_same_spatial(query, key, "local_attention")
    n, c, h, w = key.shape
    s = patch_size
    if s % 2 == 0 or s > 2 * min(h, w) - 1:
        raise InvalidPatchSize(
            f"Patch size must be odd and at most {2 * min(h, w) - 1} for a {h}x{w} map, got {s}"
        )

    positions = h * w
    patches = F.unfold(key, kernel_size=s, padding=s // 2)  # N x (c*s*s) x L
    features = torch.cat((patches, query.reshape(n, query.shape[1], positions)), dim=1)
    weights = fcn(features.transpose(1, 2)).transpose(1, 2).reshape(n, c, s * s, positions)
    if normalize:
        weights = torch.softmax(weights, dim=2)

    out = (weights * patches.reshape(n, c, s * s, positions)).sum(dim=2).reshape(n, c, h, w)
    if return_weights:
        return out, weights.reshape(n, c, s, s, h, w).permute(0, 4, 5, 2, 3, 1)
    return out


class LocalAttention(nn.Module):
    """Local attention with a two-layer FCN (linear, leaky ReLU, linear)."""

    def __init__(
        self,
        key_channels: int,
        query_channels: int | None = None,
        patch_size: int = 3,
        hidden: int = 256,
        normalize: bool = False,
        negative_slope: float = 0.2,
    ):
        super().__init__()
        query_channels = key_channels if query_channels is None else query_channels
        self.patch_size = patch_size
        self.normalize = normalize
        window = patch_size * patch_size
        self.fcn = nn.Sequential(
            nn.Linear(key_channels * window + query_channels, hidden),
            nn.LeakyReLU(negative_slope),
            nn.Linear(hidden, key_channels * window),
        )

    def forward(self, query: torch.Tensor, key: torch.Tensor) -> torch.Tensor:
        return local_attention(query, key, self.patch_size, self.fcn, self.normalize)

    def attention_weights(self, query: torch.Tensor, key: torch.Tensor) -> torch.Tensor:
        """Weights as N x H x W x s x s x c."""
        _, weights = local_attention(
            query, key, self.patch_size, self.fcn, self.normalize, return_weights=True
        )
        return weights


class IntegratedAttention(nn.Module):
    """Global + local attention on high-level features, dense global attention on low-level ones.

    Either branch can be switched off; a disabled branch has no parameters.
    """

    def __init__(
        self,
        high_channels: int = 256,
        low_channels: int = 128,
        config: AttentionConfig | None = None,
        use_global_low: bool = True,
        use_local_high: bool = True,
    ):
        super().__init__()
        config = config or AttentionConfig()
        self.high_global = GlobalAttentionBlock(high_channels, high_channels, depth=1)
        self.high_local = (
            LocalAttention(
                high_channels,
                patch_size=config.patch_size,
                hidden=config.local_hidden,
                normalize=config.local_normalize,
            )
            if use_local_high
            else None
        )
        self.low_global = (
            GlobalAttentionBlock(low_channels, low_channels, depth=config.dense_depth)
            if use_global_low
            else None
        )

    def attend_high(self, f_cnt_high: torch.Tensor, f_dec_high: torch.Tensor) -> torch.Tensor:
        deformed = self.high_global(f_cnt_high, f_dec_high)
        if self.high_local is None:
            return deformed
        # Deformed content queries the decoder feature's patches.
        return self.high_local(deformed, f_dec_high)

    def attend_low(self, f_cnt_low: torch.Tensor, f_dec_low: torch.Tensor) -> torch.Tensor | None:
        if self.low_global is None:
            return None
        return self.low_global(f_cnt_low, f_dec_low)

    def forward(
        self,
        f_cnt_low: torch.Tensor,
        f_cnt_high: torch.Tensor,
        f_dec_low: torch.Tensor,
        f_dec_high: torch.Tensor,
    ) -> tuple[torch.Tensor | None, torch.Tensor]:
        return self.attend_low(f_cnt_low, f_dec_low), self.attend_high(f_cnt_high, f_dec_high)
