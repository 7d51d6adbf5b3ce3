"""Training objectives.

Every function returns a 0-dim tensor so the result can be backpropagated.
"""

import logging
import math
from collections.abc import Callable, Mapping

import torch
import torch.nn.functional as F

from ..exceptions import FrozenModuleError, NonFiniteLoss, ShapeMismatch
from ..models.config import LossWeights
from ..networks.generator import ContentFeatures
from ..networks.typeface import TypefaceClassifier

logger = logging.getLogger(__name__)

Scalar = torch.Tensor | float


def _same_shape(a: torch.Tensor, b: torch.Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeMismatch(f"{what}: shapes differ, {tuple(a.shape)} vs {tuple(b.shape)}")


def hinge_d_loss(real_scores: torch.Tensor, fake_scores: torch.Tensor) -> torch.Tensor:
    """Discriminator hinge loss: mean relu(1 - real) + mean relu(1 + fake)."""
    return F.relu(1.0 - real_scores).mean() + F.relu(1.0 + fake_scores).mean()


def hinge_g_loss(fake_scores: torch.Tensor) -> torch.Tensor:
    return -fake_scores.mean()


def r1_penalty(
    discriminator: Callable[[torch.Tensor, torch.Tensor | int], torch.Tensor],
    real_images: torch.Tensor,
    domains: torch.Tensor | int,
    gamma: float = 10.0,
    real_scores: torch.Tensor | None = None,
) -> torch.Tensor:
    """(gamma / 2) times the batch mean of the squared input-gradient norm of D at real data.

    Pass ``real_scores`` to reuse a forward pass computed on ``real_images``
    (which must then already require grad).
    """
    if real_scores is None:
        if not real_images.requires_grad:
            real_images = real_images.detach().requires_grad_(True)
        real_scores = discriminator(real_images, domains)
    if not real_scores.requires_grad:
        return real_images.new_zeros(())

    (grad,) = torch.autograd.grad(
        real_scores.sum(), real_images, create_graph=True, allow_unused=True
    )
    if grad is None:
        return real_images.new_zeros(())
    return 0.5 * gamma * grad.pow(2).flatten(1).sum(dim=1).mean()


def content_consistency_loss(z_c: torch.Tensor, recoded: torch.Tensor) -> torch.Tensor:
    """Mean absolute difference between a content encoding and the re-encoded output."""
    _same_shape(z_c, recoded, "content_consistency_loss")
    return (z_c - recoded).abs().mean()


def content_consistency_levels(
    content: ContentFeatures, recoded: ContentFeatures, levels: str = "top"
) -> torch.Tensor:
    """Content consistency on the top features, or averaged over all encoder levels."""
    if levels == "top":
        return content_consistency_loss(content.top, recoded.top)
    if levels == "all":
        terms = [
            content_consistency_loss(a, b)
            for a, b in zip(content.levels(), recoded.levels(), strict=True)
        ]
        return torch.stack(terms).mean()
    raise ValueError(f"Unknown content loss levels: {levels}")


def reconstruction_loss(generated: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    _same_shape(generated, target, "reconstruction_loss")
    return (generated - target).abs().mean()


def gram_matrix(feature_map: torch.Tensor) -> torch.Tensor:
    """Channel Gram matrix normalized by c*h*w; accepts (c,h,w) or (n,c,h,w)."""
    if feature_map.dim() == 3:
        return gram_matrix(feature_map.unsqueeze(0)).squeeze(0)
    if feature_map.dim() != 4:
        raise ShapeMismatch(f"gram_matrix expects 3-D or 4-D input, got {tuple(feature_map.shape)}")
    n, c, h, w = feature_map.shape
    flat = feature_map.reshape(n, c, h * w)
    return torch.bmm(flat, flat.transpose(1, 2)) / (c * h * w)


def style_alignment_loss(
    style_images: torch.Tensor,
    generated: torch.Tensor,
    classifier: TypefaceClassifier,
    weights: LossWeights | None = None,
) -> torch.Tensor:
    """Perceptual, texture and embedding distances under the frozen typeface classifier."""
    weights = weights or LossWeights()
    if not classifier.frozen:
        raise FrozenModuleError("Style alignment requires a frozen typeface classifier")
    if style_images.shape != generated.shape:
        raise ShapeMismatch(
            f"Style and generated images must share a shape, "
            f"got {tuple(style_images.shape)} and {tuple(generated.shape)}"
        )

    target = classifier.extract_features(style_images)
    output = classifier.extract_features(generated)

    perceptual = generated.new_zeros(())
    texture = generated.new_zeros(())
    for phi_s, phi_o in zip(target.layer_maps, output.layer_maps, strict=True):
        # mean over the batch of |diff| summed and divided by M_i = c*h*w
        perceptual = perceptual + (phi_s - phi_o).abs().mean()
        texture = texture + (gram_matrix(phi_s) - gram_matrix(phi_o)).abs().mean()
    embedding = (target.embedding - output.embedding).abs().mean()

    return weights.lambda1 * perceptual + weights.lambda2 * texture + weights.lambda3 * embedding


def total_generator_loss(parts: Mapping[str, Scalar], weights: LossWeights) -> Scalar:
    """adv_g + lambda_img*img + lambda_cnt*cnt + lambda_sty1*sty1 + lambda_sty2*sty2."""
    return (
        parts.get("adv_g", 0.0)
        + weights.lambda_img * parts.get("img", 0.0)
        + weights.lambda_cnt * parts.get("cnt", 0.0)
        + weights.lambda_sty1 * parts.get("sty1", 0.0)
        + weights.lambda_sty2 * parts.get("sty2", 0.0)
    )


def check_finite(term: str, value: Scalar) -> float:
    """Return ``value`` as a float, raising NonFiniteLoss if it is NaN or infinite."""
    number = float(value.detach()) if isinstance(value, torch.Tensor) else float(value)
    if not math.isfinite(number):
        logger.error(f"Loss term '{term}' became {number}")
        raise NonFiniteLoss(term, number)
    return number
