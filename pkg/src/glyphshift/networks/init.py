"""Weight initialization and parameter accounting."""

import logging

from torch import nn

from .attention import OffsetPredictor

logger = logging.getLogger(__name__)

LINEAR_STD = 0.01


def init_weights(module: nn.Module) -> nn.Module:
    """He fan-in normal convolutions and N(0, 0.01) linear layers, all biases zero.

    Offset predictors keep their zero initialization.
    """
    offset_convs = {
        id(sub.conv) for sub in module.modules() if isinstance(sub, OffsetPredictor)
    }
    for sub in module.modules():
        if id(sub) in offset_convs:
            continue
        if isinstance(sub, nn.Conv2d):
            nn.init.kaiming_normal_(sub.weight, mode="fan_in", nonlinearity="relu")
            if sub.bias is not None:
                nn.init.zeros_(sub.bias)
        elif isinstance(sub, nn.Linear):
            nn.init.normal_(sub.weight, mean=0.0, std=LINEAR_STD)
            if sub.bias is not None:
                nn.init.zeros_(sub.bias)
    return module


def count_parameters(module: nn.Module | None, trainable_only: bool = False) -> int:
    """Number of scalar parameters in ``module`` (0 for None)."""
    if module is None:
        return 0
    return sum(
        p.numel() for p in module.parameters() if p.requires_grad or not trainable_only
    )
