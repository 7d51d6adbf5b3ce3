"""Training and evaluation report records."""

from dataclasses import asdict, dataclass
from typing import Any


@dataclass
class LossReport:
    """Scalar values of every loss term of one training step."""

    adv_d: float = 0.0
    adv_g: float = 0.0
    r1: float = 0.0
    cnt: float = 0.0
    img: float = 0.0
    sty1: float = 0.0
    sty2: float = 0.0
    total_g: float = 0.0
    total_d: float = 0.0
    step: int = 0

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class EvalReport:
    """Word accuracy and mean normalized edit distance over ``n`` pairs."""

    accuracy: float
    mean_norm_ed: float
    n: int

    def __post_init__(self) -> None:
        if self.n <= 0:
            raise ValueError("EvalReport requires at least one sample")
        for name in ("accuracy", "mean_norm_ed"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    def to_line(self) -> str:
        """Single line of key=value pairs."""
        return f"accuracy={self.accuracy:.6f} mean_norm_ed={self.mean_norm_ed:.6f} n={self.n}"
