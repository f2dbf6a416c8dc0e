"""
Gradient reversal, discriminator/classifier heads and loss terms.

The reversal layer passes features through unchanged and flips (and scales)
the gradient on the way back, so encoders upstream of a domain discriminator
learn to confuse it while the discriminator learns to separate the domains.
"""

import math

import torch
import torch.nn.functional as F
from torch import nn

DEFAULT_GRL_COEFFICIENT = 0.5


class GradientReversalFunction(torch.autograd.Function):
    """Identity forward; gradient multiplied by ``-coefficient`` backward."""

    @staticmethod
    def forward(ctx, x: torch.Tensor, coefficient: float) -> torch.Tensor:  # type: ignore[override]
        ctx.coefficient = coefficient
        return x.view_as(x)

    @staticmethod
    def backward(ctx, grad_output: torch.Tensor) -> tuple[torch.Tensor, None]:  # type: ignore[override]
        return grad_output.neg() * ctx.coefficient, None


def grl_apply(x: torch.Tensor, coefficient: float = DEFAULT_GRL_COEFFICIENT) -> torch.Tensor:
    """Insert a gradient reversal point after ``x``."""
    return GradientReversalFunction.apply(x, coefficient)


def grl_backprop(grad: torch.Tensor, coefficient: float = DEFAULT_GRL_COEFFICIENT) -> torch.Tensor:
    """The gradient a reversal layer hands upstream for incoming ``grad``."""
    return -coefficient * grad


def dann_coefficient(base: float, progress: float) -> float:
    """Warm-up schedule β·(2 / (1 + exp(−10p)) − 1) for training progress p ∈ [0, 1]."""
    return base * (2.0 / (1.0 + math.exp(-10.0 * progress)) - 1.0)


class GradientReversal(nn.Module):
    """Module wrapper; ``coefficient`` may be updated between steps."""

    def __init__(self, coefficient: float = DEFAULT_GRL_COEFFICIENT) -> None:
        super().__init__()
        self.coefficient = coefficient

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return grl_apply(x, self.coefficient)

    def extra_repr(self) -> str:
        return f"coefficient={self.coefficient}"


class Head(nn.Sequential):
    """Affine → tanh → affine scoring head."""

    def __init__(self, in_features: int, hidden: int, out_features: int) -> None:
        super().__init__(
            nn.Linear(in_features, hidden),
            nn.Tanh(),
            nn.Linear(hidden, out_features),
        )
        self.out_features = out_features


class DomainDiscriminator(Head):
    """Two-way simulator/real scorer."""

    def __init__(self, in_features: int, hidden: int = 128) -> None:
        super().__init__(in_features, hidden, 2)


class GestureClassifier(Head):
    """Gesture class scorer."""

    def __init__(self, in_features: int, hidden: int = 128, num_classes: int = 7) -> None:
        super().__init__(in_features, hidden, num_classes)


def domain_bce(logits: torch.Tensor, domain_labels: torch.Tensor) -> torch.Tensor:
    """
    Mean binary cross-entropy of two-way domain scores.

    The two scores are softmax-normalized, so this equals
    −[y·log p(real) + (1−y)·log p(sim)] averaged over the batch.
    """
    return F.cross_entropy(logits, domain_labels.long())


def mixture_probabilities(
    primary_logits: torch.Tensor, secondary_logits: torch.Tensor | None, lambda_mix: float
) -> torch.Tensor:
    """p^c = λ·softmax(primary) + (1−λ)·softmax(secondary); softmax(primary) alone without a secondary head."""
    primary = torch.softmax(primary_logits, dim=-1)
    if secondary_logits is None:
        return primary
    return lambda_mix * primary + (1.0 - lambda_mix) * torch.softmax(secondary_logits, dim=-1)


def mixture_cross_entropy(
    primary_logits: torch.Tensor,
    secondary_logits: torch.Tensor | None,
    labels: torch.Tensor,
    lambda_mix: float,
) -> torch.Tensor:
    """Mean −log p^c[y] with the mixture formed in probability space."""
    probabilities = mixture_probabilities(primary_logits, secondary_logits, lambda_mix)
    picked = probabilities.gather(1, labels.long().unsqueeze(1)).squeeze(1)
    return -torch.log(picked.clamp_min(torch.finfo(picked.dtype).tiny)).mean()
