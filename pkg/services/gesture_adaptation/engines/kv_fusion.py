"""
Kinematic-visual relation attention.

Per scale, the visual and kinematic relation features of a segment are
combined into a co-occurrence feature; a scale-specific fully connected map
brings each one to a common width and the scales are summed into F_kvr.
"""

import torch
from torch import nn

from services.gesture_adaptation.models.configs import FusionConfig, FusionMode


def kv_relation_scale(
    rv: torch.Tensor, rk: torch.Tensor, mode: FusionMode = FusionMode.ELEMENTWISE
) -> torch.Tensor:
    """
    Co-occurrence of visual and kinematic relation features at one scale.

    ``elementwise`` returns rv ⊙ rk. ``scalar-attention`` scales the
    concatenation [rv; rk] by the mean componentwise product ⟨rv, rk⟩ / dim.
    Leading batch dimensions are preserved.
    """
    if rv.shape != rk.shape:
        raise ValueError(
            f"relation features differ in shape: visual {tuple(rv.shape)} "
            f"vs kinematic {tuple(rk.shape)}"
        )
    if mode is FusionMode.ELEMENTWISE:
        return rv * rk
    attention = (rv * rk).sum(dim=-1, keepdim=True) / rv.shape[-1]
    return attention * torch.cat([rv, rk], dim=-1)


def fused_width(hidden_dim: int, mode: FusionMode) -> int:
    """Width of the per-scale co-occurrence feature."""
    return hidden_dim if mode is FusionMode.ELEMENTWISE else 2 * hidden_dim


class MultiScaleFusion(nn.Module):
    """Per-scale projections q^s followed by a sum over active scales."""

    def __init__(self, scales: list[int], hidden_dim: int, config: FusionConfig) -> None:
        super().__init__()
        self.config = config
        width = fused_width(hidden_dim, config.mode)
        self.projections = nn.ModuleDict(
            {str(scale): nn.Linear(width, config.common_dim) for scale in scales}
        )

    def forward(
        self, per_scale: dict[int, torch.Tensor], masks: dict[int, torch.Tensor] | None = None
    ) -> torch.Tensor:
        """
        Args:
            per_scale: scale -> (B, width) or (width,) co-occurrence features
            masks: scale -> (B,) bool; segments masked out skip that scale

        Returns:
            F_kvr of shape (B, common_dim) or (common_dim,)
        """
        if not per_scale:
            raise ValueError("at least one scale is required")
        total = None
        for scale, feature in sorted(per_scale.items()):
            key = str(scale)
            if key not in self.projections:
                known = sorted(int(k) for k in self.projections)
                raise ValueError(f"no projection for scale {scale}; have {known}")
            projected = self.projections[key](feature)
            if masks is not None:
                projected = projected * masks[scale].to(projected.dtype).unsqueeze(-1)
            total = projected if total is None else total + projected
        return total


def multi_scale_fuse(per_scale_features: dict[int, torch.Tensor], fusion: MultiScaleFusion) -> torch.Tensor:
    """F_kvr = Σ_s q^s(F_kvr^s) over the scales present."""
    return fusion(per_scale_features)
