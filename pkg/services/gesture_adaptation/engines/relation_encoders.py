"""
Multi-scale temporal-relation encoders.

At scale s a segment is summarized by sampling ordered s-frame subsets,
running each through a bidirectional LSTM shared by every scale of one
modality, and averaging the projected final states. One encoder instance
serves the kinematic modality (N) and one the visual modality (M).
"""

import itertools
import math
from enum import Enum

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict
from torch import nn

from services.gesture_adaptation.models.configs import EncoderConfig

IndexSubset = tuple[int, ...]
# scale -> [(segment position in batch, ordered frame subset)]
ScalePlan = dict[int, list[tuple[int, IndexSubset]]]


class SamplingMode(str, Enum):
    """Subset placement policy."""

    TRAIN = "train"
    EVAL = "eval"


class Modality(str, Enum):
    """Input modality of an encoder."""

    KINEMATIC = "kinematic"
    VISUAL = "visual"


class RelationFeature(BaseModel):
    """Relation embedding of one segment at one scale."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    vector: torch.Tensor
    scale: int
    modality: Modality


def _eval_subsets(length: int, scale: int, k: int) -> list[IndexSubset]:
    # Chunk the sequence into `scale` equal spans and pick the same relative
    # offset inside every span; offsets differ per subset.
    width = length / scale
    subsets = []
    for j in range(k):
        fraction = (j + 1) / (k + 1)
        subsets.append(tuple(int(math.floor(i * width + width * fraction)) for i in range(scale)))
    return list(dict.fromkeys(subsets))


def _train_subsets(length: int, scale: int, k: int, rng: np.random.Generator) -> list[IndexSubset]:
    if math.comb(length, scale) <= k:
        return list(itertools.combinations(range(length), scale))
    subsets: list[IndexSubset] = []
    while len(subsets) < k:
        subset = tuple(int(i) for i in np.sort(rng.choice(length, size=scale, replace=False)))
        if subset not in subsets:
            subsets.append(subset)
    return subsets


def sample_scale_indices(
    length: int, scale: int, mode: SamplingMode = SamplingMode.EVAL, seed: int = 0, k: int = 3
) -> list[IndexSubset]:
    """
    Ordered frame subsets of size ``scale`` from a sequence of ``length`` frames.

    Args:
        length: Number of frames T
        scale: Subset size s
        mode: ``train`` draws uniform random subsets under ``seed``;
            ``eval`` places them evenly and ignores the seed
        seed: Random seed for train mode
        k: Requested subsets; fewer come back when fewer distinct ones exist

    Returns:
        Strictly increasing index tuples
    """
    if scale < 2:
        raise ValueError(f"scale must be at least 2, got {scale}")
    if scale > length:
        raise ValueError(f"scale {scale} exceeds sequence length {length}")
    if mode is SamplingMode.EVAL:
        return _eval_subsets(length, scale, k)
    return _train_subsets(length, scale, k, np.random.default_rng(seed))


def active_scales(length: int, max_scale: int) -> list[int]:
    """Scales 2..min(S, T) usable for a sequence of ``length`` frames."""
    return list(range(2, min(max_scale, length) + 1))


def init_parameters(module: nn.Module, seed: int) -> None:
    """Seeded uniform initialization in ±1/sqrt(fan_in) for every LSTM and Linear."""
    generator = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for submodule in module.modules():
            if isinstance(submodule, nn.LSTM):
                for name, parameter in submodule.named_parameters():
                    fan_in = submodule.input_size if name.startswith("weight_ih") else submodule.hidden_size
                    bound = 1.0 / math.sqrt(fan_in)
                    parameter.uniform_(-bound, bound, generator=generator)
            elif isinstance(submodule, nn.Linear):
                bound = 1.0 / math.sqrt(submodule.in_features)
                submodule.weight.uniform_(-bound, bound, generator=generator)
                if submodule.bias is not None:
                    submodule.bias.uniform_(-bound, bound, generator=generator)


class RelationEncoder(nn.Module):
    """Bidirectional LSTM over a frame subset, final states projected to ``hidden_dim``."""

    def __init__(self, input_dim: int, hidden_dim: int) -> None:
        super().__init__()
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.lstm = nn.LSTM(input_dim, hidden_dim, batch_first=True, bidirectional=True)
        self.projection = nn.Linear(2 * hidden_dim, hidden_dim)

    def forward(self, sequences: torch.Tensor) -> torch.Tensor:
        """
        Encode a batch of equal-length sub-sequences.

        Args:
            sequences: (B, s, input_dim)

        Returns:
            (B, hidden_dim)
        """
        if sequences.shape[-1] != self.input_dim:
            raise ValueError(f"encoder expects feature width {self.input_dim}, got {sequences.shape[-1]}")
        _, (h_n, _) = self.lstm(sequences)
        return self.projection(torch.cat([h_n[0], h_n[1]], dim=-1))


def encode_relation(
    frames: torch.Tensor,
    indices: list[IndexSubset],
    encoder: RelationEncoder,
    modality: Modality = Modality.KINEMATIC,
) -> RelationFeature:
    """Average the encodings of one segment's subsets at a single scale."""
    if frames.shape[-1] != encoder.input_dim:
        raise ValueError(
            f"{modality.value} frames have width {frames.shape[-1]}, "
            f"encoder expects {encoder.input_dim}"
        )
    scales = {len(subset) for subset in indices}
    if len(scales) != 1:
        raise ValueError(f"subsets must share one scale, got sizes {sorted(scales)}")
    gathered = torch.stack([frames[list(subset)] for subset in indices])
    return RelationFeature(vector=encoder(gathered).mean(dim=0), scale=scales.pop(), modality=modality)


def encode_all_scales(
    frames: torch.Tensor,
    config: EncoderConfig,
    encoder: RelationEncoder,
    modality: Modality = Modality.KINEMATIC,
    mode: SamplingMode = SamplingMode.EVAL,
    seed: int = 0,
) -> dict[int, RelationFeature]:
    """Relation features of one segment for scales 2..min(S, T)."""
    length = frames.shape[0]
    features = {}
    for scale in active_scales(length, config.max_scale):
        subset_seed = int(np.random.SeedSequence([seed, scale]).generate_state(1)[0])
        indices = sample_scale_indices(length, scale, mode, subset_seed, config.subsets_per_scale)
        features[scale] = encode_relation(frames, indices, encoder, modality)
    return features


def plan_batch(
    lengths: list[int], config: EncoderConfig, mode: SamplingMode = SamplingMode.EVAL, seed: int = 0
) -> ScalePlan:
    """
    Subset plan for a batch of sequences.

    Both modalities of a segment are encoded with the same plan so kinematic
    and visual relations describe the same frames.
    """
    plan: ScalePlan = {scale: [] for scale in config.scales}
    for position, length in enumerate(lengths):
        for scale in active_scales(length, config.max_scale):
            subset_seed = int(np.random.SeedSequence([seed, position, scale]).generate_state(1)[0])
            for subset in sample_scale_indices(length, scale, mode, subset_seed, config.subsets_per_scale):
                plan[scale].append((position, subset))
    return {scale: entries for scale, entries in plan.items() if entries}


def encode_planned(
    sequences: list[torch.Tensor], plan: ScalePlan, encoder: RelationEncoder
) -> tuple[dict[int, torch.Tensor], dict[int, torch.Tensor]]:
    """
    Run one encoder call per scale over every planned subset of a batch.

    Returns:
        (features, masks): per scale a (B, hidden) tensor of subset-averaged
        features and a (B,) bool mask of segments long enough for that scale
    """
    batch = len(sequences)
    reference = sequences[0]
    features: dict[int, torch.Tensor] = {}
    masks: dict[int, torch.Tensor] = {}
    for scale, entries in plan.items():
        owners = torch.tensor([position for position, _ in entries], dtype=torch.long)
        gathered = torch.stack([sequences[position][list(subset)] for position, subset in entries])
        encoded = encoder(gathered)
        summed = torch.zeros(batch, encoded.shape[-1], dtype=encoded.dtype).index_add(0, owners, encoded)
        counts = torch.bincount(owners, minlength=batch).to(reference.dtype)
        features[scale] = summed / counts.clamp_min(1.0).unsqueeze(1)
        masks[scale] = counts > 0
    return features, masks
