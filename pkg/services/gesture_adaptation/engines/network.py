"""
The two-modality gesture network.

Wires the kinematic encoder N, the optional visual encoder M, the per-scale
co-occurrence fusion and the four heads (KD, KC, KVD, KVC) together. The
reversal layer sits only on the discriminator branches; classifiers read
the features directly.
"""

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict
from torch import nn

from services.gesture_adaptation.engines.adversarial import (
    DomainDiscriminator,
    GestureClassifier,
    GradientReversal,
    mixture_probabilities,
)
from services.gesture_adaptation.engines.kv_fusion import MultiScaleFusion, kv_relation_scale
from services.gesture_adaptation.engines.mdok import segment_inputs
from services.gesture_adaptation.engines.relation_encoders import (
    RelationEncoder,
    SamplingMode,
    encode_planned,
    init_parameters,
    plan_batch,
)
from services.gesture_adaptation.models.configs import ModelConfig, Representation, VisualBranch
from services.gesture_adaptation.models.segment import Domain, Segment

TORCH_DTYPES = {"float32": torch.float32, "float64": torch.float64}
UNLABELED = -1

InputCache = dict[tuple[str, Representation], tuple[np.ndarray, np.ndarray]]


class SegmentBatch(BaseModel):
    """Network-ready tensors for a list of segments."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    segment_ids: list[str]
    kinematics: list[torch.Tensor]
    visual: list[torch.Tensor]
    domain_labels: torch.Tensor
    gesture_labels: torch.Tensor

    @classmethod
    def from_segments(
        cls,
        segments: list[Segment],
        representation: Representation = Representation.DIRECTION,
        dtype: torch.dtype = torch.float32,
        cache: InputCache | None = None,
    ) -> "SegmentBatch":
        kinematics, visual = [], []
        for segment in segments:
            key = (segment.segment_id, representation)
            if cache is not None and key in cache:
                kin, vis = cache[key]
            else:
                kin, vis = segment_inputs(segment, representation)
                if cache is not None:
                    cache[key] = (kin, vis)
            kinematics.append(torch.tensor(kin, dtype=dtype))
            visual.append(torch.tensor(vis, dtype=dtype))
        return cls(
            segment_ids=[segment.segment_id for segment in segments],
            kinematics=kinematics,
            visual=visual,
            domain_labels=torch.tensor([int(s.domain_label) for s in segments], dtype=torch.long),
            gesture_labels=torch.tensor(
                [UNLABELED if s.gesture_label is None else int(s.gesture_label) for s in segments],
                dtype=torch.long,
            ),
        )

    def __len__(self) -> int:
        return len(self.segment_ids)

    @property
    def is_labeled(self) -> bool:
        return bool((self.gesture_labels != UNLABELED).all())

    @property
    def domains(self) -> set[Domain]:
        return {Domain(int(label)) for label in self.domain_labels.tolist()}

    def concat(self, other: "SegmentBatch") -> "SegmentBatch":
        return SegmentBatch(
            segment_ids=self.segment_ids + other.segment_ids,
            kinematics=self.kinematics + other.kinematics,
            visual=self.visual + other.visual,
            domain_labels=torch.cat([self.domain_labels, other.domain_labels]),
            gesture_labels=torch.cat([self.gesture_labels, other.gesture_labels]),
        )


class NetworkOutputs(BaseModel):
    """Features and head scores of one forward pass."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    kinematic_feature: torch.Tensor
    kc_logits: torch.Tensor
    kd_logits: torch.Tensor
    fused_feature: torch.Tensor | None = None
    kvc_logits: torch.Tensor | None = None
    kvd_logits: torch.Tensor | None = None
    visual_feature: torch.Tensor | None = None
    vc_logits: torch.Tensor | None = None
    vd_logits: torch.Tensor | None = None

    @property
    def secondary_logits(self) -> torch.Tensor | None:
        """Scores mixed with KC by λ, if the visual modality takes part."""
        return self.kvc_logits if self.kvc_logits is not None else self.vc_logits

    def rows(self, index: slice) -> "NetworkOutputs":
        """Outputs restricted to a slice of the batch."""
        return NetworkOutputs(
            **{name: None if value is None else value[index] for name, value in self.__dict__.items()}
        )


def masked_scale_mean(features: dict[int, torch.Tensor], masks: dict[int, torch.Tensor]) -> torch.Tensor:
    """Mean of per-scale features over the scales active for each segment."""
    stacked = torch.stack([features[scale] for scale in sorted(features)], dim=1)
    weights = torch.stack([masks[scale] for scale in sorted(features)], dim=1).to(stacked.dtype)
    return (stacked * weights.unsqueeze(-1)).sum(dim=1) / weights.sum(dim=1, keepdim=True).clamp_min(1.0)


class GestureAdaptationNet(nn.Module):
    """Kinematic (and optionally visual) relation network with adversarial heads."""

    def __init__(self, config: ModelConfig) -> None:
        super().__init__()
        self.config = config
        encoder = config.encoder
        hidden = encoder.hidden_dim

        # Kinematic modules are registered first so their initialization does
        # not depend on the visual branch.
        self.kinematic_encoder = RelationEncoder(encoder.kinematic_dim, hidden)
        self.kd = DomainDiscriminator(hidden, config.head_hidden)
        self.kc = GestureClassifier(hidden, config.head_hidden, config.num_classes)
        self.grl = GradientReversal()

        if config.visual_branch is not VisualBranch.NONE:
            self.visual_encoder = RelationEncoder(encoder.visual_dim, hidden)
        if config.visual_branch is VisualBranch.KV_RELATION:
            self.fusion = MultiScaleFusion(encoder.scales, hidden, config.fusion)
            self.kvd = DomainDiscriminator(config.fusion.common_dim, config.head_hidden)
            self.kvc = GestureClassifier(config.fusion.common_dim, config.head_hidden, config.num_classes)
        if config.visual_branch is VisualBranch.SEPARATE:
            self.vd = DomainDiscriminator(hidden, config.head_hidden)
            self.vc = GestureClassifier(hidden, config.head_hidden, config.num_classes)

        init_parameters(self, config.init_seed)
        self.to(self.dtype)

    @property
    def dtype(self) -> torch.dtype:
        return TORCH_DTYPES[self.config.dtype]

    def forward(  # type: ignore[override]
        self, batch: SegmentBatch, mode: SamplingMode = SamplingMode.EVAL, seed: int = 0
    ) -> NetworkOutputs:
        lengths = [int(sequence.shape[0]) for sequence in batch.kinematics]
        plan = plan_batch(lengths, self.config.encoder, mode, seed)
        if not plan:
            raise ValueError("no segment in the batch has the 2 frames a relation scale needs")

        kin_scales, masks = encode_planned(batch.kinematics, plan, self.kinematic_encoder)
        kinematic_feature = masked_scale_mean(kin_scales, masks)
        outputs = NetworkOutputs(
            kinematic_feature=kinematic_feature,
            kc_logits=self.kc(kinematic_feature),
            kd_logits=self.kd(self.grl(kinematic_feature)),
        )

        branch = self.config.visual_branch
        if branch is VisualBranch.NONE:
            return outputs
        vis_scales, _ = encode_planned(batch.visual, plan, self.visual_encoder)
        if branch is VisualBranch.KV_RELATION:
            fused = {
                scale: kv_relation_scale(vis_scales[scale], kin_scales[scale], self.config.fusion.mode)
                for scale in kin_scales
            }
            fused_feature = self.fusion(fused, masks)
            outputs.fused_feature = fused_feature
            outputs.kvc_logits = self.kvc(fused_feature)
            outputs.kvd_logits = self.kvd(self.grl(fused_feature))
        else:
            visual_feature = masked_scale_mean(vis_scales, masks)
            outputs.visual_feature = visual_feature
            outputs.vc_logits = self.vc(visual_feature)
            outputs.vd_logits = self.vd(self.grl(visual_feature))
        return outputs

    def class_probabilities(self, outputs: NetworkOutputs, lambda_mix: float) -> torch.Tensor:
        """p^c for every segment of a forward pass."""
        return mixture_probabilities(outputs.kc_logits, outputs.secondary_logits, lambda_mix)

    @torch.no_grad()
    def predict(self, batch: SegmentBatch, lambda_mix: float) -> np.ndarray:
        """Eval-mode argmax of p^c per segment."""
        outputs = self(batch, mode=SamplingMode.EVAL)
        return self.class_probabilities(outputs, lambda_mix).argmax(dim=-1).cpu().numpy()

