"""
Loss terms of adversarial gesture training.

Classification is computed on labeled simulator segments only; the domain
terms run over simulator and real segments together. The total is the plain
sum of the terms the method enables.
"""

import torch
from pydantic import BaseModel, ConfigDict

from services.gesture_adaptation.engines.adversarial import domain_bce, mixture_cross_entropy
from services.gesture_adaptation.engines.network import GestureAdaptationNet, NetworkOutputs, SegmentBatch
from services.gesture_adaptation.engines.relation_encoders import SamplingMode
from services.gesture_adaptation.models.configs import Method, TrainConfig, VisualBranch
from services.gesture_adaptation.models.segment import Domain
from services.gesture_adaptation.utils.errors import BatchCompositionError

CLASSIFICATION = "L_C"
KINEMATIC_DOMAIN = "L_K-D"
KV_DOMAIN = "L_KV-D"
VISUAL_DOMAIN = "L_V-D"


class LossBreakdown(BaseModel):
    """Total loss, its terms and the forward pass they came from."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    total: torch.Tensor
    terms: dict[str, torch.Tensor]
    source_outputs: NetworkOutputs

    def values(self) -> dict[str, float]:
        return {name: float(term.detach()) for name, term in self.terms.items()}


def _require_both_domains(batch: SegmentBatch) -> None:
    missing = {Domain.SIMULATOR, Domain.REAL} - batch.domains
    if missing:
        names = ", ".join(sorted(domain.name.lower() for domain in missing))
        raise BatchCompositionError(f"domain loss needs both domains; batch has no {names} segments")


def _require_labeled_source(batch: SegmentBatch) -> None:
    if batch.domains - {Domain.SIMULATOR}:
        raise BatchCompositionError("classification loss accepts simulator segments only")
    if not batch.is_labeled:
        raise BatchCompositionError("classification loss needs a gesture label on every segment")


class AdversarialObjective:
    """Computes the loss terms of one method on a network."""

    def __init__(self, model: GestureAdaptationNet, config: TrainConfig, method: Method) -> None:
        if method.visual_branch is not model.config.visual_branch:
            raise ValueError(
                f"method {method.value} needs visual branch {method.visual_branch.value}, "
                f"network has {model.config.visual_branch.value}"
            )
        self.model = model
        self.config = config
        self.method = method

    def _forward(self, batch: SegmentBatch, mode: SamplingMode, seed: int) -> NetworkOutputs:
        return self.model(batch, mode=mode, seed=seed)

    def kd_loss(
        self, batch: SegmentBatch, mode: SamplingMode = SamplingMode.EVAL, seed: int = 0
    ) -> torch.Tensor:
        """Domain BCE of KD on the reversed kinematic feature."""
        _require_both_domains(batch)
        return domain_bce(self._forward(batch, mode, seed).kd_logits, batch.domain_labels)

    def kvd_loss(
        self, batch: SegmentBatch, mode: SamplingMode = SamplingMode.EVAL, seed: int = 0
    ) -> torch.Tensor:
        """Domain BCE of KVD on the reversed fused feature F_kvr."""
        _require_both_domains(batch)
        outputs = self._forward(batch, mode, seed)
        if outputs.kvd_logits is None:
            raise ValueError("network has no kinematic-visual fusion branch")
        return domain_bce(outputs.kvd_logits, batch.domain_labels)

    def classification_loss(
        self, source_batch: SegmentBatch, mode: SamplingMode = SamplingMode.EVAL, seed: int = 0
    ) -> torch.Tensor:
        """Cross-entropy of the λ-mixed class probabilities on simulator segments."""
        _require_labeled_source(source_batch)
        outputs = self._forward(source_batch, mode, seed)
        return mixture_cross_entropy(
            outputs.kc_logits, outputs.secondary_logits, source_batch.gesture_labels, self.config.lambda_mix
        )

    def total_loss(
        self,
        source_batch: SegmentBatch,
        target_batch: SegmentBatch,
        mode: SamplingMode = SamplingMode.EVAL,
        seed: int = 0,
    ) -> LossBreakdown:
        """
        Weighted sum of the enabled terms from one forward pass over both batches.

        Returns:
            Breakdown whose ``total`` is ready for ``backward()``
        """
        _require_labeled_source(source_batch)
        if target_batch.domains - {Domain.REAL}:
            raise BatchCompositionError("target batch accepts real-robot segments only")

        combined = source_batch.concat(target_batch)
        outputs = self._forward(combined, mode, seed)
        source_outputs = outputs.rows(slice(0, len(source_batch)))

        terms = {
            CLASSIFICATION: mixture_cross_entropy(
                source_outputs.kc_logits,
                source_outputs.secondary_logits,
                source_batch.gesture_labels,
                self.config.lambda_mix,
            )
        }
        weights = {CLASSIFICATION: self.config.classification_weight}
        if self.method.uses_kinematic_discriminator:
            terms[KINEMATIC_DOMAIN] = domain_bce(outputs.kd_logits, combined.domain_labels)
            weights[KINEMATIC_DOMAIN] = self.config.kd_weight
        if self.method.visual_branch is VisualBranch.KV_RELATION:
            terms[KV_DOMAIN] = domain_bce(outputs.kvd_logits, combined.domain_labels)
            weights[KV_DOMAIN] = self.config.kvd_weight
        if self.method.visual_branch is VisualBranch.SEPARATE:
            terms[VISUAL_DOMAIN] = domain_bce(outputs.vd_logits, combined.domain_labels)
            weights[VISUAL_DOMAIN] = self.config.kvd_weight

        total = sum(weights[name] * term for name, term in terms.items())
        return LossBreakdown(total=total, terms=terms, source_outputs=source_outputs)
