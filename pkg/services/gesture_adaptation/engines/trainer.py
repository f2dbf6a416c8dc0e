"""
End-to-end adversarial training loop.

Each step draws a balanced simulator/real batch, computes the method's total
loss with train-mode subset sampling and takes one Adam step. Everything
random is derived from the configured seed, so a rerun reproduces the loss
curve exactly.
"""

import logging
import math
from collections.abc import Callable
from pathlib import Path

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict

from services.gesture_adaptation.data.sampler import sample_batch
from services.gesture_adaptation.engines.adversarial import dann_coefficient
from services.gesture_adaptation.engines.network import GestureAdaptationNet, InputCache, SegmentBatch
from services.gesture_adaptation.engines.objective import AdversarialObjective
from services.gesture_adaptation.engines.relation_encoders import SamplingMode
from services.gesture_adaptation.models.configs import GrlSchedule, Method, TrainConfig
from services.gesture_adaptation.models.report import EpochLog
from services.gesture_adaptation.models.segment import Domain, Segment
from services.gesture_adaptation.utils.errors import EmptyPoolError, TrainingDivergedError

logger = logging.getLogger(__name__)

CheckpointHook = Callable[[GestureAdaptationNet, int], Path | None]


class TrainingData(BaseModel):
    """Labeled simulator pool and unlabeled real pool."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    source: list[Segment]
    target: list[Segment]

    def validate_pools(self) -> None:
        if not self.source or not self.target:
            raise EmptyPoolError("training needs non-empty source and target pools")
        if any(s.domain_label is not Domain.SIMULATOR or s.gesture_label is None for s in self.source):
            raise ValueError("source pool must hold labeled simulator segments")
        if any(s.domain_label is not Domain.REAL for s in self.target):
            raise ValueError("target pool must hold real-robot segments")
        overlap = {s.segment_id for s in self.source} & {s.segment_id for s in self.target}
        if overlap:
            raise ValueError(f"source and target pools share segments: {sorted(overlap)[:3]}")


class TrainResult(BaseModel):
    """Trained network and its per-epoch log."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    model: GestureAdaptationNet
    history: list[EpochLog]
    checkpoints: list[Path] = []


def steps_per_epoch(config: TrainConfig, source_size: int) -> int:
    if config.steps_per_epoch is not None:
        return config.steps_per_epoch
    return max(1, math.ceil(source_size / config.batch_per_domain))


def train(
    model: GestureAdaptationNet,
    data: TrainingData,
    config: TrainConfig,
    method: Method,
    checkpoint_hook: CheckpointHook | None = None,
) -> TrainResult:
    """
    Train ``model`` in place.

    Args:
        model: Network whose visual branch matches ``method``
        data: Source and target pools; target labels are never read
        config: Optimization settings
        method: Selects representation and loss terms
        checkpoint_hook: Called with (model, epoch) every ``checkpoint_every`` epochs

    Returns:
        The model with its per-epoch history
    """
    data.validate_pools()
    objective = AdversarialObjective(model, config, method)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    cache: InputCache = {}
    n_steps = steps_per_epoch(config, len(data.source))
    total_steps = max(1, config.epochs * n_steps)
    history: list[EpochLog] = []
    checkpoints: list[Path] = []

    torch.manual_seed(config.seed)
    model.grl.coefficient = config.grl_coefficient
    for epoch in range(1, config.epochs + 1):
        model.train()
        sums: dict[str, float] = {}
        correct = seen = 0
        for step_in_epoch in range(n_steps):
            step = (epoch - 1) * n_steps + step_in_epoch
            if config.grl_schedule is GrlSchedule.DANN:
                model.grl.coefficient = dann_coefficient(config.grl_coefficient, step / total_steps)

            source, target = sample_batch(
                data.source, data.target, config.batch_per_domain, config.seed, step
            )
            source_batch = SegmentBatch.from_segments(source, method.representation, model.dtype, cache)
            target_batch = SegmentBatch.from_segments(
                [s.without_label() for s in target], method.representation, model.dtype, cache
            )

            breakdown = objective.total_loss(
                source_batch, target_batch, SamplingMode.TRAIN, seed=config.seed + step
            )
            values = breakdown.values()
            if not math.isfinite(float(breakdown.total.detach())):
                logger.error("Non-finite loss at epoch %d step %d: %s", epoch, step, values)
                raise TrainingDivergedError(f"non-finite loss at epoch {epoch}, step {step}: {values}")

            optimizer.zero_grad()
            breakdown.total.backward()
            optimizer.step()

            for name, value in values.items():
                sums[name] = sums.get(name, 0.0) + value
            with torch.no_grad():
                probabilities = model.class_probabilities(breakdown.source_outputs, config.lambda_mix)
                correct += int((probabilities.argmax(dim=-1) == source_batch.gesture_labels).sum())
                seen += len(source_batch)

        entry = EpochLog(
            epoch=epoch,
            losses={name: total / n_steps for name, total in sums.items()},
            source_accuracy=correct / seen,
        )
        history.append(entry)
        logger.info(
            "epoch %d/%d %s source_acc=%.4f",
            epoch,
            config.epochs,
            " ".join(f"{name}={value:.4f}" for name, value in entry.losses.items()),
            entry.source_accuracy,
        )
        if checkpoint_hook and config.checkpoint_every and epoch % config.checkpoint_every == 0:
            path = checkpoint_hook(model, epoch)
            if path is not None:
                checkpoints.append(path)

    model.eval()
    return TrainResult(model=model, history=history, checkpoints=checkpoints)


def predict_segments(
    model: GestureAdaptationNet,
    segments: list[Segment],
    method: Method,
    lambda_mix: float,
    chunk: int = 256,
) -> np.ndarray:
    """Eval-mode predictions for a segment list, in order."""
    model.eval()
    predictions = []
    for start in range(0, len(segments), chunk):
        batch = SegmentBatch.from_segments(
            segments[start : start + chunk], method.representation, model.dtype
        )
        predictions.append(model.predict(batch, lambda_mix))
    return np.concatenate(predictions) if predictions else np.empty(0, dtype=np.int64)
