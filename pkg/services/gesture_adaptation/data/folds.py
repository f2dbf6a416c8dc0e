"""
Trial-level k-fold cross-validation.

Splitting by trial keeps every frame of a trial on one side of a fold, so
neighbouring segments of the same recording never leak into the test set.
"""

import numpy as np

from services.gesture_adaptation.models.segment import DatasetSplit, Fold, Segment
from services.gesture_adaptation.utils.errors import FoldError


def make_folds(segments: list[Segment], k: int = 5, seed: int = 0) -> DatasetSplit:
    """
    Partition trials into ``k`` folds.

    Segments are grouped by trial id regardless of domain, so paired
    simulator/real trials sharing an id stay in the same fold.

    Args:
        segments: Segments to split
        k: Number of folds
        seed: Permutation seed

    Returns:
        Split whose fold ``i`` tests part ``i`` and trains on the rest
    """
    if k < 2:
        raise FoldError(f"need at least 2 folds, got {k}")
    trials = sorted({segment.trial_id for segment in segments})
    if len(trials) < k:
        raise FoldError(f"{len(trials)} distinct trials cannot fill {k} folds")

    order = np.random.default_rng(seed).permutation(len(trials))
    parts = [sorted(trials[i] for i in part) for part in np.array_split(order, k)]

    folds = []
    for index, test_trials in enumerate(parts):
        held_out = set(test_trials)
        train_trials = sorted(trial for trial in trials if trial not in held_out)
        folds.append(
            Fold(
                index=index,
                train_trials=train_trials,
                test_trials=test_trials,
                train_segment_ids=[s.segment_id for s in segments if s.trial_id not in held_out],
                test_segment_ids=[s.segment_id for s in segments if s.trial_id in held_out],
            )
        )
    return DatasetSplit(seed=seed, folds=folds)


def select(segments: list[Segment], segment_ids: list[str]) -> list[Segment]:
    """Segments whose ids are listed, in their original order."""
    wanted = set(segment_ids)
    return [segment for segment in segments if segment.segment_id in wanted]
