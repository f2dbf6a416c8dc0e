"""Balanced two-domain batch sampling."""

import numpy as np

from services.gesture_adaptation.models.segment import Segment
from services.gesture_adaptation.utils.errors import EmptyPoolError


def _draw(pool: list[Segment], n: int, rng: np.random.Generator) -> list[Segment]:
    replace = len(pool) < n
    picks = rng.choice(len(pool), size=n, replace=replace)
    return [pool[int(i)] for i in picks]


def sample_batch(
    source_pool: list[Segment],
    target_pool: list[Segment],
    n_per_domain: int,
    seed: int,
    step: int,
) -> tuple[list[Segment], list[Segment]]:
    """
    Draw ``n_per_domain`` segments from each pool.

    Draws without replacement unless a pool is smaller than the request.
    The result depends only on (seed, step), so replays are identical.
    """
    if not source_pool:
        raise EmptyPoolError("source pool is empty")
    if not target_pool:
        raise EmptyPoolError("target pool is empty")
    if n_per_domain < 1:
        raise ValueError(f"n_per_domain must be positive, got {n_per_domain}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, step]))
    return _draw(source_pool, n_per_domain, rng), _draw(target_pool, n_per_domain, rng)
