"""
Pytest configuration and shared fixtures.

Provides miniature models, segment pools and experiment configs for all test
modules. Directional benchmark runs are marked ``slow`` and only execute
with ``--runslow``.
"""

from pathlib import Path

import pytest
import torch

from services.gesture_adaptation.engines.network import GestureAdaptationNet, SegmentBatch
from services.gesture_adaptation.models.configs import (
    DatasetSource,
    EncoderConfig,
    ExperimentConfig,
    FusionConfig,
    Method,
    ModelConfig,
    TrainConfig,
    VisualBranch,
)
from services.gesture_adaptation.models.segment import Domain, Segment
from tests.fixtures.builders import TINY_VISUAL_DIM, make_pool


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption("--runslow", action="store_true", default=False, help="run slow benchmark tests")


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def tiny_model_config() -> ModelConfig:
    """Miniature two-modality network in double precision."""
    return ModelConfig(
        encoder=EncoderConfig(hidden_dim=6, max_scale=4, subsets_per_scale=2, visual_dim=TINY_VISUAL_DIM),
        fusion=FusionConfig(common_dim=6),
        head_hidden=5,
        visual_branch=VisualBranch.KV_RELATION,
        dtype="float64",
        init_seed=3,
    )


@pytest.fixture
def tiny_model(tiny_model_config: ModelConfig) -> GestureAdaptationNet:
    return GestureAdaptationNet(tiny_model_config)


@pytest.fixture
def source_segments() -> list[Segment]:
    """Four labeled simulator segments."""
    return make_pool(Domain.SIMULATOR, count=4, length=7, seed=11)


@pytest.fixture
def target_segments() -> list[Segment]:
    """Four unlabeled real segments."""
    return make_pool(Domain.REAL, count=4, length=7, seed=29, labeled=False)


@pytest.fixture
def source_batch(source_segments: list[Segment]) -> SegmentBatch:
    return SegmentBatch.from_segments(source_segments, dtype=torch.float64)


@pytest.fixture
def target_batch(target_segments: list[Segment]) -> SegmentBatch:
    return SegmentBatch.from_segments(target_segments, dtype=torch.float64)


@pytest.fixture
def tiny_train_config() -> TrainConfig:
    return TrainConfig(batch_per_domain=4, epochs=2, steps_per_epoch=2, seed=5)


@pytest.fixture
def experiment_config(tmp_path: Path) -> ExperimentConfig:
    """Smallest experiment that still exercises every stage: one fold, one seed."""
    return ExperimentConfig(
        name="tiny",
        dataset=DatasetSource(kind="synthetic", preset="combined", n_trials=5, seed=0, visual_dim=TINY_VISUAL_DIM),
        method=Method.MDOK_KVATT,
        train=TrainConfig(batch_per_domain=4, epochs=1, steps_per_epoch=2),
        model=ModelConfig(
            encoder=EncoderConfig(hidden_dim=4, max_scale=3, subsets_per_scale=1),
            fusion=FusionConfig(common_dim=4),
            head_hidden=4,
        ),
        k_folds=5,
        folds=[0],
        seeds=[0],
        output_dir=str(tmp_path / "runs"),
    )
