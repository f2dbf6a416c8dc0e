"""
Run artifacts: config hashes, dataset fingerprints, checkpoints and tables.

Every artifact a run writes carries the hash of the config that produced it,
so an output directory can always be traced back to its experiment file.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any

import pandas as pd
import torch
from pydantic import BaseModel

from services.gesture_adaptation.engines.network import GestureAdaptationNet
from services.gesture_adaptation.models.configs import DatasetSource, Method, ModelConfig
from services.gesture_adaptation.models.report import EpochLog
from services.gesture_adaptation.models.segment import Segment
from services.gesture_adaptation.utils.errors import CheckpointMismatchError

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "gesture-adaptation-checkpoint/1"
HASH_LENGTH = 16
FLOAT_FORMAT = "%.10g"


def canonical_json(payload: Any) -> str:
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def config_hash(payload: Any) -> str:
    """Short sha256 of the canonical JSON form of a config."""
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()[:HASH_LENGTH]


def dataset_fingerprint(segments: list[Segment]) -> str:
    """Content hash of a segment collection, independent of list order."""
    digest = hashlib.sha256()
    for segment in sorted(segments, key=lambda s: s.segment_id):
        label = "-" if segment.gesture_label is None else str(int(segment.gesture_label))
        digest.update(f"{segment.segment_id}|{int(segment.domain_label)}|{label}|".encode())
        digest.update(segment.kinematics.tobytes())
        digest.update(segment.visual.tobytes())
    return digest.hexdigest()[:HASH_LENGTH]


class CheckpointMeta(BaseModel):
    """Self-description stored next to the parameters of a checkpoint."""

    format: str = CHECKPOINT_FORMAT
    config_hash: str
    method: Method
    model: ModelConfig
    dataset: DatasetSource | None = None
    dataset_fingerprint: str
    fold: int
    seed: int
    epoch: int
    lambda_mix: float
    train_trials: list[str]
    test_trials: list[str]
    shapes: dict[str, list[int]] = {}


def save_checkpoint(path: Path, model: GestureAdaptationNet, meta: CheckpointMeta) -> Path:
    """Write parameters and metadata to one file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    state = model.state_dict()
    meta = meta.model_copy(update={"shapes": {name: list(tensor.shape) for name, tensor in state.items()}})
    torch.save({"meta": meta.model_dump(mode="json"), "state_dict": state}, path)
    logger.info("Checkpoint written: %s (epoch %d, config %s)", path, meta.epoch, meta.config_hash)
    return path


def read_checkpoint_meta(path: Path) -> CheckpointMeta:
    payload = torch.load(Path(path), map_location="cpu", weights_only=True)
    return CheckpointMeta.model_validate(payload["meta"])


def load_checkpoint(
    path: Path, expected_fingerprint: str | None = None
) -> tuple[GestureAdaptationNet, CheckpointMeta]:
    """
    Rebuild the network stored in a checkpoint.

    Args:
        path: Checkpoint file
        expected_fingerprint: Fingerprint of the dataset the checkpoint is about to be used with

    Raises:
        CheckpointMismatchError: unknown format, wrong dataset or parameter shapes that do not fit
    """
    payload = torch.load(Path(path), map_location="cpu", weights_only=True)
    meta = CheckpointMeta.model_validate(payload["meta"])
    if meta.format != CHECKPOINT_FORMAT:
        raise CheckpointMismatchError(f"{path}: unsupported checkpoint format '{meta.format}'")
    if expected_fingerprint is not None and expected_fingerprint != meta.dataset_fingerprint:
        raise CheckpointMismatchError(
            f"{path}: trained on dataset {meta.dataset_fingerprint}, "
            f"evaluation dataset is {expected_fingerprint}"
        )
    model = GestureAdaptationNet(meta.model)
    expected = {name: list(tensor.shape) for name, tensor in model.state_dict().items()}
    stored = {name: list(tensor.shape) for name, tensor in payload["state_dict"].items()}
    if expected != stored:
        names = expected.keys() | stored.keys()
        differing = sorted(name for name in names if expected.get(name) != stored.get(name))
        raise CheckpointMismatchError(
            f"{path}: parameter layout does not match its model config: {differing[:3]}"
        )
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, meta


def write_json(path: Path, payload: Any) -> Path:
    """Deterministic JSON with sorted keys."""
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def write_table(path: Path, rows: list[dict[str, Any]], columns: list[str] | None = None) -> Path:
    """Delimited-text table with a header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def write_epoch_log(path: Path, history: list[EpochLog], method: Method) -> Path:
    """Per-epoch losses in the method's loss columns, then source accuracy."""
    columns = ["epoch", *method.loss_columns, "source_acc"]
    rows = [
        {"epoch": entry.epoch, **entry.losses, "source_acc": entry.source_accuracy}
        for entry in history
    ]
    return write_table(path, rows, columns)
