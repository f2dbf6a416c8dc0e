"""
Table ingestion for kinematic/visual gesture datasets.

Reads the three delimited-text tables of one domain (kinematics, visual
features, per-frame gesture labels), checks that the modalities align frame
by frame, and cuts every trial into segments: maximal runs of consecutive
frames with one gesture label.
"""

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import TypeAdapter

from services.gesture_adaptation.models.segment import (
    KINEMATIC_COLUMNS,
    KINEMATIC_DIM,
    NUM_GESTURES,
    Domain,
    Gesture,
    Segment,
    SegmentIndexEntry,
)
from services.gesture_adaptation.utils.errors import IngestionError

logger = logging.getLogger(__name__)

KEY_COLUMNS = ["trial_id", "frame"]
TABLE_FILES = {
    "kinematics": "kinematics.csv",
    "features": "features.csv",
    "labels": "labels.csv",
}
DOMAIN_DIRS = {Domain.SIMULATOR: "simulator", Domain.REAL: "real"}


def segment_id(domain: Domain, trial_id: str, first_frame: int) -> str:
    """Stable id of the segment starting at ``first_frame`` of a trial."""
    return f"{DOMAIN_DIRS[domain]}-{trial_id}-{first_frame:05d}"


def segment_runs(labels: np.ndarray, frames: np.ndarray | None = None) -> list[tuple[int, int, int]]:
    """
    Run-length scan of a label sequence.

    Args:
        labels: Per-frame labels in frame order
        frames: Optional frame indices; a gap in them also ends a run

    Returns:
        (start, stop, label) triples with ``stop`` exclusive, covering every position once
    """
    runs: list[tuple[int, int, int]] = []
    start = 0
    for position in range(1, len(labels) + 1):
        boundary = position == len(labels) or labels[position] != labels[start]
        if not boundary and frames is not None:
            boundary = frames[position] != frames[position - 1] + 1
        if boundary:
            runs.append((start, position, int(labels[start])))
            start = position
    return runs


def _value_columns(table: pd.DataFrame, name: str) -> list[str]:
    missing = [column for column in KEY_COLUMNS if column not in table.columns]
    if missing:
        raise IngestionError(f"{name} table is missing key columns {missing}")
    return [column for column in table.columns if column not in KEY_COLUMNS]


def _kinematic_columns(table: pd.DataFrame) -> list[str]:
    columns = _value_columns(table, "kinematics")
    if all(column in columns for column in KINEMATIC_COLUMNS):
        return KINEMATIC_COLUMNS
    if len(columns) == KINEMATIC_DIM:
        return columns
    raise IngestionError(f"kinematics table needs {KINEMATIC_DIM} value columns, found {len(columns)}")


def _trial_rows(table: pd.DataFrame, name: str) -> dict[str, pd.DataFrame]:
    keyed = table.assign(trial_id=table["trial_id"].astype(str))
    grouped: dict[str, pd.DataFrame] = {}
    for trial_id, rows in keyed.groupby("trial_id", sort=True):
        rows = rows.sort_values("frame", kind="stable")
        duplicated = rows["frame"][rows["frame"].duplicated()]
        if not duplicated.empty:
            raise IngestionError(f"trial {trial_id}: duplicate frame {int(duplicated.iloc[0])} in {name} table")
        grouped[str(trial_id)] = rows
    return grouped


def _check_alignment(trial_id: str, reference: np.ndarray, other: np.ndarray, name: str) -> None:
    if len(reference) == len(other) and np.array_equal(reference, other):
        return
    mismatched = sorted(set(reference.tolist()) ^ set(other.tolist()))
    frame = mismatched[0] if mismatched else int(reference[0])
    raise IngestionError(
        f"trial {trial_id}: frame {frame} misaligned between kinematics ({len(reference)} frames) "
        f"and {name} ({len(other)} frames)"
    )


def load_trials(
    kinematics_table: pd.DataFrame,
    features_table: pd.DataFrame,
    labels_table: pd.DataFrame,
    domain: Domain = Domain.SIMULATOR,
    strict: bool = False,
) -> list[Segment]:
    """
    Cut aligned trial tables into segments.

    Args:
        kinematics_table: trial_id, frame and the 14 kinematic values per row
        features_table: trial_id, frame and the visual feature values per row
        labels_table: trial_id, frame, gesture
        domain: Domain label stamped on every segment
        strict: Raise on single-frame runs instead of dropping them

    Returns:
        Segments ordered by trial id, then frame
    """
    kin_columns = _kinematic_columns(kinematics_table)
    feature_columns = _value_columns(features_table, "features")
    if "gesture" not in labels_table.columns:
        raise IngestionError("labels table needs a 'gesture' column")

    kin_trials = _trial_rows(kinematics_table, "kinematics")
    feature_trials = _trial_rows(features_table, "features")
    label_trials = _trial_rows(labels_table, "labels")

    segments: list[Segment] = []
    for trial_id, kin_rows in kin_trials.items():
        frames = kin_rows["frame"].to_numpy(dtype=np.int64)
        for name, trials in (("features", feature_trials), ("labels", label_trials)):
            if trial_id not in trials:
                raise IngestionError(f"trial {trial_id}: frame {int(frames[0])} has no rows in {name} table")
            _check_alignment(trial_id, frames, trials[trial_id]["frame"].to_numpy(dtype=np.int64), name)

        raw_labels = label_trials[trial_id]["gesture"].to_numpy()
        for frame, label in zip(frames, raw_labels):
            try:
                value = float(label)
            except (TypeError, ValueError):
                value = float("nan")
            if not value.is_integer() or not 0 <= int(value) < NUM_GESTURES:
                raise IngestionError(f"trial {trial_id}, frame {int(frame)}: unknown gesture id {label}")
        labels = raw_labels.astype(np.float64).astype(np.int64)

        kinematics = kin_rows[kin_columns].to_numpy(dtype=np.float64)
        visual = feature_trials[trial_id][feature_columns].to_numpy(dtype=np.float64)

        for start, stop, label in segment_runs(labels, frames):
            first, last = int(frames[start]), int(frames[stop - 1])
            if stop - start < 2:
                message = f"trial {trial_id}, frame {first}: single-frame run of gesture {label}, T ≥ 2 required"
                if strict:
                    raise IngestionError(message)
                logger.warning("Dropping %s", message)
                continue
            segments.append(
                Segment(
                    segment_id=segment_id(domain, trial_id, first),
                    trial_id=trial_id,
                    domain_label=domain,
                    gesture_label=Gesture(label),
                    frame_index_range=(first, last),
                    kinematics=kinematics[start:stop],
                    visual=visual[start:stop],
                )
            )

    logger.info("Ingested %d segments from %d %s trials", len(segments), len(kin_trials), DOMAIN_DIRS[domain])
    return segments


def read_tables(directory: Path) -> tuple[pd.DataFrame, pd.DataFrame, pd.DataFrame]:
    """Read the kinematics, features and labels tables of one domain directory."""
    tables = []
    for name, filename in TABLE_FILES.items():
        path = Path(directory) / filename
        if not path.exists():
            raise IngestionError(f"missing {name} table: {path}")
        tables.append(pd.read_csv(path, dtype={"trial_id": str}))
    return tables[0], tables[1], tables[2]


def write_tables(
    directory: Path,
    kinematics_table: pd.DataFrame,
    features_table: pd.DataFrame,
    labels_table: pd.DataFrame,
) -> list[Path]:
    """Write the three tables of one domain as CSV with a header row."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for table, filename in zip((kinematics_table, features_table, labels_table), TABLE_FILES.values()):
        path = directory / filename
        table.to_csv(path, index=False, float_format="%.10g")
        paths.append(path)
    return paths


def load_dataset_dir(directory: Path, strict: bool = False) -> dict[Domain, list[Segment]]:
    """Load ``simulator/`` and ``real/`` table sets from a dataset directory."""
    dataset: dict[Domain, list[Segment]] = {}
    for domain, subdir in DOMAIN_DIRS.items():
        kinematics, features, labels = read_tables(Path(directory) / subdir)
        dataset[domain] = load_trials(kinematics, features, labels, domain=domain, strict=strict)
    return dataset


def write_segment_index(segments: list[Segment], path: Path) -> Path:
    """Write the segment index (id, trial, frame range, label, domain) as JSON."""
    entries = [SegmentIndexEntry.from_segment(segment).model_dump() for segment in segments]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(entries, indent=2))
    return path


def read_segment_index(path: Path) -> list[SegmentIndexEntry]:
    """Parse a segment index written by ``write_segment_index``."""
    return TypeAdapter(list[SegmentIndexEntry]).validate_json(Path(path).read_text())


def hide_labels(segments: list[Segment]) -> list[Segment]:
    """Strip gesture labels, as for an unlabeled target pool."""
    return [segment.without_label() for segment in segments]
