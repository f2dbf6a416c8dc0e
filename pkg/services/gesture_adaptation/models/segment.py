"""
Data models for kinematic/visual gesture segments.

Defines per-frame kinematic state, the segment (the training and evaluation
unit), and cross-validation splits.
"""

from enum import Enum, IntEnum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

NUM_GESTURES = 7
ARM_WIDTH = 7
KINEMATIC_DIM = 2 * ARM_WIDTH
DEFAULT_VISUAL_DIM = 2048

GRIPPER_MIN = 30.0
GRIPPER_MAX = 100.0

# Column layout of one arm inside a 14-value kinematic frame
POSITION_SLICE = slice(0, 3)
ORIENTATION_SLICE = slice(3, 6)
GRIPPER_INDEX = 6

KINEMATIC_COLUMNS: list[str] = [
    f"{arm}_{name}"
    for arm in ("left", "right")
    for name in ("x", "y", "z", "yaw", "pitch", "roll", "gripper")
]


class Domain(IntEnum):
    """Domain label y^D."""

    SIMULATOR = 0
    REAL = 1


class Gesture(IntEnum):
    """Peg-transfer gesture classes."""

    APPROACH = 0
    GRASP = 1
    LIFT = 2
    TRANSFER = 3
    EXCHANGE = 4
    RELEASE = 5
    RETURN = 6


class Arm(str, Enum):
    """Robot arms."""

    LEFT = "left"
    RIGHT = "right"

    @property
    def offset(self) -> int:
        """Column offset of this arm inside a kinematic frame."""
        return 0 if self is Arm.LEFT else ARM_WIDTH


class ArmState(BaseModel):
    """End-effector state of one arm."""

    model_config = ConfigDict(frozen=True)

    position: tuple[float, float, float]
    orientation: tuple[float, float, float] = Field(description="yaw, pitch, roll in radians")
    gripper: float = Field(description="Raw gripper state, nominally 30-100")

    @field_validator("position", "orientation")
    @classmethod
    def _finite_vector(cls, value: tuple[float, float, float]) -> tuple[float, float, float]:
        if not np.all(np.isfinite(value)):
            raise ValueError("arm state values must be finite")
        return value

    @field_validator("gripper")
    @classmethod
    def _finite_gripper(cls, value: float) -> float:
        if not np.isfinite(value):
            raise ValueError("gripper value must be finite")
        return value

    def to_array(self) -> np.ndarray:
        return np.array([*self.position, *self.orientation, self.gripper], dtype=np.float64)


class KinematicFrame(BaseModel):
    """The 14 raw kinematic values of one frame."""

    model_config = ConfigDict(frozen=True)

    left: ArmState
    right: ArmState

    @classmethod
    def from_array(cls, values: np.ndarray) -> "KinematicFrame":
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (KINEMATIC_DIM,):
            raise ValueError(f"kinematic frame needs {KINEMATIC_DIM} values, got shape {values.shape}")
        arms = {}
        for arm in Arm:
            chunk = values[arm.offset : arm.offset + ARM_WIDTH]
            arms[arm.value] = ArmState(
                position=tuple(chunk[POSITION_SLICE]),
                orientation=tuple(chunk[ORIENTATION_SLICE]),
                gripper=float(chunk[GRIPPER_INDEX]),
            )
        return cls(**arms)

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.left.to_array(), self.right.to_array()])


def _frozen_array(value: Any, ndim: int, name: str) -> np.ndarray:
    array = np.array(value, dtype=np.float64)
    if array.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} contains non-finite values")
    array.setflags(write=False)
    return array


class Segment(BaseModel):
    """
    A maximal run of consecutive frames sharing one gesture label.

    Kinematics are stored as a (T, 14) array and visual features as a (T, f)
    array; ``frame(t)`` exposes the typed per-frame view.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    segment_id: str
    trial_id: str
    domain_label: Domain
    gesture_label: Gesture | None = None
    frame_index_range: tuple[int, int] = Field(description="First and last frame index, inclusive")
    kinematics: np.ndarray
    visual: np.ndarray

    @field_validator("kinematics", mode="before")
    @classmethod
    def _validate_kinematics(cls, value: Any) -> np.ndarray:
        array = _frozen_array(value, 2, "kinematics")
        if array.shape[1] != KINEMATIC_DIM:
            raise ValueError(f"kinematics must have {KINEMATIC_DIM} columns, got {array.shape[1]}")
        return array

    @field_validator("visual", mode="before")
    @classmethod
    def _validate_visual(cls, value: Any) -> np.ndarray:
        return _frozen_array(value, 2, "visual")

    @model_validator(mode="after")
    def _check_alignment(self) -> "Segment":
        length = self.kinematics.shape[0]
        if length < 2:
            raise ValueError(f"segment {self.segment_id}: T ≥ 2 required, got T={length}")
        if self.visual.shape[0] != length:
            raise ValueError(
                f"segment {self.segment_id}: {length} kinematic frames vs "
                f"{self.visual.shape[0]} visual frames"
            )
        start, end = self.frame_index_range
        if end - start + 1 != length:
            raise ValueError(f"segment {self.segment_id}: frame range {start}-{end} does not match T={length}")
        return self

    @property
    def length(self) -> int:
        return int(self.kinematics.shape[0])

    @property
    def visual_dim(self) -> int:
        return int(self.visual.shape[1])

    @property
    def is_labeled(self) -> bool:
        return self.gesture_label is not None

    def frame(self, t: int) -> tuple[KinematicFrame, np.ndarray]:
        """Return the (KinematicFrame, VisualFeature) pair of frame ``t``."""
        return KinematicFrame.from_array(self.kinematics[t]), self.visual[t]

    @property
    def frames(self) -> list[tuple[KinematicFrame, np.ndarray]]:
        return [self.frame(t) for t in range(self.length)]

    def arm_positions(self, arm: Arm) -> np.ndarray:
        """(T, 3) position trajectory of one arm."""
        return self.kinematics[:, arm.offset + POSITION_SLICE.start : arm.offset + POSITION_SLICE.stop]

    def without_label(self) -> "Segment":
        return self.model_copy(update={"gesture_label": None})


class SegmentIndexEntry(BaseModel):
    """One row of the segment index file."""

    segment_id: str
    trial_id: str
    frame_index_range: tuple[int, int]
    gesture_label: int | None
    domain_label: int

    @classmethod
    def from_segment(cls, segment: Segment) -> "SegmentIndexEntry":
        return cls(
            segment_id=segment.segment_id,
            trial_id=segment.trial_id,
            frame_index_range=segment.frame_index_range,
            gesture_label=None if segment.gesture_label is None else int(segment.gesture_label),
            domain_label=int(segment.domain_label),
        )


class Fold(BaseModel):
    """One cross-validation fold."""

    index: int = Field(ge=0)
    train_trials: list[str]
    test_trials: list[str]
    train_segment_ids: list[str]
    test_segment_ids: list[str]


class DatasetSplit(BaseModel):
    """Trial-level k-fold split of a segment collection."""

    seed: int
    folds: list[Fold]

    @property
    def fold_count(self) -> int:
        return len(self.folds)
