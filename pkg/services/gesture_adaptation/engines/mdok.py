"""
Motion-direction-oriented kinematic preprocessing.

Replaces each arm's end-effector position with the unit direction of motion
to the next frame. Directions ignore where the robot is and how far it moves,
so a constant offset or a positive rescaling of the workspace leaves them
unchanged.
"""

import numpy as np
from pydantic import BaseModel, ConfigDict

from services.gesture_adaptation.models.configs import Representation
from services.gesture_adaptation.models.segment import (
    ARM_WIDTH,
    GRIPPER_INDEX,
    GRIPPER_MAX,
    GRIPPER_MIN,
    KINEMATIC_DIM,
    POSITION_SLICE,
    Arm,
    Segment,
)

DIRECTION_EPS = 1e-8


class MdokArm(BaseModel):
    """Transformed state of one arm."""

    model_config = ConfigDict(frozen=True)

    direction: tuple[float, float, float]
    orientation: tuple[float, float, float]
    gripper: float


class MdokFrame(BaseModel):
    """One transformed frame: direction, orientation and normalized gripper per arm."""

    model_config = ConfigDict(frozen=True)

    left: MdokArm
    right: MdokArm

    @classmethod
    def from_array(cls, values: np.ndarray) -> "MdokFrame":
        arms = {}
        for arm in Arm:
            chunk = values[arm.offset : arm.offset + ARM_WIDTH]
            arms[arm.value] = MdokArm(
                direction=tuple(float(v) for v in chunk[0:3]),
                orientation=tuple(float(v) for v in chunk[3:6]),
                gripper=float(chunk[6]),
            )
        return cls(**arms)

    def to_array(self) -> np.ndarray:
        return np.array(
            [
                value
                for arm in (self.left, self.right)
                for value in (*arm.direction, *arm.orientation, arm.gripper)
            ]
        )


def relative_direction(p_t: np.ndarray, p_t1: np.ndarray) -> np.ndarray:
    """Displacement from ``p_t`` to ``p_t1``."""
    return np.asarray(p_t1, dtype=np.float64) - np.asarray(p_t, dtype=np.float64)


def unit_normalize(direction: np.ndarray, eps: float = DIRECTION_EPS) -> np.ndarray:
    """
    Scale displacement vectors to unit length.

    Works on a single 3-vector or on stacked rows; rows shorter than ``eps``
    become the zero vector.
    """
    direction = np.asarray(direction, dtype=np.float64)
    norm = np.linalg.norm(direction, axis=-1, keepdims=True)
    safe = np.where(norm >= eps, norm, 1.0)
    return np.where(norm >= eps, direction / safe, 0.0)


def normalize_gripper(raw: np.ndarray) -> np.ndarray:
    """Map raw gripper values from [30, 100] onto [0, 1], clamped."""
    return np.clip((np.asarray(raw, dtype=np.float64) - GRIPPER_MIN) / (GRIPPER_MAX - GRIPPER_MIN), 0.0, 1.0)


def transform_kinematics(kinematics: np.ndarray) -> np.ndarray:
    """
    Vectorized transform of a (T, 14) raw kinematic array.

    Returns:
        (T-1, 14) array; row t holds the unit direction t→t+1 with the
        orientation and normalized gripper of frame t
    """
    kinematics = np.asarray(kinematics, dtype=np.float64)
    if kinematics.ndim != 2 or kinematics.shape[1] != KINEMATIC_DIM:
        raise ValueError(f"expected (T, {KINEMATIC_DIM}) kinematics, got shape {kinematics.shape}")
    if kinematics.shape[0] < 2:
        raise ValueError(f"T ≥ 2 required, got T={kinematics.shape[0]}")
    out = kinematics[:-1].copy()
    for arm in Arm:
        positions = slice(arm.offset + POSITION_SLICE.start, arm.offset + POSITION_SLICE.stop)
        displacement = relative_direction(kinematics[:-1, positions], kinematics[1:, positions])
        out[:, positions] = unit_normalize(displacement)
        out[:, arm.offset + GRIPPER_INDEX] = normalize_gripper(kinematics[:-1, arm.offset + GRIPPER_INDEX])
    return out


def transform_segment(segment: Segment) -> list[MdokFrame]:
    """Transform a segment into its T−1 direction-oriented frames."""
    return [MdokFrame.from_array(row) for row in transform_kinematics(segment.kinematics)]


def position_frames(segment: Segment) -> np.ndarray:
    """
    Raw-position representation on the same T−1 frames as the transform.

    Positions and orientations stay raw; only the gripper is normalized.
    """
    out = segment.kinematics[:-1].copy()
    for arm in Arm:
        out[:, arm.offset + GRIPPER_INDEX] = normalize_gripper(out[:, arm.offset + GRIPPER_INDEX])
    return out


def segment_inputs(segment: Segment, representation: Representation) -> tuple[np.ndarray, np.ndarray]:
    """
    Network inputs of a segment.

    Returns:
        (kinematic (T-1, 14), visual (T-1, f)); the visual row of the last
        frame is dropped to stay aligned with the kinematic rows
    """
    if representation is Representation.DIRECTION:
        kinematic = transform_kinematics(segment.kinematics)
    else:
        kinematic = position_frames(segment)
    return kinematic, np.asarray(segment.visual[:-1])
