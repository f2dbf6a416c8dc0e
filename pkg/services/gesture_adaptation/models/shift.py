"""
Data models for the synthetic two-domain benchmark.

Covers the simulator-to-real shift parameterization and the gesture scripts
the trajectory generator realizes.
"""

from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from services.gesture_adaptation.models.segment import Arm, Gesture


class VisualShift(BaseModel):
    """
    Affine shift of real-domain visual features.

    The (f, f) matrix is realized from ``mix_seed`` once the feature width is
    known: ``A = gain * I + mix_scale * N(0, 1/f)``; the bias vector is
    ``bias_scale * N(0, 1)`` from the same stream.
    """

    model_config = ConfigDict(frozen=True)

    gain: float = Field(default=1.0, gt=0)
    mix_scale: float = Field(default=0.0, ge=0)
    bias_scale: float = Field(default=0.0, ge=0)
    noise_sigma: float = Field(default=0.0, ge=0)
    mix_seed: int = Field(default=0, ge=0)

    @property
    def is_identity(self) -> bool:
        return self.gain == 1.0 and self.mix_scale == 0.0 and self.bias_scale == 0.0 and self.noise_sigma == 0.0

    def realize(self, dim: int) -> tuple[np.ndarray, np.ndarray]:
        """Return the (matrix, bias) pair for feature width ``dim``."""
        rng = np.random.default_rng(self.mix_seed)
        matrix = self.gain * np.eye(dim) + self.mix_scale * rng.normal(0.0, 1.0 / np.sqrt(dim), size=(dim, dim))
        bias = self.bias_scale * rng.normal(0.0, 1.0, size=dim)
        return matrix, bias


class ShiftConfig(BaseModel):
    """Simulator-to-real domain shift applied by the generator."""

    model_config = ConfigDict(frozen=True)

    translation_offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    scale_factor: float = Field(default=1.0, gt=0)
    tilt_angle: float = Field(default=0.0, description="Board tilt in radians")
    kin_noise_sigma: float = Field(default=0.0, ge=0)
    vis_shift: VisualShift = Field(default_factory=VisualShift)

    @property
    def is_identity(self) -> bool:
        return (
            self.translation_offset == (0.0, 0.0, 0.0)
            and self.scale_factor == 1.0
            and self.tilt_angle == 0.0
            and self.kin_noise_sigma == 0.0
            and self.vis_shift.is_identity
        )


class Landmark(str, Enum):
    """Named scene locations a motion primitive can target."""

    SOURCE_PEG = "source_peg"
    TARGET_PEG = "target_peg"
    HANDOVER = "handover"
    HOME = "home"


class TransferDirection(str, Enum):
    """Which arm picks the object up and which one places it."""

    LEFT_TO_RIGHT = "left_to_right"
    RIGHT_TO_LEFT = "right_to_left"

    @property
    def giver(self) -> Arm:
        return Arm.LEFT if self is TransferDirection.LEFT_TO_RIGHT else Arm.RIGHT

    @property
    def receiver(self) -> Arm:
        return Arm.RIGHT if self is TransferDirection.LEFT_TO_RIGHT else Arm.LEFT


class ScriptStep(BaseModel):
    """One gesture of a script with its motion primitive parameters."""

    model_config = ConfigDict(frozen=True)

    gesture: Gesture
    duration: int = Field(ge=2, description="Frames")
    arm: Arm
    landmark: Landmark
    hover_height: float = Field(default=0.06, ge=0, description="Nominal length, scaled by the workspace scale")
    lift_height: float = Field(default=0.18, ge=0, description="Nominal length, scaled by the workspace scale")

    @field_validator("gesture", mode="before")
    @classmethod
    def _known_gesture(cls, value: object) -> object:
        if isinstance(value, int) and not 0 <= value < len(Gesture):
            raise ValueError(f"invalid gesture id {value}; expected 0..{len(Gesture) - 1}")
        return value


class GestureScript(BaseModel):
    """Ordered gestures realized by one generated trial."""

    model_config = ConfigDict(frozen=True)

    steps: list[ScriptStep] = Field(min_length=1)

    @property
    def total_frames(self) -> int:
        return sum(step.duration for step in self.steps)

    @property
    def gestures(self) -> set[Gesture]:
        return {step.gesture for step in self.steps}
