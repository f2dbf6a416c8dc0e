"""
Synthetic two-domain peg-transfer benchmark.

A trial is a gesture script realized as smooth end-effector trajectories for
both arms. The simulator domain renders the script on the nominal board; the
real domain renders the same script on a tilted board and then rescales,
translates and perturbs the result according to a ShiftConfig. Visual
features are a fixed random linear map of the scene state.
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from scipy.spatial.transform import Rotation

from services.gesture_adaptation.data.ingestion import (
    DOMAIN_DIRS,
    segment_id,
    segment_runs,
    write_tables,
)
from services.gesture_adaptation.engines.mdok import normalize_gripper
from services.gesture_adaptation.models.segment import KINEMATIC_COLUMNS, Arm, Domain, Gesture, Segment
from services.gesture_adaptation.models.shift import (
    GestureScript,
    Landmark,
    ScriptStep,
    ShiftConfig,
    TransferDirection,
)
from services.gesture_adaptation.utils.config import settings

logger = logging.getLogger(__name__)

BOARD_CENTER = np.zeros(3)
BOARD_UP = np.array([0.0, 0.0, 1.0])
LATERAL = np.array([1.0, 0.0, 0.0])

# Lengths below are nominal and multiplied by WORKSPACE_SCALE when rendering.
# Uniform scaling leaves unit directions unchanged; it only sets how large a
# fixed real-domain offset is relative to the board.
WORKSPACE_SCALE = 0.4
PEG_OFFSET = (0.15, 0.05, 0.0)
HANDOVER = (0.0, 0.0, 0.0)
HOME = {Arm.LEFT: (-0.22, -0.15, 0.28), Arm.RIGHT: (0.22, -0.15, 0.28)}
BASE_ORIENTATION = (0.0, 0.35, 0.0)
LANDMARK_JITTER = 0.02

GRIPPER_OPEN = 90.0
GRIPPER_CLOSED = 35.0
GRASP_DESCENT = 0.012
GRASP_ROLL = 0.05
EXCHANGE_GAP = 0.03
EXCHANGE_REACH = 0.01
EXCHANGE_YAW = 0.1

BASE_DURATIONS = {
    Gesture.APPROACH: 24,
    Gesture.GRASP: 12,
    Gesture.LIFT: 14,
    Gesture.TRANSFER: 22,
    Gesture.EXCHANGE: 20,
    Gesture.RELEASE: 12,
    Gesture.RETURN: 22,
}
DURATION_JITTER = 0.3
MIN_STEP_FRAMES = 12

VELOCITY_GAIN = 20.0
VISUAL_NOISE_SIGMA = 0.02
PROJECTION_SEED = 1234
# arm positions, gripper states, arm velocities, object position, holder
# one-hot, source and target peg positions
SCENE_STATE_DIM = 6 + 2 + 6 + 3 + 2 + 3 + 3

# Independent random streams derived from a trial seed
_LAYOUT_STREAM, _KIN_NOISE_STREAM, _VISUAL_NOISE_STREAM, _VIS_SHIFT_STREAM = range(4)


def _stream(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, stream]))


def _side(arm: Arm) -> float:
    return -1.0 if arm is Arm.LEFT else 1.0


def _length(nominal: object) -> np.ndarray:
    return WORKSPACE_SCALE * np.asarray(nominal, dtype=np.float64)


def default_script(seed: int, direction: TransferDirection = TransferDirection.LEFT_TO_RIGHT) -> GestureScript:
    """
    Peg-transfer script covering all seven gestures.

    The giver approaches, grasps and lifts the object, carries it to the
    handover point, both arms exchange it, and the receiver carries it over
    the target peg, releases it and returns. Durations are jittered by seed.
    """
    rng = np.random.default_rng(seed)

    def duration(gesture: Gesture) -> int:
        jitter = rng.uniform(1.0 - DURATION_JITTER, 1.0 + DURATION_JITTER)
        return max(MIN_STEP_FRAMES, int(round(BASE_DURATIONS[gesture] * jitter)))

    giver, receiver = direction.giver, direction.receiver
    plan = [
        (Gesture.APPROACH, giver, Landmark.SOURCE_PEG),
        (Gesture.GRASP, giver, Landmark.SOURCE_PEG),
        (Gesture.LIFT, giver, Landmark.SOURCE_PEG),
        (Gesture.TRANSFER, giver, Landmark.HANDOVER),
        (Gesture.EXCHANGE, receiver, Landmark.HANDOVER),
        (Gesture.TRANSFER, receiver, Landmark.TARGET_PEG),
        (Gesture.RELEASE, receiver, Landmark.TARGET_PEG),
        (Gesture.RETURN, receiver, Landmark.HOME),
    ]
    return GestureScript(
        steps=[
            ScriptStep(gesture=gesture, duration=duration(gesture), arm=arm, landmark=landmark)
            for gesture, arm, landmark in plan
        ]
    )


class BoardLayout(BaseModel):
    """Landmark positions and board normal of one rendered trial."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    landmarks: dict[Landmark, np.ndarray]
    up: np.ndarray

    @classmethod
    def for_script(cls, script: GestureScript, seed: int, tilt_angle: float = 0.0) -> "BoardLayout":
        """
        Pegs sit on the side of the arm that works them, jittered by seed.

        A nonzero tilt rotates the board (landmarks and normal) about the
        board center around the lateral axis; arm home poses stay put.
        """
        giver = next((step.arm for step in script.steps if step.landmark is Landmark.SOURCE_PEG), Arm.LEFT)
        x, y, z = _length(PEG_OFFSET)
        nominal = {
            Landmark.SOURCE_PEG: np.array([_side(giver) * x, y, z]),
            Landmark.TARGET_PEG: np.array([-_side(giver) * x, y, z]),
            Landmark.HANDOVER: _length(HANDOVER),
        }
        rng = _stream(seed, _LAYOUT_STREAM)
        landmarks = {
            name: position + np.append(_length(rng.uniform(-LANDMARK_JITTER, LANDMARK_JITTER, size=2)), 0.0)
            for name, position in nominal.items()
        }
        up = BOARD_UP.copy()
        if tilt_angle != 0.0:
            rotation = Rotation.from_rotvec(tilt_angle * LATERAL)
            landmarks = {
                name: BOARD_CENTER + rotation.apply(position - BOARD_CENTER) for name, position in landmarks.items()
            }
            up = rotation.apply(up)
        return cls(landmarks=landmarks, up=up)


class RenderedTrial(BaseModel):
    """Per-frame scene state of one trial in one domain."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    positions: np.ndarray  # (N, 2, 3), arms in Arm order
    orientations: np.ndarray  # (N, 2, 3)
    grippers: np.ndarray  # (N, 2)
    object_positions: np.ndarray  # (N, 3)
    holders: np.ndarray  # (N, 2) one-hot of the arm holding the object
    labels: np.ndarray  # (N,)
    layout: BoardLayout

    def kinematics(self) -> np.ndarray:
        """(N, 14) raw kinematic rows in column order left then right."""
        columns = []
        for index in range(len(Arm)):
            columns += [self.positions[:, index], self.orientations[:, index], self.grippers[:, index, None]]
        return np.concatenate(columns, axis=1)

    def scene_state(self) -> np.ndarray:
        """(N, SCENE_STATE_DIM) inputs of the visual feature map, lengths in nominal units."""
        frames = len(self.labels)
        arm_positions = self.positions.reshape(frames, -1) / WORKSPACE_SCALE
        velocity = np.diff(arm_positions, axis=0, append=arm_positions[-1:]) * VELOCITY_GAIN
        pegs = np.concatenate([self.layout.landmarks[Landmark.SOURCE_PEG], self.layout.landmarks[Landmark.TARGET_PEG]])
        return np.concatenate(
            [
                arm_positions,
                normalize_gripper(self.grippers),
                velocity,
                self.object_positions / WORKSPACE_SCALE,
                self.holders,
                np.broadcast_to(pegs / WORKSPACE_SCALE, (frames, pegs.size)),
            ],
            axis=1,
        )


def _ease(frames: int) -> np.ndarray:
    u = np.arange(1, frames + 1) / frames
    return 3.0 * u**2 - 2.0 * u**3


def _render(script: GestureScript, layout: BoardLayout) -> RenderedTrial:
    arms = list(Arm)
    home = _length([HOME[arm] for arm in arms])
    position = home.copy()
    orientation = np.tile(np.array(BASE_ORIENTATION), (len(arms), 1))
    gripper = np.full(len(arms), GRIPPER_OPEN)
    object_position = layout.landmarks[Landmark.SOURCE_PEG].copy()
    holder: int | None = None
    up = layout.up

    chunks: dict[str, list[np.ndarray]] = {key: [] for key in ("pos", "ori", "grip", "obj", "hold", "label")}
    for step in script.steps:
        a = arms.index(step.arm)
        goal_pos, goal_ori, goal_grip = position.copy(), orientation.copy(), gripper.copy()
        next_holder = holder

        if step.gesture is Gesture.APPROACH:
            goal_pos[a] = layout.landmarks[step.landmark] + _length(step.hover_height) * up
        elif step.gesture is Gesture.GRASP:
            goal_pos[a] = position[a] - _length(GRASP_DESCENT) * up
            goal_grip[a] = GRIPPER_CLOSED
            goal_ori[a, 2] += GRASP_ROLL
            next_holder = a
        elif step.gesture is Gesture.LIFT:
            goal_pos[a] = position[a] + _length(step.lift_height) * up
        elif step.gesture is Gesture.TRANSFER:
            delta = layout.landmarks[step.landmark] - position[a]
            goal_pos[a] = position[a] + delta - np.dot(delta, up) * up
        elif step.gesture is Gesture.EXCHANGE:
            other = 1 - a
            goal_pos[other] = position[other] + _length(EXCHANGE_REACH) * _side(step.arm) * LATERAL
            goal_pos[a] = goal_pos[other] + _length(EXCHANGE_GAP) * _side(step.arm) * LATERAL
            goal_grip[a], goal_grip[other] = GRIPPER_CLOSED, GRIPPER_OPEN
            goal_ori[a, 0] = -_side(step.arm) * EXCHANGE_YAW
            goal_ori[other, 0] = _side(step.arm) * EXCHANGE_YAW
            next_holder = a
        elif step.gesture is Gesture.RELEASE:
            goal_pos[a] = position[a] - _length(GRASP_DESCENT) * up
            goal_grip[a] = GRIPPER_OPEN
            goal_ori[a, 2] -= GRASP_ROLL
            next_holder = None
        else:
            goal_pos = home.copy()
            goal_ori = np.tile(np.array(BASE_ORIENTATION), (len(arms), 1))
            goal_grip = np.full(len(arms), GRIPPER_OPEN)

        weights = _ease(step.duration)
        pos = position + weights[:, None, None] * (goal_pos - position)
        ori = orientation + weights[:, None, None] * (goal_ori - orientation)
        grip = gripper + weights[:, None] * (goal_grip - gripper)
        if holder is not None:
            obj = pos[:, holder].copy()
        else:
            obj = np.tile(object_position, (step.duration, 1))
        hold = np.zeros((step.duration, len(arms)))
        if holder is not None:
            hold[:, holder] = 1.0

        for key, value in zip(chunks, (pos, ori, grip, obj, hold, np.full(step.duration, int(step.gesture)))):
            chunks[key].append(value)
        position, orientation, gripper, object_position = pos[-1], ori[-1], grip[-1], obj[-1]
        holder = next_holder

    stacked = {key: np.concatenate(values) for key, values in chunks.items()}
    return RenderedTrial(
        positions=stacked["pos"],
        orientations=stacked["ori"],
        grippers=stacked["grip"],
        object_positions=stacked["obj"],
        holders=stacked["hold"],
        labels=stacked["label"].astype(np.int64),
        layout=layout,
    )


def _apply_geometry_shift(trial: RenderedTrial, shift: ShiftConfig) -> RenderedTrial:
    # Scale about the board center, then translate; both act on every position
    def move(points: np.ndarray) -> np.ndarray:
        if shift.scale_factor != 1.0:
            points = BOARD_CENTER + shift.scale_factor * (points - BOARD_CENTER)
        if shift.translation_offset != (0.0, 0.0, 0.0):
            points = points + np.asarray(shift.translation_offset)
        return points

    orientations = trial.orientations
    if shift.tilt_angle != 0.0:
        orientations = orientations.copy()
        orientations[:, :, 1] += shift.tilt_angle
    layout = BoardLayout(
        landmarks={name: move(position) for name, position in trial.layout.landmarks.items()},
        up=trial.layout.up,
    )
    return trial.model_copy(
        update={
            "positions": move(trial.positions),
            "object_positions": move(trial.object_positions),
            "orientations": orientations,
            "layout": layout,
        }
    )


def projection_matrix(visual_dim: int, projection_seed: int = PROJECTION_SEED) -> np.ndarray:
    """Fixed (SCENE_STATE_DIM, visual_dim) scene-to-feature map shared by both domains."""
    rng = np.random.default_rng(projection_seed)
    return rng.normal(0.0, 1.0 / np.sqrt(SCENE_STATE_DIM), size=(SCENE_STATE_DIM, visual_dim))


def generate_trial(
    script: GestureScript,
    domain: Domain,
    shift_config: ShiftConfig,
    seed: int,
    trial_id: str | None = None,
    visual_dim: int | None = None,
    projection_seed: int = PROJECTION_SEED,
) -> list[Segment]:
    """
    Render one scripted trial as labeled segments.

    Args:
        script: Gestures and motion primitive parameters
        domain: Simulator trials ignore ``shift_config``
        shift_config: Real-domain shift
        seed: Drives landmark jitter and every noise stream
        trial_id: Defaults to ``trial<seed>``
        visual_dim: Visual feature width
        projection_seed: Seed of the scene-to-feature map

    Returns:
        One segment per maximal run of a gesture, in frame order
    """
    trial_id = trial_id or f"trial{seed}"
    visual_dim = visual_dim or settings.SYNTH_VISUAL_DIM
    shifted = domain is Domain.REAL and not shift_config.is_identity

    layout = BoardLayout.for_script(script, seed, shift_config.tilt_angle if shifted else 0.0)
    trial = _render(script, layout)
    if shifted:
        trial = _apply_geometry_shift(trial, shift_config)

    kinematics = trial.kinematics()
    if shifted and shift_config.kin_noise_sigma > 0.0:
        noise = _stream(seed, _KIN_NOISE_STREAM).normal(0.0, shift_config.kin_noise_sigma, size=trial.positions.shape)
        trial = trial.model_copy(update={"positions": trial.positions + noise})
        kinematics = trial.kinematics()

    visual = trial.scene_state() @ projection_matrix(visual_dim, projection_seed)
    visual = visual + _stream(seed, _VISUAL_NOISE_STREAM).normal(0.0, VISUAL_NOISE_SIGMA, size=visual.shape)
    if shifted and not shift_config.vis_shift.is_identity:
        matrix, bias = shift_config.vis_shift.realize(visual_dim)
        visual = visual @ matrix.T + bias
        if shift_config.vis_shift.noise_sigma > 0.0:
            rng = _stream(seed, _VIS_SHIFT_STREAM)
            visual = visual + rng.normal(0.0, shift_config.vis_shift.noise_sigma, size=visual.shape)

    return [
        Segment(
            segment_id=segment_id(domain, trial_id, start),
            trial_id=trial_id,
            domain_label=domain,
            gesture_label=Gesture(label),
            frame_index_range=(start, stop - 1),
            kinematics=kinematics[start:stop],
            visual=visual[start:stop],
        )
        for start, stop, label in segment_runs(trial.labels)
    ]


class SyntheticDataset(BaseModel):
    """Paired simulator/real segments of one generated benchmark."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    shift: ShiftConfig
    n_trials: int
    seed: int
    visual_dim: int
    simulator: list[Segment]
    real: list[Segment]

    def segments(self, domain: Domain) -> list[Segment]:
        return self.simulator if domain is Domain.SIMULATOR else self.real

    @property
    def all_segments(self) -> list[Segment]:
        return self.simulator + self.real


def trial_seeds(n_trials: int, seed: int) -> list[int]:
    """Per-trial seeds; trial ``i`` of both domains shares seed ``i``."""
    return [int(value) for value in np.random.SeedSequence(seed).generate_state(n_trials)]


def generate_dataset(
    shift_config: ShiftConfig,
    n_trials: int | None = None,
    seed: int = 0,
    visual_dim: int | None = None,
) -> SyntheticDataset:
    """
    Generate paired simulator and real trials.

    Trial ``i`` is rendered in both domains from the same script and seed, so
    the real version differs from the simulator one only by the shift.
    Transfer direction alternates between trials.
    """
    n_trials = n_trials or settings.SYNTH_TRIALS
    visual_dim = visual_dim or settings.SYNTH_VISUAL_DIM
    directions = list(TransferDirection)
    simulator: list[Segment] = []
    real: list[Segment] = []
    for index, trial_seed in enumerate(trial_seeds(n_trials, seed)):
        script = default_script(trial_seed, directions[index % len(directions)])
        trial_id = f"trial{index:03d}"
        for domain, pool in ((Domain.SIMULATOR, simulator), (Domain.REAL, real)):
            pool.extend(generate_trial(script, domain, shift_config, trial_seed, trial_id, visual_dim))

    logger.info(
        "Generated %d trials (%d simulator / %d real segments, visual dim %d)",
        n_trials,
        len(simulator),
        len(real),
        visual_dim,
    )
    return SyntheticDataset(
        shift=shift_config,
        n_trials=n_trials,
        seed=seed,
        visual_dim=visual_dim,
        simulator=simulator,
        real=real,
    )


def tables_from_segments(segments: list[Segment]) -> tuple[pd.DataFrame, pd.DataFrame, pd.DataFrame]:
    """Kinematics, features and labels tables in the ingestion layout."""
    if not segments:
        raise ValueError("no segments to tabulate")
    unlabeled = [segment.segment_id for segment in segments if segment.gesture_label is None]
    if unlabeled:
        raise ValueError(f"cannot tabulate unlabeled segments: {unlabeled[:3]}")
    keys = pd.DataFrame(
        [
            (segment.trial_id, frame)
            for segment in segments
            for frame in range(segment.frame_index_range[0], segment.frame_index_range[1] + 1)
        ],
        columns=["trial_id", "frame"],
    )
    kinematics = np.concatenate([segment.kinematics for segment in segments])
    visual = np.concatenate([segment.visual for segment in segments])
    labels = np.concatenate([np.full(segment.length, int(segment.gesture_label)) for segment in segments])

    feature_columns = [f"f{index:04d}" for index in range(visual.shape[1])]
    return (
        pd.concat([keys, pd.DataFrame(kinematics, columns=KINEMATIC_COLUMNS)], axis=1),
        pd.concat([keys, pd.DataFrame(visual, columns=feature_columns)], axis=1),
        keys.assign(gesture=labels),
    )


def write_dataset(dataset: SyntheticDataset, out_dir: Path) -> list[Path]:
    """Write ``simulator/`` and ``real/`` table sets under ``out_dir``."""
    paths = []
    for domain, subdir in DOMAIN_DIRS.items():
        paths += write_tables(Path(out_dir) / subdir, *tables_from_segments(dataset.segments(domain)))
    return paths
