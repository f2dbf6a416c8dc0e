"""
Unit tests for the synthetic two-domain generator and its shift presets.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from services.gesture_adaptation.engines.mdok import transform_kinematics
from services.gesture_adaptation.models.segment import Arm, Domain, Gesture
from services.gesture_adaptation.models.shift import Landmark, ScriptStep, ShiftConfig, TransferDirection
from services.gesture_adaptation.synth import generator
from services.gesture_adaptation.synth.generator import (
    default_script,
    generate_dataset,
    generate_trial,
    tables_from_segments,
)
from services.gesture_adaptation.synth.presets import TRANSLATION_OFFSET, preset, preset_names
from services.gesture_adaptation.utils.errors import UnknownPresetError

VISUAL_DIM = 6


def _pair(shift: ShiftConfig, seed: int = 5, direction: TransferDirection = TransferDirection.LEFT_TO_RIGHT):
    script = default_script(seed, direction)
    simulator = generate_trial(script, Domain.SIMULATOR, shift, seed, "trial", VISUAL_DIM)
    real = generate_trial(script, Domain.REAL, shift, seed, "trial", VISUAL_DIM)
    return simulator, real


def _mean_direction(segment, arm: Arm) -> np.ndarray:
    directions = transform_kinematics(segment.kinematics)[:, arm.offset : arm.offset + 3]
    return directions.mean(axis=0)


def test_identity_shift_gives_identical_domains() -> None:
    simulator, real = _pair(ShiftConfig())

    assert len(simulator) == len(real)
    for sim_segment, real_segment in zip(simulator, real):
        assert real_segment.domain_label is Domain.REAL
        assert sim_segment.frame_index_range == real_segment.frame_index_range
        np.testing.assert_array_equal(sim_segment.kinematics, real_segment.kinematics)
        np.testing.assert_array_equal(sim_segment.visual, real_segment.visual)


def test_translation_moves_every_position_by_the_offset() -> None:
    simulator, real = _pair(preset("translation"))

    offset = np.asarray(TRANSLATION_OFFSET)
    for sim_segment, real_segment in zip(simulator, real):
        for arm in Arm:
            np.testing.assert_array_equal(real_segment.arm_positions(arm), sim_segment.arm_positions(arm) + offset)
        np.testing.assert_array_equal(real_segment.kinematics[:, 3:7], sim_segment.kinematics[:, 3:7])


@pytest.mark.parametrize("direction", list(TransferDirection))
def test_approach_and_lift_point_in_opposite_directions(direction: TransferDirection) -> None:
    segments, _ = _pair(ShiftConfig(), seed=8, direction=direction)
    by_gesture = {s.gesture_label: s for s in segments}

    approach = _mean_direction(by_gesture[Gesture.APPROACH], direction.giver)
    lift = _mean_direction(by_gesture[Gesture.LIFT], direction.giver)

    assert float(np.dot(approach, lift)) < 0


def test_script_covers_all_gestures_in_order() -> None:
    script = default_script(0)

    assert script.gestures == set(Gesture)
    assert [step.gesture for step in script.steps][:3] == [Gesture.APPROACH, Gesture.GRASP, Gesture.LIFT]
    assert all(step.duration >= 2 for step in script.steps)


def test_invalid_gesture_id_rejected() -> None:
    with pytest.raises(ValidationError, match="invalid gesture id 9"):
        ScriptStep(gesture=9, duration=10, arm=Arm.LEFT, landmark=Landmark.HOME)


def test_segments_follow_the_script() -> None:
    script = default_script(3)
    segments = generate_trial(script, Domain.SIMULATOR, ShiftConfig(), seed=3, visual_dim=VISUAL_DIM)

    assert [s.gesture_label for s in segments] == [step.gesture for step in script.steps]
    assert [s.length for s in segments] == [step.duration for step in script.steps]
    assert segments[0].trial_id == "trial3"
    assert all(s.visual_dim == VISUAL_DIM for s in segments)


def test_every_class_appears_in_a_dataset() -> None:
    dataset = generate_dataset(preset("combined"), n_trials=10, seed=1, visual_dim=VISUAL_DIM)

    assert len(dataset.simulator) >= 70
    for domain in Domain:
        assert {s.gesture_label for s in dataset.segments(domain)} == set(Gesture)


def test_generation_is_deterministic() -> None:
    first = generate_dataset(preset("combined"), n_trials=3, seed=9, visual_dim=VISUAL_DIM)
    second = generate_dataset(preset("combined"), n_trials=3, seed=9, visual_dim=VISUAL_DIM)

    for ours, theirs in zip(first.all_segments, second.all_segments):
        assert ours.segment_id == theirs.segment_id
        np.testing.assert_array_equal(ours.kinematics, theirs.kinematics)
        np.testing.assert_array_equal(ours.visual, theirs.visual)


def test_different_seeds_give_different_trials() -> None:
    first = generate_dataset(ShiftConfig(), n_trials=1, seed=0, visual_dim=VISUAL_DIM)
    second = generate_dataset(ShiftConfig(), n_trials=1, seed=1, visual_dim=VISUAL_DIM)

    assert not np.array_equal(first.simulator[0].kinematics, second.simulator[0].kinematics)


@pytest.mark.parametrize("name", ["translation", "scale"])
def test_direction_features_survive_translation_and_scale(name: str) -> None:
    """Direction-oriented features of paired segments agree across the shift."""
    dataset = generate_dataset(preset(name), n_trials=4, seed=2, visual_dim=VISUAL_DIM)

    for sim_segment, real_segment in zip(dataset.simulator, dataset.real):
        assert not np.array_equal(sim_segment.kinematics, real_segment.kinematics)
        np.testing.assert_allclose(
            transform_kinematics(real_segment.kinematics),
            transform_kinematics(sim_segment.kinematics),
            atol=1e-6,
        )


def test_tilt_changes_orientation_and_layout() -> None:
    simulator, real = _pair(preset("tilt"))

    pitch = 4
    np.testing.assert_allclose(real[0].kinematics[:, pitch], simulator[0].kinematics[:, pitch] + 0.15)
    assert not np.allclose(real[1].arm_positions(Arm.LEFT), simulator[1].arm_positions(Arm.LEFT))


def test_kinematic_noise_only_touches_real_positions() -> None:
    shift = ShiftConfig(kin_noise_sigma=0.01)
    simulator, real = _pair(shift)
    reference, _ = _pair(ShiftConfig())

    for sim_segment, real_segment, clean in zip(simulator, real, reference):
        np.testing.assert_array_equal(sim_segment.kinematics, clean.kinematics)
        assert not np.array_equal(real_segment.arm_positions(Arm.RIGHT), clean.arm_positions(Arm.RIGHT))
        np.testing.assert_array_equal(real_segment.kinematics[:, 3:7], clean.kinematics[:, 3:7])


def test_visual_shift_leaves_kinematics_alone() -> None:
    shift = preset("combined").model_copy(
        update={"translation_offset": (0.0, 0.0, 0.0), "scale_factor": 1.0, "tilt_angle": 0.0}
    )
    simulator, real = _pair(shift)

    for sim_segment, real_segment in zip(simulator, real):
        np.testing.assert_array_equal(sim_segment.kinematics, real_segment.kinematics)
        assert not np.allclose(sim_segment.visual, real_segment.visual)


def test_tables_follow_the_ingestion_layout() -> None:
    simulator, _ = _pair(ShiftConfig())

    kinematics, features, labels = tables_from_segments(simulator)

    total = sum(s.length for s in simulator)
    assert list(kinematics.columns[:3]) == ["trial_id", "frame", "left_x"]
    assert len(kinematics) == len(features) == len(labels) == total
    assert list(features.columns[2:]) == [f"f{i:04d}" for i in range(VISUAL_DIM)]
    assert labels["frame"].tolist() == list(range(total))


def test_preset_values() -> None:
    assert preset("none").is_identity
    translation = preset("translation")
    assert translation.translation_offset == (0.2, -0.1, 0.05)
    assert translation.model_copy(update={"translation_offset": (0.0, 0.0, 0.0)}).is_identity
    assert preset("scale").scale_factor == 1.3
    assert preset("tilt").tilt_angle == 0.15

    combined = preset("combined")
    assert combined.translation_offset == (0.2, -0.1, 0.05)
    assert combined.scale_factor == 1.3
    assert combined.tilt_angle == 0.15
    assert not combined.vis_shift.is_identity


def test_unknown_preset_lists_the_available_ones() -> None:
    with pytest.raises(UnknownPresetError) as excinfo:
        preset("rotation")

    for name in preset_names():
        assert name in str(excinfo.value)


def test_shift_config_validation() -> None:
    with pytest.raises(ValidationError):
        ShiftConfig(scale_factor=0.0)
    with pytest.raises(ValidationError):
        ShiftConfig(kin_noise_sigma=-0.1)


def test_translated_arms_leave_the_simulator_workspace() -> None:
    dataset = generate_dataset(preset("translation"), n_trials=4, seed=2, visual_dim=VISUAL_DIM)

    for arm in Arm:
        simulator_x = np.concatenate([s.arm_positions(arm)[:, 0] for s in dataset.simulator])
        real_x = np.concatenate([s.arm_positions(arm)[:, 0] for s in dataset.real])
        assert real_x.min() > simulator_x.max()


def test_workspace_scale_leaves_direction_features_unchanged(monkeypatch) -> None:
    script = default_script(4)
    reference = generate_trial(script, Domain.SIMULATOR, ShiftConfig(), 4, "trial", VISUAL_DIM)

    monkeypatch.setattr(generator, "WORKSPACE_SCALE", 1.0)
    full_size = generate_trial(script, Domain.SIMULATOR, ShiftConfig(), 4, "trial", VISUAL_DIM)

    for small, large in zip(reference, full_size):
        assert not np.allclose(small.kinematics[:, :3], large.kinematics[:, :3])
        np.testing.assert_allclose(
            transform_kinematics(small.kinematics), transform_kinematics(large.kinematics), atol=1e-6
        )
        np.testing.assert_allclose(small.visual, large.visual, atol=1e-8)
