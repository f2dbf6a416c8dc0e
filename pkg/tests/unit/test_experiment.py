"""
Unit tests for experiment configs, run artifacts and the command functions.
"""

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
import torch

from services.gesture_adaptation.engines.network import GestureAdaptationNet
from services.gesture_adaptation.evaluation.metrics import read_report
from services.gesture_adaptation.models.configs import DatasetSource, ExperimentConfig, Method
from services.gesture_adaptation.models.segment import Domain
from services.gesture_adaptation.utils.errors import CheckpointMismatchError, UnknownPresetError
from services.gesture_adaptation.workflow.artifacts import (
    CheckpointMeta,
    config_hash,
    dataset_fingerprint,
    load_checkpoint,
    read_checkpoint_meta,
    save_checkpoint,
)
from services.gesture_adaptation.workflow.experiment import (
    MDOK_FEATURE_COLUMNS,
    ExperimentRunner,
    apply_overrides,
    cmd_ablate,
    cmd_evaluate,
    cmd_export_mdok,
    cmd_generate,
    cmd_sweep_lambda,
    cmd_train,
    experiment_hash,
    load_experiment_config,
    prepare_dataset,
    usable_segments,
)
from services.gesture_adaptation.workflow.state_machine import RunState, RunStateMachine
from tests.fixtures.builders import make_pool


def _with(config: ExperimentConfig, method: Method | None = None, **train) -> ExperimentConfig:
    update = {"train": config.train.model_copy(update=train)}
    if method is not None:
        update["method"] = method
    return config.model_copy(update=update)


def _epoch_log_header(run_dir) -> list[str]:
    return (run_dir / "epoch_log.csv").read_text().splitlines()[0].split(",")


def _files(directory) -> dict[str, bytes]:
    return {str(p.relative_to(directory)): p.read_bytes() for p in sorted(directory.rglob("*")) if p.is_file()}


def test_overrides_set_dotted_keys_without_mutation() -> None:
    payload = {"train": {"epochs": 30}, "seeds": [0]}

    merged = apply_overrides(payload, {"train.epochs": 2, "model.encoder.hidden_dim": 8, "seeds": [1, 2]})

    assert merged == {"train": {"epochs": 2}, "model": {"encoder": {"hidden_dim": 8}}, "seeds": [1, 2]}
    assert payload == {"train": {"epochs": 30}, "seeds": [0]}


def test_config_file_with_overrides(tmp_path) -> None:
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({"name": "desk", "method": "mdok", "train": {"lambda_mix": 0.5}}))

    config = load_experiment_config(path, {"train.epochs": 3, "folds": [1]})

    assert config.name == "desk"
    assert config.method is Method.MDOK
    assert config.train.lambda_mix == 0.5
    assert config.train.epochs == 3
    assert config.fold_indices == [1]


def test_config_validation() -> None:
    with pytest.raises(ValueError, match="seeds must be non-empty"):
        load_experiment_config(None, {"seeds": []})
    with pytest.raises(ValueError, match="fold 5 outside"):
        load_experiment_config(None, {"folds": [5]})
    with pytest.raises(ValueError):
        load_experiment_config(None, {"method": "mdok+everything"})


def test_experiment_hash_ignores_output_directory(experiment_config) -> None:
    moved = experiment_config.model_copy(update={"output_dir": "/elsewhere"})

    assert experiment_hash(moved) == experiment_hash(experiment_config)
    assert experiment_hash(_with(experiment_config, epochs=7)) != experiment_hash(experiment_config)
    assert len(config_hash({"a": 1})) == 16


def test_short_segments_are_dropped(caplog: pytest.LogCaptureFixture) -> None:
    segments = make_pool(Domain.SIMULATOR, count=2, length=2) + make_pool(Domain.SIMULATOR, count=1, length=5)

    with caplog.at_level(logging.WARNING):
        kept = usable_segments(segments)

    assert [s.length for s in kept] == [5]
    assert "Dropping 2 segments" in caplog.text


def test_fingerprint_is_order_independent_and_content_sensitive() -> None:
    segments = make_pool(Domain.SIMULATOR, count=3)
    changed = make_pool(Domain.SIMULATOR, count=3, seed=1)

    assert dataset_fingerprint(segments) == dataset_fingerprint(segments[::-1])
    assert dataset_fingerprint(segments) != dataset_fingerprint(changed)


def test_prepare_synthetic_dataset() -> None:
    source = DatasetSource(kind="synthetic", preset="none", n_trials=2, seed=0, visual_dim=5)

    first, second = prepare_dataset(source), prepare_dataset(source)

    assert first.fingerprint == second.fingerprint
    assert first.visual_dim == 5
    assert len(first.simulator) == len(first.real) == 16
    assert first.segments(Domain.REAL) is first.real


def test_generate_is_byte_identical(tmp_path) -> None:
    first = cmd_generate("combined", 3, 4, tmp_path / "a", visual_dim=6)
    cmd_generate("combined", 3, 4, tmp_path / "b", visual_dim=6)

    assert _files(tmp_path / "a") == _files(tmp_path / "b")
    assert {"manifest.json", "segments.json", "simulator/kinematics.csv", "real/labels.csv"} <= set(
        _files(tmp_path / "a")
    )
    assert first.simulator_segments == first.real_segments == 24


def test_generate_none_preset_gives_identical_domains(tmp_path) -> None:
    cmd_generate("none", 5, 0, tmp_path, visual_dim=4)

    for table in ("kinematics.csv", "features.csv", "labels.csv"):
        assert (tmp_path / "simulator" / table).read_bytes() == (tmp_path / "real" / table).read_bytes()


def test_manifest_records_the_shift(tmp_path) -> None:
    result = cmd_generate("combined", 2, 1, tmp_path, visual_dim=4)

    manifest = json.loads(result.manifest.read_text())

    assert manifest["config_hash"] == result.config_hash
    assert manifest["shift"]["translation_offset"] == [0.2, -0.1, 0.05]
    assert manifest["shift"]["scale_factor"] == 1.3
    assert manifest["shift"]["tilt_angle"] == 0.15
    assert manifest["shift"]["vis_shift"]["gain"] == 0.9
    assert manifest["dataset"]["preset"] == "combined"


def test_generate_rejects_unknown_preset(tmp_path) -> None:
    with pytest.raises(UnknownPresetError):
        cmd_generate("warp", 2, 0, tmp_path)


def test_zero_epochs_writes_the_initial_network(experiment_config) -> None:
    config = _with(experiment_config, Method.BASELINE_DIRECTION, epochs=0)

    summary = cmd_train(config)

    run_dir = summary.output_dir / "fold0" / "seed0"
    model, meta = load_checkpoint(run_dir / "checkpoint.pt")
    fresh = GestureAdaptationNet(ExperimentRunner(config).model_config_for(Method.BASELINE_DIRECTION, 0))
    for name, tensor in fresh.state_dict().items():
        assert torch.equal(model.state_dict()[name], tensor), name
    assert meta.epoch == 0
    assert _epoch_log_header(run_dir) == ["epoch", "L_C", "source_acc"]


@pytest.mark.parametrize(
    "method, columns",
    [
        (Method.MDOK, ["epoch", "L_C", "L_K-D", "source_acc"]),
        (Method.MDOK_KVATT, ["epoch", "L_C", "L_K-D", "L_KV-D", "source_acc"]),
        (Method.MDOK_VISUAL, ["epoch", "L_C", "L_K-D", "L_V-D", "source_acc"]),
    ],
)
def test_method_decides_the_loss_columns(experiment_config, method: Method, columns: list[str]) -> None:
    summary = cmd_train(_with(experiment_config, method))

    run_dir = summary.output_dir / "fold0" / "seed0"
    assert _epoch_log_header(run_dir) == columns
    log = pd.read_csv(run_dir / "epoch_log.csv")
    assert len(log) == 1 and np.isfinite(log[columns[1:]].to_numpy()).all()


def test_every_artifact_carries_the_config_hash(experiment_config) -> None:
    runner = ExperimentRunner(experiment_config)

    summary = runner.run_method(experiment_config.method)

    run_dir = summary.output_dir / "fold0" / "seed0"
    assert summary.config_hash == runner.run_hash(experiment_config.method, experiment_config.train)
    assert read_checkpoint_meta(run_dir / "checkpoint.pt").config_hash == summary.config_hash
    assert json.loads((run_dir / "run.json").read_text())["config_hash"] == summary.config_hash
    assert read_report(run_dir / "report_real.json").config_hash == summary.config_hash
    assert read_report(summary.output_dir / "report_simulator.json").config_hash == summary.config_hash
    assert json.loads((summary.output_dir / "config.json").read_text())["config_hash"] == summary.config_hash
    assert runner.state_machine.get_state() is RunState.REPORTED
    assert runner.state_machine.get_history()[:3] == [RunState.INITIALIZED, RunState.DATA_READY, RunState.TRAINING]


def test_failed_run_reports_its_stage(
    experiment_config, monkeypatch, caplog: pytest.LogCaptureFixture
) -> None:
    def diverge(*args, **kwargs):
        raise RuntimeError("loss exploded")

    monkeypatch.setattr("services.gesture_adaptation.workflow.experiment.train", diverge)
    runner = ExperimentRunner(experiment_config)

    with caplog.at_level(logging.ERROR), pytest.raises(RuntimeError, match="loss exploded") as excinfo:
        runner.run_method(Method.MDOK)

    assert excinfo.value.__notes__ == ["while training fold 0 seed 0"]
    assert "mdok failed while training fold 0 seed 0" in caplog.text
    assert runner.state_machine.get_history()[-2:] == [RunState.TRAINING, RunState.FAILED]


def test_stage_description_follows_transitions() -> None:
    stages = RunStateMachine()
    assert stages.describe() == "preparing the dataset"

    stages.transition(RunState.EVALUATING, "fold 2 seed 1")
    error = ValueError("bad report")

    assert stages.fail(error) == "evaluating fold 2 seed 1"
    assert error.__notes__ == ["while evaluating fold 2 seed 1"]
    assert stages.get_state() is RunState.FAILED


def test_intermediate_checkpoints(experiment_config) -> None:
    config = _with(experiment_config, epochs=2, checkpoint_every=1)

    summary = cmd_train(config)

    run_dir = summary.output_dir / "fold0" / "seed0"
    assert read_checkpoint_meta(run_dir / "checkpoint_epoch001.pt").epoch == 1
    assert read_checkpoint_meta(run_dir / "checkpoint_epoch002.pt").epoch == 2


def test_evaluate_report_round_trips(experiment_config, tmp_path) -> None:
    summary = cmd_train(experiment_config)
    checkpoint = summary.runs[0].checkpoint

    report = cmd_evaluate([checkpoint], domain_filter=Domain.REAL, out_dir=tmp_path / "eval")

    assert read_report(tmp_path / "eval" / "report_real_test.json") == report
    assert report.accuracy == pytest.approx(summary.real_report.accuracy)
    assert report.config_hash == summary.config_hash
    assert report.seeds == [0]


def test_evaluate_rejects_another_dataset(experiment_config) -> None:
    summary = cmd_train(experiment_config)
    other = experiment_config.dataset.model_copy(update={"seed": 99})

    with pytest.raises(CheckpointMismatchError, match="trained on dataset"):
        cmd_evaluate([summary.runs[0].checkpoint], dataset=other)


def test_checkpoint_layout_mismatch_detected(tiny_model, tmp_path) -> None:
    meta = CheckpointMeta(
        config_hash="0" * 16,
        method=Method.MDOK_KVATT,
        model=tiny_model.config,
        dataset_fingerprint="f" * 16,
        fold=0,
        seed=0,
        epoch=0,
        lambda_mix=0.8,
        train_trials=[],
        test_trials=[],
    )
    path = save_checkpoint(tmp_path / "checkpoint.pt", tiny_model, meta)
    payload = torch.load(path, weights_only=True)
    payload["meta"]["model"]["encoder"]["hidden_dim"] = 9
    torch.save(payload, path)

    with pytest.raises(CheckpointMismatchError, match="parameter layout"):
        load_checkpoint(path)
    with pytest.raises(CheckpointMismatchError, match="trained on dataset"):
        load_checkpoint(path, expected_fingerprint="0" * 16)


def test_sweep_with_one_value(experiment_config) -> None:
    table = cmd_sweep_lambda(experiment_config, [0.5])

    assert len(table) == 1
    assert table.loc[0, "lambda"] == 0.5
    output_dir = ExperimentRunner(experiment_config).output_dir
    plot = pd.read_csv(output_dir / "lambda_sweep_plot.csv")
    assert list(plot.columns) == ["lambda", "acc_mean", "acc_std"]
    assert plot["acc_mean"].between(0, 1).all()
    assert (output_dir / "mdok+kvatt" / "lambda_0.5" / "report_real.json").exists()


def test_sweep_rejects_values_outside_unit_interval(experiment_config) -> None:
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        cmd_sweep_lambda(experiment_config, [0.5, 1.5])
    with pytest.raises(ValueError, match="at least one"):
        cmd_sweep_lambda(experiment_config, [])


def test_ablation_gains_are_differences_to_the_baseline(experiment_config) -> None:
    table = cmd_ablate(experiment_config)

    assert table["method"].tolist() == ["baseline-position", "baseline-direction", "mdok", "mdok+kvatt"]
    baseline = table.loc[table["method"] == "baseline-position"].iloc[0]
    for _, row in table.iterrows():
        assert row["acc_gain"] == row["accuracy_mean"] - baseline["accuracy_mean"]
        assert row["f1_gain"] == row["f1_mean"] - baseline["f1_mean"]
    written = pd.read_csv(ExperimentRunner(experiment_config).output_dir / "ablation.csv")
    assert len(written) == 4


def test_export_direction_frames(tmp_path) -> None:
    source = DatasetSource(kind="synthetic", preset="scale", n_trials=2, seed=0, visual_dim=4)

    path = cmd_export_mdok(source, tmp_path / "mdok.csv")

    table = pd.read_csv(path)
    prepared = prepare_dataset(source)
    assert len(table) == sum(s.length - 1 for s in prepared.all_segments)
    assert list(table.columns) == ["segment_id", "trial_id", "domain", "gesture", "frame", *MDOK_FEATURE_COLUMNS]
    norms = np.linalg.norm(table[["left_dx", "left_dy", "left_dz"]].to_numpy(), axis=1)
    assert np.all((np.abs(norms - 1) < 1e-6) | (norms == 0))


@pytest.mark.parametrize(
    "path", sorted((Path(__file__).parents[2] / "config" / "experiments").glob("*.json")), ids=lambda p: p.stem
)
def test_shipped_experiment_configs_validate(path: Path) -> None:
    config = load_experiment_config(path)

    assert config.name == path.stem.replace("_", "-")
