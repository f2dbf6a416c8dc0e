"""
Directional checks on the synthetic benchmark at desk scale.

These train full models for several seeds and take minutes on a CPU; run
them with ``pytest --runslow``. The table-dataset check additionally needs
``GESTURE_DA_TABLES_DIR`` pointing at a directory with simulator/ and real/
table sets.
"""

import os
from pathlib import Path

import pytest

from services.gesture_adaptation.models.configs import DatasetSource, ExperimentConfig, Method
from services.gesture_adaptation.workflow.experiment import ExperimentRunner, cmd_sweep_lambda

pytestmark = pytest.mark.slow

SEEDS = [0, 1, 2]


def _config(preset_name: str, tmp_path: Path, method: Method = Method.MDOK_KVATT) -> ExperimentConfig:
    return ExperimentConfig(
        name=f"directional-{preset_name}",
        dataset=DatasetSource(kind="synthetic", preset=preset_name),
        method=method,
        folds=[0],
        seeds=SEEDS,
        output_dir=str(tmp_path / preset_name),
    )


def _accuracies(runner: ExperimentRunner, *methods: Method) -> dict[Method, float]:
    return {method: runner.run_method(method).real_report.accuracy for method in methods}


def test_without_shift_real_matches_simulator(tmp_path) -> None:
    runner = ExperimentRunner(_config("none", tmp_path))

    summary = runner.run_method(Method.BASELINE_DIRECTION)

    assert abs(summary.real_report.accuracy - summary.simulator_report.accuracy) <= 0.03


def test_directions_survive_a_translated_workspace(tmp_path) -> None:
    runner = ExperimentRunner(_config("translation", tmp_path))

    position = runner.run_method(Method.BASELINE_POSITION)
    direction = runner.run_method(Method.BASELINE_DIRECTION)

    assert position.simulator_report.accuracy - position.real_report.accuracy >= 0.15
    assert direction.real_report.accuracy - position.real_report.accuracy >= 0.05


def test_alignment_ordering_under_combined_shift(tmp_path) -> None:
    runner = ExperimentRunner(_config("combined", tmp_path))

    accuracy = _accuracies(
        runner, Method.BASELINE_POSITION, Method.BASELINE_DIRECTION, Method.MDOK, Method.MDOK_KVATT
    )

    assert accuracy[Method.MDOK_KVATT] >= accuracy[Method.MDOK] >= accuracy[Method.BASELINE_DIRECTION]
    assert accuracy[Method.MDOK_KVATT] - accuracy[Method.BASELINE_POSITION] >= 0.05


def test_lambda_sweep_rises_from_low_mixture(tmp_path) -> None:
    table = cmd_sweep_lambda(_config("combined", tmp_path), [0.2, 0.5, 0.7, 0.8])

    by_lambda = dict(zip(table["lambda"], table["acc_mean"]))
    assert set(by_lambda) == {0.2, 0.5, 0.7, 0.8}
    assert by_lambda[0.5] > by_lambda[0.2]
    assert (tmp_path / "combined" / "lambda_sweep_plot.csv").exists()


@pytest.mark.skipif(not os.environ.get("GESTURE_DA_TABLES_DIR"), reason="GESTURE_DA_TABLES_DIR not set")
def test_table_dataset_end_to_end(tmp_path) -> None:
    config = ExperimentConfig(
        name="tables",
        dataset=DatasetSource(kind="tables", tables_dir=os.environ["GESTURE_DA_TABLES_DIR"]),
        folds=[0],
        seeds=[0],
        output_dir=str(tmp_path / "tables"),
    )

    summary = ExperimentRunner(config).run_method(Method.MDOK_KVATT)

    assert 0.0 <= summary.real_report.accuracy <= 1.0
    assert (summary.output_dir / "report_real.json").exists()
