"""
Experiment runner.

Coordinates dataset preparation, trial-level folds, per-(fold, seed)
training and evaluation, and writes the tables and reports each command
emits. Runs execute sequentially; independent folds or seeds can be spread
over separate invocations with ``--fold`` and ``--seed``.
"""

import json
import logging
from pathlib import Path
from typing import Any, Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from rich.progress import Progress, TaskID

from services.gesture_adaptation.data.folds import make_folds
from services.gesture_adaptation.data.ingestion import (
    DOMAIN_DIRS,
    hide_labels,
    load_dataset_dir,
    write_segment_index,
)
from services.gesture_adaptation.engines.mdok import transform_kinematics
from services.gesture_adaptation.engines.network import GestureAdaptationNet
from services.gesture_adaptation.engines.trainer import TrainingData, train
from services.gesture_adaptation.evaluation.metrics import aggregate, evaluate, write_report
from services.gesture_adaptation.models.configs import (
    DatasetSource,
    ExperimentConfig,
    Method,
    ModelConfig,
    TrainConfig,
)
from services.gesture_adaptation.models.report import EpochLog, MetricsReport
from services.gesture_adaptation.models.segment import DatasetSplit, Domain, Segment
from services.gesture_adaptation.synth.generator import generate_dataset, write_dataset
from services.gesture_adaptation.synth.presets import preset
from services.gesture_adaptation.utils.config import settings
from services.gesture_adaptation.utils.errors import (
    CheckpointMismatchError,
    EmptyPoolError,
    IngestionError,
)
from services.gesture_adaptation.workflow.artifacts import (
    CheckpointMeta,
    config_hash,
    dataset_fingerprint,
    load_checkpoint,
    read_checkpoint_meta,
    save_checkpoint,
    write_epoch_log,
    write_json,
    write_table,
)
from services.gesture_adaptation.workflow.state_machine import RunState, RunStateMachine

logger = logging.getLogger(__name__)

# A segment needs two direction frames for the smallest relation scale
MIN_SEGMENT_FRAMES = 3
DEFAULT_LAMBDAS = (0.2, 0.5, 0.7, 0.8)
ABLATION_METHODS = [
    Method.BASELINE_POSITION,
    Method.BASELINE_DIRECTION,
    Method.MDOK,
    Method.MDOK_KVATT,
]
ABLATION_BASELINE = Method.BASELINE_POSITION
MDOK_FEATURE_COLUMNS = [
    f"{arm}_{name}"
    for arm in ("left", "right")
    for name in ("dx", "dy", "dz", "yaw", "pitch", "roll", "gripper")
]


def apply_overrides(payload: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """Set dotted keys (``train.epochs``) on a nested config dict."""
    merged = json.loads(json.dumps(payload))
    for dotted, value in overrides.items():
        node = merged
        *parents, leaf = dotted.split(".")
        for key in parents:
            node = node.setdefault(key, {})
        node[leaf] = value
    return merged


def load_experiment_config(
    path: Path | None, overrides: dict[str, Any] | None = None
) -> ExperimentConfig:
    """Read an experiment JSON file (or start from defaults) and apply overrides."""
    payload = json.loads(Path(path).read_text()) if path else {}
    return ExperimentConfig.model_validate(apply_overrides(payload, overrides or {}))


def experiment_hash(config: ExperimentConfig) -> str:
    """Hash of everything that determines a run's results."""
    return config_hash(config.model_dump(mode="json", exclude={"output_dir"}))


class PreparedDataset(BaseModel):
    """Segments of both domains ready for folding."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    source: DatasetSource
    simulator: list[Segment]
    real: list[Segment]
    fingerprint: str
    visual_dim: int

    def segments(self, domain: Domain) -> list[Segment]:
        return self.simulator if domain is Domain.SIMULATOR else self.real

    @property
    def all_segments(self) -> list[Segment]:
        return self.simulator + self.real


def usable_segments(segments: list[Segment], min_frames: int = MIN_SEGMENT_FRAMES) -> list[Segment]:
    kept = [segment for segment in segments if segment.length >= min_frames]
    if len(kept) < len(segments):
        logger.warning(
            "Dropping %d segments shorter than %d frames (no relation scale fits)",
            len(segments) - len(kept),
            min_frames,
        )
    return kept


def prepare_dataset(source: DatasetSource) -> PreparedDataset:
    """Generate or ingest a dataset and fingerprint its content."""
    if source.kind == "synthetic":
        generated = generate_dataset(preset(source.preset), source.n_trials, source.seed, source.visual_dim)
        simulator, real = generated.simulator, generated.real
    else:
        loaded = load_dataset_dir(Path(source.tables_dir))
        simulator, real = loaded[Domain.SIMULATOR], loaded[Domain.REAL]

    simulator, real = usable_segments(simulator), usable_segments(real)
    if not simulator or not real:
        raise EmptyPoolError("dataset needs usable segments in both domains")
    widths = {segment.visual_dim for segment in simulator + real}
    if len(widths) != 1:
        raise IngestionError(f"visual feature width differs across segments: {sorted(widths)}")
    return PreparedDataset(
        source=source,
        simulator=simulator,
        real=real,
        fingerprint=dataset_fingerprint(simulator + real),
        visual_dim=widths.pop(),
    )


class RunResult(BaseModel):
    """Outputs of one (method, fold, seed) training run."""

    method: Method
    fold: int
    seed: int
    lambda_mix: float
    checkpoint: Path
    history: list[EpochLog]
    real_report: MetricsReport
    simulator_report: MetricsReport


class MethodSummary(BaseModel):
    """All runs of one method with reports aggregated over them."""

    method: Method
    config_hash: str
    output_dir: Path
    runs: list[RunResult]
    real_report: MetricsReport
    simulator_report: MetricsReport


class ExperimentRunner:
    """Runs the training and evaluation protocol of one experiment config."""

    def __init__(
        self,
        config: ExperimentConfig,
        output_dir: Path | None = None,
        progress: Progress | None = None,
        task: TaskID | None = None,
    ) -> None:
        self.config = config
        self.output_dir = Path(output_dir or config.output_dir or Path(settings.OUTPUT_ROOT) / config.name)
        self.progress = progress
        self.task = task
        self.state_machine = RunStateMachine()
        self._dataset: PreparedDataset | None = None
        self._split: DatasetSplit | None = None

    def _status(self, message: str) -> None:
        logger.info(message)
        if self.progress is not None and self.task is not None:
            self.progress.update(self.task, description=message)

    @property
    def dataset(self) -> PreparedDataset:
        if self._dataset is None:
            self._status("Preparing dataset...")
            self._dataset = prepare_dataset(self.config.dataset)
            self.state_machine.transition(RunState.DATA_READY)
        return self._dataset

    @property
    def split(self) -> DatasetSplit:
        if self._split is None:
            self._split = make_folds(
                self.dataset.all_segments, self.config.k_folds, seed=self.config.dataset.seed
            )
        return self._split

    def model_config_for(self, method: Method, seed: int) -> ModelConfig:
        """Network shape for a method; parameters are initialized from the run seed."""
        base = self.config.model
        encoder = base.encoder.model_copy(update={"visual_dim": self.dataset.visual_dim})
        return base.model_copy(
            update={"encoder": encoder, "visual_branch": method.visual_branch, "init_seed": seed}
        )

    def run_hash(self, method: Method, train_config: TrainConfig) -> str:
        return experiment_hash(self.config.model_copy(update={"method": method, "train": train_config}))

    def run_single(
        self, method: Method, fold: int, seed: int, train_config: TrainConfig, run_dir: Path
    ) -> RunResult:
        """
        Train on one fold with one seed and evaluate on its held-out trials.

        The source pool is the labeled simulator segments of the training
        trials; the target pool is the same trials' real segments with labels
        removed. Both domains of the test trials are evaluated.
        """
        dataset = self.dataset
        fold_split = self.split.folds[fold]
        train_trials, test_trials = set(fold_split.train_trials), set(fold_split.test_trials)
        run_hash = self.run_hash(method, train_config)
        train_config = train_config.model_copy(update={"seed": seed})

        source = [s for s in dataset.simulator if s.trial_id in train_trials]
        target = hide_labels([s for s in dataset.real if s.trial_id in train_trials])
        model = GestureAdaptationNet(self.model_config_for(method, seed))
        meta = CheckpointMeta(
            config_hash=run_hash,
            method=method,
            model=model.config,
            dataset=self.config.dataset,
            dataset_fingerprint=dataset.fingerprint,
            fold=fold,
            seed=seed,
            epoch=0,
            lambda_mix=train_config.lambda_mix,
            train_trials=fold_split.train_trials,
            test_trials=fold_split.test_trials,
        )

        def checkpoint_hook(net: GestureAdaptationNet, epoch: int) -> Path:
            path = run_dir / f"checkpoint_epoch{epoch:03d}.pt"
            return save_checkpoint(path, net, meta.model_copy(update={"epoch": epoch}))

        self._status(f"Training {method.value} fold {fold} seed {seed}...")
        self.state_machine.transition(RunState.TRAINING, f"fold {fold} seed {seed}")
        data = TrainingData(source=source, target=target)
        result = train(model, data, train_config, method, checkpoint_hook)
        checkpoint = save_checkpoint(
            run_dir / "checkpoint.pt", result.model, meta.model_copy(update={"epoch": train_config.epochs})
        )
        write_epoch_log(run_dir / "epoch_log.csv", result.history, method)

        self._status(f"Evaluating {method.value} fold {fold} seed {seed}...")
        self.state_machine.transition(RunState.EVALUATING, f"fold {fold} seed {seed}")
        reports = {}
        for domain in (Domain.REAL, Domain.SIMULATOR):
            test_segments = [s for s in dataset.segments(domain) if s.trial_id in test_trials]
            report = evaluate(result.model, test_segments, method, train_config.lambda_mix)
            reports[domain] = report.model_copy(update={"seeds": [seed], "config_hash": run_hash})
            write_report(reports[domain], run_dir / f"report_{DOMAIN_DIRS[domain]}.json")
        write_json(
            run_dir / "run.json",
            {
                "config_hash": run_hash,
                "method": method.value,
                "fold": fold,
                "seed": seed,
                "epochs": train_config.epochs,
            },
        )
        logger.info(
            "%s fold %d seed %d: real acc %.4f, simulator acc %.4f",
            method.value,
            fold,
            seed,
            reports[Domain.REAL].accuracy,
            reports[Domain.SIMULATOR].accuracy,
        )
        return RunResult(
            method=method,
            fold=fold,
            seed=seed,
            lambda_mix=train_config.lambda_mix,
            checkpoint=checkpoint,
            history=result.history,
            real_report=reports[Domain.REAL],
            simulator_report=reports[Domain.SIMULATOR],
        )

    def run_method(
        self, method: Method, train_config: TrainConfig | None = None, label: str | None = None
    ) -> MethodSummary:
        """Every selected (fold, seed) run of a method, aggregated."""
        train_config = train_config or self.config.train
        method_dir = self.output_dir / (label or method.value)
        run_hash = self.run_hash(method, train_config)
        try:
            runs = [
                self.run_single(
                    method, fold, seed, train_config, method_dir / f"fold{fold}" / f"seed{seed}"
                )
                for fold in self.config.fold_indices
                for seed in self.config.seeds
            ]
        except Exception as error:
            where = self.state_machine.fail(error)
            logger.error("%s failed while %s: %s", method.value, where, error)
            raise

        seeds = [run.seed for run in runs]
        stamp = {"config_hash": run_hash}
        real = aggregate([run.real_report for run in runs], seeds).model_copy(update=stamp)
        simulator = aggregate([run.simulator_report for run in runs], seeds).model_copy(update=stamp)
        write_report(real, method_dir / "report_real.json")
        write_report(simulator, method_dir / "report_simulator.json")
        resolved = self.config.model_copy(update={"method": method, "train": train_config})
        write_json(
            method_dir / "config.json", {"config_hash": run_hash, **resolved.model_dump(mode="json")}
        )
        self.state_machine.transition(RunState.REPORTED)
        return MethodSummary(
            method=method,
            config_hash=run_hash,
            output_dir=method_dir,
            runs=runs,
            real_report=real,
            simulator_report=simulator,
        )


class GenerateResult(BaseModel):
    """Files written by ``cmd_generate``."""

    out_dir: Path
    manifest: Path
    config_hash: str
    simulator_segments: int
    real_segments: int


def cmd_generate(
    preset_name: str, n_trials: int, seed: int, out_dir: Path, visual_dim: int | None = None
) -> GenerateResult:
    """
    Write a paired synthetic dataset as tables plus a manifest.

    The manifest records the full shift parameters and the config hash;
    identical arguments produce byte-identical files.
    """
    shift = preset(preset_name)
    source = DatasetSource(
        kind="synthetic",
        preset=preset_name,
        n_trials=n_trials,
        seed=seed,
        visual_dim=visual_dim or settings.SYNTH_VISUAL_DIM,
    )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    dataset = generate_dataset(shift, source.n_trials, source.seed, source.visual_dim)
    write_dataset(dataset, out_dir)
    write_segment_index(dataset.all_segments, out_dir / "segments.json")
    digest = config_hash(source)
    manifest = write_json(
        out_dir / "manifest.json",
        {
            "config_hash": digest,
            "dataset": source.model_dump(mode="json"),
            "shift": shift.model_dump(mode="json"),
            "dataset_fingerprint": dataset_fingerprint(dataset.all_segments),
            "segments": {"simulator": len(dataset.simulator), "real": len(dataset.real)},
        },
    )
    logger.info("Dataset written to %s (config %s)", out_dir, digest)
    return GenerateResult(
        out_dir=out_dir,
        manifest=manifest,
        config_hash=digest,
        simulator_segments=len(dataset.simulator),
        real_segments=len(dataset.real),
    )


def cmd_train(
    config: ExperimentConfig,
    output_dir: Path | None = None,
    progress: Progress | None = None,
    task: TaskID | None = None,
) -> MethodSummary:
    """Train and evaluate the configured method on every selected fold and seed."""
    return ExperimentRunner(config, output_dir, progress, task).run_method(config.method)


def cmd_evaluate(
    checkpoints: list[Path],
    dataset: DatasetSource | None = None,
    domain_filter: Domain = Domain.REAL,
    subset: Literal["test", "train"] = "test",
    out_dir: Path | None = None,
) -> MetricsReport:
    """
    Evaluate checkpoints on one domain's test (or training) trials.

    Reports of several checkpoints, typically the seeds of one config, are
    aggregated into mean and std.

    Raises:
        CheckpointMismatchError: a checkpoint was trained on a different dataset,
            or checkpoints come from different configs
    """
    if not checkpoints:
        raise ValueError("no checkpoints given")
    prepared: dict[str, PreparedDataset] = {}
    reports: list[MetricsReport] = []
    for path in checkpoints:
        source = dataset or read_checkpoint_meta(path).dataset
        if source is None:
            raise CheckpointMismatchError(
                f"{path}: no dataset recorded in the checkpoint; pass one explicitly"
            )
        key = config_hash(source)
        if key not in prepared:
            prepared[key] = prepare_dataset(source)
        data = prepared[key]
        model, meta = load_checkpoint(path, expected_fingerprint=data.fingerprint)
        trials = set(meta.test_trials if subset == "test" else meta.train_trials)
        segments = [s for s in data.segments(domain_filter) if s.trial_id in trials]
        report = evaluate(model, segments, meta.method, meta.lambda_mix)
        stamp = {"seeds": [meta.seed], "config_hash": meta.config_hash}
        reports.append(report.model_copy(update=stamp))

    hashes = {report.config_hash for report in reports}
    if len(hashes) != 1:
        raise CheckpointMismatchError(f"checkpoints come from different configs: {sorted(hashes)}")
    combined = aggregate(reports).model_copy(update={"config_hash": hashes.pop()})
    if out_dir is not None:
        name = f"report_{DOMAIN_DIRS[domain_filter]}_{subset}.json"
        write_report(combined, Path(out_dir) / name)
    return combined


def _summary_row(summary: MethodSummary) -> dict[str, Any]:
    report = summary.real_report
    row: dict[str, Any] = {"method": summary.method.value, "config_hash": summary.config_hash}
    for name in ("accuracy", "precision", "recall", "jaccard", "f1"):
        row[f"{name}_mean"] = report.metric(name)
        row[f"{name}_std"] = report.std.get(name, 0.0)
    row["simulator_accuracy_mean"] = summary.simulator_report.accuracy
    return row


def cmd_sweep_lambda(
    config: ExperimentConfig,
    values: list[float] | tuple[float, ...] = DEFAULT_LAMBDAS,
    output_dir: Path | None = None,
    progress: Progress | None = None,
    task: TaskID | None = None,
) -> pd.DataFrame:
    """
    Retrain the configured method for each λ and tabulate real-domain accuracy.

    Writes ``lambda_sweep.csv`` (all metrics) and ``lambda_sweep_plot.csv``
    with columns lambda, acc_mean, acc_std.
    """
    if not values:
        raise ValueError("at least one λ value is required")
    if any(not 0.0 <= value <= 1.0 for value in values):
        raise ValueError(f"λ values must lie in [0, 1], got {list(values)}")
    runner = ExperimentRunner(config, output_dir, progress, task)
    rows = []
    for value in values:
        train_config = config.train.model_copy(update={"lambda_mix": float(value)})
        label = f"{config.method.value}/lambda_{value:g}"
        summary = runner.run_method(config.method, train_config, label=label)
        rows.append({"lambda": float(value), **_summary_row(summary)})

    table = pd.DataFrame(rows)
    table = table.assign(acc_mean=table["accuracy_mean"], acc_std=table["accuracy_std"])
    write_table(runner.output_dir / "lambda_sweep.csv", table.to_dict("records"))
    plot = table[["lambda", "acc_mean", "acc_std"]]
    write_table(runner.output_dir / "lambda_sweep_plot.csv", plot.to_dict("records"))
    return table


def cmd_ablate(
    config: ExperimentConfig,
    include_separate_visual: bool = False,
    output_dir: Path | None = None,
    progress: Progress | None = None,
    task: TaskID | None = None,
) -> pd.DataFrame:
    """
    Run every method on one dataset and compare against the position baseline.

    ``acc_gain`` and ``f1_gain`` are each method's mean minus the baseline's
    mean. Writes ``ablation.csv``.
    """
    methods = list(ABLATION_METHODS)
    if include_separate_visual:
        methods.append(Method.MDOK_VISUAL)
    runner = ExperimentRunner(config, output_dir, progress, task)
    rows = [_summary_row(runner.run_method(method)) for method in methods]

    table = pd.DataFrame(rows)
    baseline = table.loc[table["method"] == ABLATION_BASELINE.value].iloc[0]
    table["acc_gain"] = table["accuracy_mean"] - baseline["accuracy_mean"]
    table["f1_gain"] = table["f1_mean"] - baseline["f1_mean"]
    write_table(runner.output_dir / "ablation.csv", table.to_dict("records"))
    return table


def cmd_export_mdok(source: DatasetSource, out: Path) -> Path:
    """Write the direction-oriented kinematic frames of every segment as one table."""
    dataset = prepare_dataset(source)
    frames = []
    for segment in dataset.all_segments:
        features = transform_kinematics(segment.kinematics)
        start = segment.frame_index_range[0]
        keys = pd.DataFrame(
            {
                "segment_id": segment.segment_id,
                "trial_id": segment.trial_id,
                "domain": DOMAIN_DIRS[segment.domain_label],
                "gesture": -1 if segment.gesture_label is None else int(segment.gesture_label),
                "frame": np.arange(start, start + len(features)),
            }
        )
        values = pd.DataFrame(features, columns=MDOK_FEATURE_COLUMNS)
        frames.append(pd.concat([keys, values], axis=1))
    table = pd.concat(frames, ignore_index=True)
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out, index=False, float_format="%.10g")
    logger.info("Exported %d direction-oriented frames to %s", len(table), out)
    return out
