"""
Segment-level classification metrics.

One prediction per segment is compared with its gesture label. Rates are
macro-averaged over the classes that occur in either the labels or the
predictions; a class with a zero precision or recall denominator contributes
0 to the macro sums.
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd
from sklearn.metrics import confusion_matrix

from services.gesture_adaptation.engines.network import GestureAdaptationNet
from services.gesture_adaptation.engines.trainer import predict_segments
from services.gesture_adaptation.models.configs import Method
from services.gesture_adaptation.models.report import METRIC_NAMES, ClassMetrics, MetricsReport
from services.gesture_adaptation.models.segment import NUM_GESTURES, Segment

logger = logging.getLogger(__name__)

RATE_NAMES = ("precision", "recall", "jaccard", "f1")


def _ratio(numerator: float, denominator: float, gesture: int, name: str) -> float:
    if denominator == 0:
        logger.info("Class %d has no %s denominator; counting it as 0", gesture, name)
        return 0.0
    return numerator / denominator


def class_metrics(confusion: np.ndarray) -> list[ClassMetrics]:
    """
    Per-class rates from a confusion matrix (rows true, columns predicted).

    Classes with neither support nor predictions carry ``None`` rates.
    """
    rows = []
    for gesture in range(confusion.shape[0]):
        tp = float(confusion[gesture, gesture])
        support = float(confusion[gesture].sum())
        predicted = float(confusion[:, gesture].sum())
        if support == 0 and predicted == 0:
            rows.append(ClassMetrics(gesture=gesture, support=0.0))
            continue
        fp, fn = predicted - tp, support - tp
        precision = _ratio(tp, tp + fp, gesture, "precision")
        recall = _ratio(tp, tp + fn, gesture, "recall")
        f1 = 2.0 / (1.0 / precision + 1.0 / recall) if precision > 0 and recall > 0 else 0.0
        rows.append(
            ClassMetrics(
                gesture=gesture,
                support=support,
                precision=precision,
                recall=recall,
                jaccard=tp / (tp + fp + fn),
                f1=f1,
            )
        )
    return rows


def report_from_confusion(confusion: np.ndarray) -> MetricsReport:
    """Accuracy and macro rates of one confusion matrix."""
    confusion = np.asarray(confusion, dtype=np.float64)
    total = confusion.sum()
    if total == 0:
        raise ValueError("confusion matrix is empty")
    per_class = class_metrics(confusion)
    included = [row for row in per_class if row.precision is not None]
    macro = {name: float(np.mean([getattr(row, name) for row in included])) for name in RATE_NAMES}
    return MetricsReport(
        confusion=confusion.tolist(),
        accuracy=float(np.trace(confusion) / total),
        per_class=per_class,
        **macro,
    )


def report_from_predictions(
    labels: np.ndarray, predictions: np.ndarray, num_classes: int = NUM_GESTURES
) -> MetricsReport:
    """
    Metrics of predicted against true class ids.

    Raises:
        ValueError: inputs are empty, differ in length or hold ids outside the class range
    """
    labels = np.asarray(labels, dtype=np.int64)
    predictions = np.asarray(predictions, dtype=np.int64)
    if labels.size == 0:
        raise ValueError("cannot evaluate an empty segment list")
    if labels.shape != predictions.shape:
        raise ValueError(f"{labels.size} labels vs {predictions.size} predictions")
    for name, values in (("label", labels), ("prediction", predictions)):
        if values.min() < 0 or values.max() >= num_classes:
            raise ValueError(f"{name} ids must lie in 0..{num_classes - 1}")
    confusion = confusion_matrix(labels, predictions, labels=list(range(num_classes)))
    return report_from_confusion(confusion)


def evaluate(
    model: GestureAdaptationNet,
    segments: list[Segment],
    method: Method,
    lambda_mix: float = 0.8,
) -> MetricsReport:
    """
    Evaluate a trained network on labeled segments.

    Args:
        model: Trained network
        segments: Labeled segments of any domain
        method: Selects the kinematic representation fed to the network
        lambda_mix: Weight of the kinematic classifier in the class mixture

    Returns:
        Report built from one argmax prediction per segment
    """
    if not segments:
        raise ValueError("cannot evaluate an empty segment list")
    unlabeled = [segment.segment_id for segment in segments if segment.gesture_label is None]
    if unlabeled:
        raise ValueError(f"evaluation needs labeled segments; unlabeled: {unlabeled[:3]}")
    predictions = predict_segments(model, segments, method, lambda_mix)
    labels = np.array([int(segment.gesture_label) for segment in segments])
    return report_from_predictions(labels, predictions, model.config.num_classes)


def aggregate(reports: list[MetricsReport], seeds: list[int] | None = None) -> MetricsReport:
    """
    Mean and population std of reports from repeated runs.

    Confusion matrices and per-class rates are averaged elementwise; a
    per-class rate is averaged over the runs where the class was included.
    """
    if not reports:
        raise ValueError("aggregate needs at least one report")
    class_counts = {report.num_classes for report in reports}
    if len(class_counts) != 1:
        raise ValueError(f"reports disagree on class count: {sorted(class_counts)}")
    if seeds is not None and len(seeds) != len(reports):
        raise ValueError(f"{len(seeds)} seeds for {len(reports)} reports")

    values = {name: np.array([report.metric(name) for report in reports]) for name in METRIC_NAMES}
    per_class = []
    for gesture in range(class_counts.pop()):
        rows = [report.per_class[gesture] for report in reports if report.per_class]
        rates = {}
        for name in RATE_NAMES:
            defined = [getattr(row, name) for row in rows if getattr(row, name) is not None]
            rates[name] = float(np.mean(defined)) if defined else None
        per_class.append(
            ClassMetrics(gesture=gesture, support=float(np.mean([row.support for row in rows] or [0.0])), **rates)
        )

    return MetricsReport(
        confusion=np.mean([np.asarray(report.confusion) for report in reports], axis=0).tolist(),
        per_class=per_class,
        seeds=list(seeds) if seeds is not None else [seed for report in reports for seed in report.seeds],
        std={name: float(np.std(series)) for name, series in values.items()},
        config_hash=reports[0].config_hash,
        **{name: float(np.mean(series)) for name, series in values.items()},
    )


def confusion_table(report: MetricsReport) -> pd.DataFrame:
    """Confusion matrix as a labeled table, rows true and columns predicted."""
    names = [f"g{gesture}" for gesture in range(report.num_classes)]
    table = pd.DataFrame(report.confusion, index=names, columns=names)
    table.index.name = "true"
    return table


def write_report(report: MetricsReport, path: Path, confusion_csv: bool = True) -> Path:
    """Write a report as JSON, plus its confusion matrix as CSV next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.model_dump_json(indent=2))
    if confusion_csv:
        confusion_table(report).to_csv(path.with_name(f"{path.stem}_confusion.csv"))
    return path


def read_report(path: Path) -> MetricsReport:
    return MetricsReport.model_validate_json(Path(path).read_text())
