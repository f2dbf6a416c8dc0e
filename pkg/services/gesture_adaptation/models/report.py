"""
Data models for evaluation reports and training logs.
"""

from pydantic import BaseModel, Field

METRIC_NAMES = ("accuracy", "precision", "recall", "jaccard", "f1")


class ClassMetrics(BaseModel):
    """Per-class rates; ``None`` marks a class excluded from the macro mean."""

    gesture: int
    support: float = Field(ge=0)
    precision: float | None = None
    recall: float | None = None
    jaccard: float | None = None
    f1: float | None = None


class MetricsReport(BaseModel):
    """Confusion matrix with accuracy and macro-averaged rates, optionally over seeds."""

    confusion: list[list[float]] = Field(description="Rows are true classes, columns predictions")
    accuracy: float = Field(ge=0, le=1)
    precision: float = Field(ge=0, le=1)
    recall: float = Field(ge=0, le=1)
    jaccard: float = Field(ge=0, le=1)
    f1: float = Field(ge=0, le=1)
    per_class: list[ClassMetrics] = Field(default_factory=list)
    seeds: list[int] = Field(default_factory=list)
    std: dict[str, float] = Field(default_factory=dict, description="Population std per metric across seeds")
    config_hash: str | None = None

    @property
    def num_classes(self) -> int:
        return len(self.confusion)

    @property
    def total(self) -> float:
        return float(sum(sum(row) for row in self.confusion))

    def metric(self, name: str) -> float:
        return float(getattr(self, name))

    def summary(self) -> dict[str, str]:
        """``mean±std`` strings in percent, the way result tables print them."""
        return {
            name: f"{100 * self.metric(name):.2f}±{100 * self.std.get(name, 0.0):.2f}" for name in METRIC_NAMES
        }


class EpochLog(BaseModel):
    """Averaged loss terms and source accuracy for one epoch."""

    epoch: int = Field(ge=1)
    losses: dict[str, float]
    source_accuracy: float = Field(ge=0, le=1)
