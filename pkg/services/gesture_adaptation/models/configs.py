"""
Configuration models for encoders, fusion, training and experiments.

Class defaults are the full-size setup (hidden 256, batch 256 per domain);
experiment configs start from the desk-scale values in Settings instead.
"""

from enum import Enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from services.gesture_adaptation.models.segment import DEFAULT_VISUAL_DIM, KINEMATIC_DIM, NUM_GESTURES
from services.gesture_adaptation.utils.config import settings


class Representation(str, Enum):
    """Kinematic input representation fed to the kinematic encoder."""

    POSITION = "position"
    DIRECTION = "direction"


class VisualBranch(str, Enum):
    """How the visual modality participates in the network."""

    NONE = "none"
    KV_RELATION = "kv_relation"
    SEPARATE = "separate"


class FusionMode(str, Enum):
    """Reading of the per-scale kinematic-visual co-occurrence."""

    ELEMENTWISE = "elementwise"
    SCALAR_ATTENTION = "scalar-attention"


class GrlSchedule(str, Enum):
    """Reversal coefficient schedule."""

    CONSTANT = "constant"
    DANN = "dann"


class Method(str, Enum):
    """Experiment methods and the loss terms each one trains with."""

    BASELINE_POSITION = "baseline-position"
    BASELINE_DIRECTION = "baseline-direction"
    MDOK = "mdok"
    MDOK_KVATT = "mdok+kvatt"
    MDOK_VISUAL = "mdok+visual"

    @property
    def representation(self) -> Representation:
        if self is Method.BASELINE_POSITION:
            return Representation.POSITION
        return Representation.DIRECTION

    @property
    def visual_branch(self) -> VisualBranch:
        if self is Method.MDOK_KVATT:
            return VisualBranch.KV_RELATION
        if self is Method.MDOK_VISUAL:
            return VisualBranch.SEPARATE
        return VisualBranch.NONE

    @property
    def uses_kinematic_discriminator(self) -> bool:
        return self in (Method.MDOK, Method.MDOK_KVATT, Method.MDOK_VISUAL)

    @property
    def loss_columns(self) -> list[str]:
        """Loss columns written to the per-epoch log."""
        columns = ["L_C"]
        if self.uses_kinematic_discriminator:
            columns.append("L_K-D")
        if self.visual_branch is VisualBranch.KV_RELATION:
            columns.append("L_KV-D")
        if self.visual_branch is VisualBranch.SEPARATE:
            columns.append("L_V-D")
        return columns


class EncoderConfig(BaseModel):
    """Temporal-relation encoder settings shared by both modalities."""

    model_config = ConfigDict(frozen=True)

    hidden_dim: int = Field(default=256, gt=0)
    max_scale: int = Field(default=10, ge=2)
    subsets_per_scale: int = Field(default=3, ge=1)
    kinematic_dim: int = Field(default=KINEMATIC_DIM, gt=0)
    visual_dim: int = Field(default=DEFAULT_VISUAL_DIM, gt=0)

    @property
    def scales(self) -> list[int]:
        return list(range(2, self.max_scale + 1))


class FusionConfig(BaseModel):
    """Multi-scale co-occurrence fusion settings."""

    model_config = ConfigDict(frozen=True)

    mode: FusionMode = FusionMode.ELEMENTWISE
    common_dim: int = Field(default=256, gt=0)


class ModelConfig(BaseModel):
    """Full network shape."""

    model_config = ConfigDict(frozen=True)

    encoder: EncoderConfig = Field(default_factory=EncoderConfig)
    fusion: FusionConfig = Field(default_factory=FusionConfig)
    head_hidden: int = Field(default=128, gt=0)
    num_classes: int = Field(default=NUM_GESTURES, gt=1)
    visual_branch: VisualBranch = VisualBranch.KV_RELATION
    dtype: Literal["float32", "float64"] = "float32"
    init_seed: int = 0


class TrainConfig(BaseModel):
    """Optimization settings for one training run."""

    model_config = ConfigDict(frozen=True)

    lambda_mix: float = Field(default=0.8, ge=0.0, le=1.0, description="Weight of p^kc in the class mixture")
    learning_rate: float = Field(default=1e-3, gt=0)
    batch_per_domain: int = Field(default=256, gt=0)
    epochs: int = Field(default=30, ge=0)
    steps_per_epoch: int | None = Field(default=None, gt=0, description="Defaults to ceil(|source| / batch)")
    seed: int = 0
    grl_coefficient: float = Field(default=0.5, ge=0)
    grl_schedule: GrlSchedule = GrlSchedule.CONSTANT
    classification_weight: float = Field(default=1.0, ge=0)
    kd_weight: float = Field(default=1.0, ge=0)
    kvd_weight: float = Field(default=1.0, ge=0)
    checkpoint_every: int | None = Field(default=None, gt=0, description="Epoch cadence of intermediate checkpoints")


class DatasetSource(BaseModel):
    """Where an experiment's segments come from."""

    kind: Literal["synthetic", "tables"] = "synthetic"
    preset: str = "combined"
    n_trials: int = Field(default_factory=lambda: settings.SYNTH_TRIALS, gt=0)
    seed: int = 0
    visual_dim: int = Field(default_factory=lambda: settings.SYNTH_VISUAL_DIM, gt=0)
    tables_dir: str | None = Field(default=None, description="Directory with simulator/ and real/ table sets")

    @model_validator(mode="after")
    def _tables_need_directory(self) -> "DatasetSource":
        if self.kind == "tables" and not self.tables_dir:
            raise ValueError("tables_dir is required when kind is 'tables'")
        return self


def desk_train_config() -> TrainConfig:
    """Desk-scale training defaults."""
    return TrainConfig(batch_per_domain=settings.DESK_BATCH_PER_DOMAIN, epochs=settings.DESK_EPOCHS)


def desk_model_config() -> ModelConfig:
    """Desk-scale network defaults."""
    return ModelConfig(
        encoder=EncoderConfig(hidden_dim=settings.DESK_HIDDEN_DIM),
        fusion=FusionConfig(common_dim=settings.DESK_HIDDEN_DIM),
    )


class ExperimentConfig(BaseModel):
    """A versionable experiment definition."""

    name: str = "experiment"
    dataset: DatasetSource = Field(default_factory=DatasetSource)
    method: Method = Method.MDOK_KVATT
    train: TrainConfig = Field(default_factory=desk_train_config)
    model: ModelConfig = Field(default_factory=desk_model_config)
    k_folds: int = Field(default=5, ge=2)
    folds: list[int] | None = Field(default=None, description="Fold indices to run; all folds when unset")
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2])
    output_dir: str | None = None

    @field_validator("seeds")
    @classmethod
    def _seeds_non_empty(cls, value: list[int]) -> list[int]:
        if not value:
            raise ValueError("seeds must be non-empty")
        return value

    @model_validator(mode="after")
    def _folds_in_range(self) -> "ExperimentConfig":
        for fold in self.folds or []:
            if not 0 <= fold < self.k_folds:
                raise ValueError(f"fold {fold} outside 0..{self.k_folds - 1}")
        return self

    @property
    def fold_indices(self) -> list[int]:
        return list(range(self.k_folds)) if self.folds is None else list(self.folds)
