"""
Run configuration models.

Every field is optional and defaults to the standard hyperparameters, so an
empty JSON object is a valid config file.
"""

import json
from pathlib import Path
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from config import Config
from errors import ConfigError

TASK_NAMES = ("wag", "books", "fails")


class ModelConfig(BaseModel):
    embed_dim: int = Field(default=30, gt=0, description="Neurons of the dense profile embedding")
    lib_hidden: int = Field(default=12, gt=0, description="Hidden size of the library Profile-aware LSTM")
    dorm_hidden: int = Field(default=4, gt=0, description="Hidden size of the dormitory Profile-aware LSTM")
    trend_hidden: int = Field(default=5, gt=0, description="Hidden size of each history trend LSTM")
    unit_fc_dim: int = Field(default=100, gt=0, description="FC width inside each Multi-task Interaction Unit")
    num_units: int = Field(default=4, ge=1, description="Number of stacked Multi-task Interaction Units (L)")
    dropout_rate: float = Field(default=0.4, ge=0.0, lt=1.0, description="Dropout before the output heads")
    days: int = Field(default=63, gt=0, description="Days per behavior window (X)")
    task_count: int = Field(default=3, gt=0, description="Number of prediction tasks (N)")
    balance_weights: List[float] = Field(default_factory=lambda: [1.0, 1.0, 1.0],
                                         description="Per-task loss weights (lambda)")
    behavior_dims: List[int] = Field(default_factory=lambda: [16, 6],
                                     description="Feature width of each behavior kind (M = len)")
    course_dims: List[int] = Field(default_factory=lambda: [7, 0, 8],
                                   description="Course feature width per task, 0 when the task has none")
    profile_dim: int = Field(default=0, ge=0, description="One-hot profile length; filled from the dataset when 0")
    prelu_init: float = Field(default=0.25, description="Initial PReLU slope")
    attention_dim: Optional[int] = Field(default=None, gt=0,
                                         description="Width of the attention scoring layer; hidden width when unset")
    fc_activation: Literal["prelu", "relu", "tanh"] = "prelu"

    # Variant switches used by the ablations
    pooling: Literal["attention", "mean"] = "attention"
    profile_gates: bool = True
    history_only: bool = False
    isolate_task: Optional[int] = Field(default=None, ge=0)
    use_course_features: bool = True

    @field_validator("balance_weights")
    @classmethod
    def _nonnegative_weights(cls, value: List[float]) -> List[float]:
        if any(w < 0 for w in value):
            raise ValueError("balance weights must be >= 0")
        return value

    @field_validator("behavior_dims")
    @classmethod
    def _positive_behavior_dims(cls, value: List[int]) -> List[int]:
        if not value or any(d <= 0 for d in value):
            raise ValueError("behavior_dims must be a nonempty list of positive widths")
        return value

    @model_validator(mode="after")
    def _consistent_task_lists(self) -> "ModelConfig":
        if len(self.balance_weights) != self.task_count:
            raise ValueError("balance_weights must have one entry per task")
        if len(self.course_dims) != self.task_count:
            raise ValueError("course_dims must have one entry per task")
        if self.isolate_task is not None and self.isolate_task >= self.task_count:
            raise ValueError("isolate_task is out of range")
        return self

    @property
    def hidden_dims(self) -> List[int]:
        """Hidden size of each behavior LSTM (library and dormitory by default)."""
        if len(self.behavior_dims) == 2:
            return [self.lib_hidden, self.dorm_hidden]
        return [self.lib_hidden] * len(self.behavior_dims)


class TrainConfig(BaseModel):
    learning_rate: float = Field(default=1e-3, gt=0)
    beta1: float = Field(default=0.9, gt=0, lt=1)
    beta2: float = Field(default=0.999, gt=0, lt=1)
    epsilon: float = Field(default=1e-8, gt=0)
    batch_size: int = Field(default=32, gt=0)
    epochs: int = Field(default=30, gt=0)
    seed: int = Config.DEFAULT_SEED
    balance_weights: Optional[List[float]] = Field(
        default=None, description="Overrides ModelConfig.balance_weights when set"
    )
    keep_best: bool = Field(default=True, description="Retain best-on-validation parameters")

    @field_validator("balance_weights")
    @classmethod
    def _nonnegative_weights(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None and any(w < 0 for w in value):
            raise ValueError("balance weights must be >= 0")
        return value


class SynthConfig(BaseModel):
    students: int = Field(default=1000, gt=0)
    days: int = Field(default=63, gt=0)
    min_history: int = Field(default=1, ge=0)
    max_history: int = Field(default=5, ge=0)
    profile_vocab_sizes: Dict[str, int] = Field(default_factory=lambda: {
        "place_of_birth": 5, "nationality": 2, "gender": 2,
        "grade": 4, "school": 3, "department": 6,
    })
    diligence_noise: float = Field(default=0.3, ge=0)
    informative_days: int = Field(default=8, ge=0)
    task_noise: List[float] = Field(default_factory=lambda: [2.0, 1.0, 0.4])
    book_sign: float = 1.0
    fail_sign: float = -1.0
    course_catalog: int = Field(default=40, gt=0)
    courses_per_student: int = Field(default=5, gt=0)
    validation_fraction: float = Field(default=0.1, ge=0, lt=1)
    test_fraction: float = Field(default=0.2, ge=0, lt=1)
    seed: int = Config.DEFAULT_SEED

    @field_validator("task_noise")
    @classmethod
    def _nonnegative_noise(cls, value: List[float]) -> List[float]:
        if len(value) != 3 or any(v < 0 for v in value):
            raise ValueError("task_noise needs three nonnegative scales")
        return value

    @model_validator(mode="after")
    def _history_range(self) -> "SynthConfig":
        if self.min_history > self.max_history:
            raise ValueError("min_history must not exceed max_history")
        if "department" not in self.profile_vocab_sizes:
            raise ValueError("profile_vocab_sizes needs a 'department' attribute")
        if self.courses_per_student > self.course_catalog:
            raise ValueError("courses_per_student exceeds the course catalog")
        return self


class IngestConfig(BaseModel):
    semester_start: str = Field(default="2017-02-20", description="Day 1 of the behavior window (ISO date)")
    days: int = Field(default=63, gt=0)
    target_semester: Optional[int] = Field(default=None, ge=1,
                                           description="Semester to predict; latest semester when unset")
    pass_mark: float = 60.0
    borrow_cap: Optional[int] = Field(default=None, ge=0)
    validation_fraction: float = Field(default=0.1, ge=0, lt=1)
    test_fraction: float = Field(default=0.2, ge=0, lt=1)
    seed: int = Config.DEFAULT_SEED


class RunConfig(BaseModel):
    """Contents of a --config JSON file."""
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    synth: SynthConfig = Field(default_factory=SynthConfig)
    ingest: IngestConfig = Field(default_factory=IngestConfig)


class RunManifest(BaseModel):
    command: str
    run_id: str
    config_path: Optional[str] = None
    seed: Optional[int] = None
    inputs: Dict[str, str] = Field(default_factory=dict)
    outputs: Dict[str, str] = Field(default_factory=dict)
    resolved_config: Dict = Field(default_factory=dict)
    started_at: str
    completed_at: Optional[str] = None
    events: List[Dict] = Field(default_factory=list)


def load_run_config(path: Optional[Path]) -> RunConfig:
    """Read a JSON config file; a missing path yields all defaults."""
    if path is None:
        return RunConfig()
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"Config file '{path}' not found.") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file '{path}' is not valid JSON: {e}") from e
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"Config file '{path}' is invalid: {e}") from e
