from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import Settings
from .exceptions import InvalidEpsilon, UniverseTooSmall, UsageError
from .models import CostVariant, EventLabel

PROBLOG_VERSION = "probalign/problog-1"
DETLOG_VERSION = "probalign/detlog-1"
GROUND_TRUTH_VERSION = "probalign/gt-1"
ALIGNMENT_VERSION = "probalign/align-1"


# Enums
class Algorithm(str, Enum):
    """Detection algorithms compared by the experiments."""

    STANDARD = "standard"
    PROBCOST = "probcost"
    LOWERTRUST = "lowertrust"


# Run configuration
class NoiseConfig(BaseModel):
    """Noise injection settings."""

    model_config = ConfigDict(frozen=True)

    p_h: float = Field(..., ge=0, le=1)
    seed: int = Field(..., ge=0, lt=2**64)
    activity_universe: List[str]

    @field_validator("activity_universe")
    @classmethod
    def _universe_has_alternatives(cls, value: List[str]) -> List[str]:
        """Noise needs another activity to swap in."""
        universe = sorted(set(value))
        if len(universe) < 2:
            raise UniverseTooSmall(
                f"noise injection needs at least 2 activities, got {len(universe)}",
                {"activity_universe": universe},
            )
        return universe


class RunConfig(BaseModel):
    """Validated options of one command run."""

    model_path: Optional[Path] = None
    log_path: Optional[Path] = None
    cost: CostVariant = CostVariant.WEIGHTED
    epsilon: Optional[float] = None
    t_d: float = Field(default=0.25, ge=0, le=1)
    p_h: float = Field(default=0.0, ge=0, le=1)
    seed: int = Field(default=42, ge=0, lt=2**64)
    workers: int = Field(default=1)
    out_dir: Path = Path("out")
    max_expansions: int = Field(default=5_000_000)
    timeout: Optional[float] = None
    timings: bool = False

    @field_validator("model_path", "log_path")
    @classmethod
    def _path_exists(cls, value: Optional[Path]) -> Optional[Path]:
        """Missing input files are usage errors."""
        if value is not None and not value.exists():
            raise UsageError(f"input file not found: {value}", {"path": str(value)})
        return value

    @field_validator("workers")
    @classmethod
    def _positive_workers(cls, value: int) -> int:
        if value < 1:
            raise UsageError(f"worker count must be >= 1, got {value}")
        return value

    @field_validator("max_expansions")
    @classmethod
    def _positive_budget(cls, value: int) -> int:
        if value < 1:
            raise UsageError(f"--max-expansions must be >= 1, got {value}")
        return value

    @field_validator("timeout")
    @classmethod
    def _positive_timeout(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not value > 0:
            raise UsageError(f"--timeout must be > 0, got {value}")
        return value

    @model_validator(mode="after")
    def _epsilon_matches_cost(self) -> "RunConfig":
        """Weighted cost requires an ε in range."""
        if self.cost is CostVariant.WEIGHTED:
            eps = self.epsilon
            if eps is None or not (Settings.EPSILON_MIN <= eps <= Settings.EPSILON_MAX):
                raise InvalidEpsilon(
                    f"weighted cost needs --epsilon in [{Settings.EPSILON_MIN}, {Settings.EPSILON_MAX}], got {eps!r}",
                    {"epsilon": eps},
                )
        return self


# Evaluation
class EvalReport(BaseModel):
    """Confusion counts and derived metrics of one detection run."""

    tp: int = Field(default=0, ge=0)
    fp: int = Field(default=0, ge=0)
    tn: int = Field(default=0, ge=0)
    fn: int = Field(default=0, ge=0)
    accuracy: float = Field(default=0.0, ge=0, le=1)
    f1: float = Field(default=0.0, ge=0, le=1)
    sensitivity: float = Field(default=0.0, ge=0, le=1)
    specificity: float = Field(default=0.0, ge=0, le=1)
    g_mean: float = Field(default=0.0, ge=0, le=1)
    degenerate: List[str] = Field(default_factory=list)

    @property
    def total(self) -> int:
        """Number of scored events."""
        return self.tp + self.fp + self.tn + self.fn


class ReportRow(BaseModel):
    """One line of a report CSV"""

    epsilon: Optional[float] = None
    t_d: Optional[float] = None
    algorithm: str
    accuracy: float
    f1: float
    sensitivity: float
    specificity: float
    g_mean: float
    runtime_s: float = 0.0


# Documents
class ProbLogTraceDocument(BaseModel):
    """One case of a .problog.json file."""

    case_id: str = Field(..., min_length=1)
    events: List[Dict[str, Any]] = Field(..., min_length=1)


class ProbLogDocument(BaseModel):
    """Top level of a .problog.json file."""

    model_config = ConfigDict(extra="forbid")

    version: str = PROBLOG_VERSION
    activity_universe: Optional[List[str]] = None
    traces: List[ProbLogTraceDocument]


class DetTraceDocument(BaseModel):
    """One case of a .detlog.json file."""

    case_id: str = Field(..., min_length=1)
    activities: List[str]


class DetLogDocument(BaseModel):
    """Top level of a .detlog.json file."""

    model_config = ConfigDict(extra="forbid")

    version: str = DETLOG_VERSION
    activity_universe: Optional[List[str]] = None
    traces: List[DetTraceDocument]


class EventTruthDocument(BaseModel):
    """Ground truth of one event."""

    original: str
    added: str
    p: float = Field(..., gt=0, lt=1)
    label: EventLabel


class GroundTruthCaseDocument(BaseModel):
    """Ground truth of one case."""

    case_id: str
    events: List[EventTruthDocument]


class GroundTruthDocument(BaseModel):
    """Top level of a .gt.json sidecar."""

    model_config = ConfigDict(extra="forbid")

    version: str = GROUND_TRUTH_VERSION
    t_d: float = Field(..., ge=0, le=1)
    p_h: Optional[float] = None
    seed: Optional[int] = None
    cases: List[GroundTruthCaseDocument]


class MoveDocument(BaseModel):
    """One move of a written alignment."""

    kind: str
    transition: str
    model_label: Optional[str] = None
    trace_label: Optional[str] = None
    event_index: Optional[int] = None
    weight: float
    cost: float


class StatsDocument(BaseModel):
    """Search statistics; elapsed_s is 0 without --timings."""

    expanded: int
    generated: int
    queue_peak: int
    elapsed_s: float
    product_places: int
    product_transitions: int


class AlignmentDocument(BaseModel):
    """One aligned case of a .align.json file."""

    version: str = ALIGNMENT_VERSION
    case_id: str
    cost_function: str
    epsilon: Optional[float] = None
    moves: List[MoveDocument]
    total_cost: float
    stats: StatsDocument
    recovered: List[str]
    predictions: List[EventLabel]
    fitness: Optional[float] = None


class CaseErrorDocument(BaseModel):
    """One failed case of a .align.json file."""

    version: str = ALIGNMENT_VERSION
    case_id: str
    error: str
    message: str
    details: Dict[str, Any] = Field(default_factory=dict)
