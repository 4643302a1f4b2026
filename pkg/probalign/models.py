"""Domain types: Petri nets, markings, probabilistic traces, product nets and alignments.

Everything here is an immutable value once built, so nets, logs and alignments can be
shared freely between concurrent alignment searches and pickled into worker processes.
"""
import math
import numbers
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Tuple, Union

from .config import Settings
from .exceptions import InvalidEpsilon, InvalidInput, InvalidMarking

SKIP = "≫"


class SilentLabel:
    """The reserved τ label. A singleton, never confused with an activity string."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __reduce__(self):
        return (SilentLabel, ())

    def __repr__(self):
        return "TAU"

    def __str__(self):
        return "τ"


TAU = SilentLabel()

Label = Union[str, SilentLabel]


def is_silent(label: Optional[Label]) -> bool:
    """True for the τ label."""
    return isinstance(label, SilentLabel)


def check_activity(name: object) -> str:
    """Activities are non-empty, case-sensitive strings."""
    if not isinstance(name, str) or not name:
        raise InvalidInput(f"activity must be a non-empty string, got {name!r}")
    return name


class Marking(Mapping[str, int]):
    """Multiset of tokens over places. Omitted places hold 0 tokens; counts are never negative."""

    __slots__ = ("_tokens", "_hash")

    def __init__(self, tokens: Optional[Mapping[str, int]] = None):
        clean: Dict[str, int] = {}
        for place, count in (tokens or {}).items():
            if isinstance(count, bool) or not isinstance(count, numbers.Integral) or count < 0:
                raise InvalidMarking(f"token count for place {place!r} must be a non-negative integer, got {count!r}")
            if count:
                clean[place] = int(count)
        self._tokens = clean
        self._hash = hash(frozenset(clean.items()))

    def __getitem__(self, place: str) -> int:
        return self._tokens.get(place, 0)

    def __contains__(self, place: object) -> bool:
        return place in self._tokens

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._tokens))

    def __len__(self) -> int:
        return len(self._tokens)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Marking):
            return self._tokens == other._tokens
        if isinstance(other, Mapping):
            return self._tokens == {p: c for p, c in other.items() if c}
        return NotImplemented

    def __add__(self, other: "Marking") -> "Marking":
        """Place-wise sum."""
        merged = dict(self._tokens)
        for place, count in other.items():
            merged[place] = merged.get(place, 0) + count
        return Marking(merged)

    def __sub__(self, other: "Marking") -> "Marking":
        """Place-wise difference; raises InvalidMarking if a count would go negative."""
        merged = dict(self._tokens)
        for place, count in other.items():
            merged[place] = merged.get(place, 0) - count
        return Marking(merged)

    def __reduce__(self):
        return (Marking, (self._tokens,))

    def __repr__(self) -> str:
        return "[" + ", ".join(f"{p}:{self._tokens[p]}" for p in self) + "]"


@dataclass(frozen=True)
class PetriNet:
    """Labelled place/transition net with explicit initial and (optional) final marking.

    Arcs are (source, target) id pairs with multiplicity 1. The constructor does not
    check well-formedness; `petri_service.validate` reports violations instead.
    """

    name: str
    places: Tuple[str, ...]
    transitions: Tuple[str, ...]
    arcs: FrozenSet[Tuple[str, str]]
    labels: Dict[str, Label]
    initial_marking: Marking = field(default_factory=Marking)
    final_marking: Optional[Marking] = None

    @cached_property
    def preset(self) -> Dict[str, Tuple[str, ...]]:
        """transition -> input places, sorted."""
        place_set = set(self.places)
        inputs: Dict[str, List[str]] = {t: [] for t in self.transitions}
        for source, target in self.arcs:
            if source in place_set and target in inputs:
                inputs[target].append(source)
        return {t: tuple(sorted(ps)) for t, ps in inputs.items()}

    @cached_property
    def postset(self) -> Dict[str, Tuple[str, ...]]:
        """transition -> output places, sorted."""
        place_set = set(self.places)
        outputs: Dict[str, List[str]] = {t: [] for t in self.transitions}
        for source, target in self.arcs:
            if source in outputs and target in place_set:
                outputs[source].append(target)
        return {t: tuple(sorted(ps)) for t, ps in outputs.items()}

    @cached_property
    def consumers(self) -> Dict[str, Tuple[str, ...]]:
        """place -> transitions that take a token from it, in declaration order."""
        by_place: Dict[str, List[str]] = {p: [] for p in self.places}
        for t in self.transitions:
            for p in self.preset[t]:
                by_place[p].append(t)
        return {p: tuple(ts) for p, ts in by_place.items()}

    @cached_property
    def source_transitions(self) -> Tuple[str, ...]:
        """Transitions with an empty preset (always enabled)."""
        return tuple(t for t in self.transitions if not self.preset[t])

    def label(self, transition: str) -> Optional[Label]:
        """Label of a transition, TAU for silent ones"""
        return self.labels.get(transition)

    @property
    def visible_labels(self) -> FrozenSet[str]:
        """Activity labels of the non-silent transitions"""
        return frozenset(l for l in self.labels.values() if not is_silent(l))

    def with_final_marking(self, marking: Marking) -> "PetriNet":
        """Copy of the net with another final marking."""
        return replace(self, final_marking=marking)


# Violations reported by petri_service.validate


@dataclass(frozen=True)
class DanglingArc:
    """Arc endpoint that is neither a place nor a transition."""

    source: str
    target: str
    missing: str

    def __str__(self):
        return f"DanglingArc({self.source}->{self.target}: unknown {self.missing!r})"


@dataclass(frozen=True)
class NonBipartiteArc:
    """Arc joining two places or two transitions."""

    source: str
    target: str

    def __str__(self):
        return f"NonBipartiteArc({self.source}->{self.target})"


@dataclass(frozen=True)
class UnlabelledTransition:
    transition: str

    def __str__(self):
        return f"UnlabelledTransition({self.transition})"


@dataclass(frozen=True)
class DuplicateId:
    """Id used twice across places and transitions."""

    element: str

    def __str__(self):
        return f"DuplicateId({self.element})"


@dataclass(frozen=True)
class MarkingOutsideNet:
    """Initial or final marking puts tokens on an unknown place."""

    marking: str
    place: str

    def __str__(self):
        return f"MarkingOutsideNet({self.marking} marking on unknown place {self.place!r})"


# Probabilistic and deterministic logs


@dataclass(frozen=True)
class ProbEvent:
    """Categorical distribution over candidate activities for one observed event."""

    candidates: Dict[str, float]

    @property
    def activities(self) -> Tuple[str, ...]:
        """Candidate activities with non-zero probability."""
        return tuple(self.candidates)

    def probability(self, activity: str) -> float:
        """P(activity), 0 for non-candidates"""
        return self.candidates.get(activity, 0.0)

    @property
    def total(self) -> float:
        """Sum of the candidate probabilities."""
        return math.fsum(self.candidates.values())


@dataclass(frozen=True)
class ProbTrace:
    """One case of a probabilistic log."""

    case_id: str
    events: Tuple[ProbEvent, ...]

    def __len__(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class ProbEventLog:
    """Probabilistic traces plus the activity universe they draw from."""

    traces: Tuple[ProbTrace, ...]
    activity_universe: FrozenSet[str]

    def __len__(self) -> int:
        return len(self.traces)


@dataclass(frozen=True)
class DetTrace:
    """One case of a deterministic log."""

    case_id: str
    activities: Tuple[str, ...]

    def __len__(self) -> int:
        return len(self.activities)


@dataclass(frozen=True)
class SumViolation:
    """Event whose probabilities do not sum to 1 within tolerance."""

    case_id: str
    index: int
    total: float

    def __str__(self):
        return f"SumViolation({self.case_id}, e{self.index}, sum={self.total:.12g})"


@dataclass(frozen=True)
class ProbabilityRange:
    """Probability outside [0, 1]."""

    case_id: str
    index: int
    activity: str
    value: float

    def __str__(self):
        return f"ProbabilityRange({self.case_id}, e{self.index}, {self.activity}={self.value!r})"


@dataclass(frozen=True)
class UnknownActivity:
    """Candidate activity missing from the activity universe."""

    case_id: str
    index: int
    activity: str

    def __str__(self):
        return f"UnknownActivity({self.case_id}, e{self.index}, {self.activity!r})"


@dataclass(frozen=True)
class EmptyTraceViolation:
    """Trace without events."""

    case_id: str

    def __str__(self):
        return f"EmptyTrace({self.case_id})"


# Synchronous products and alignments


class MoveKind(str, Enum):
    """Kinds of product transition."""

    SYNC = "sync"
    LOG = "log"
    MODEL = "model"
    TAU = "tau"


@dataclass(frozen=True)
class SyncProductNet:
    """Product of a process model and a (weighted) trace model.

    Transition ids are "(model_id,trace_id)" with ≫ standing in for the absent side.
    """

    net: PetriNet
    kind: Dict[str, MoveKind]
    weight: Dict[str, float]
    origin: Dict[str, Tuple[Optional[str], Optional[str]]]
    model_label: Dict[str, Optional[Label]]
    log_label: Dict[str, Optional[str]]
    event_index: Dict[str, Optional[int]]
    trace_length: int

    def transitions_of_kind(self, kind: MoveKind) -> Tuple[str, ...]:
        """Product transitions of one kind, in declaration order."""
        return tuple(t for t in self.net.transitions if self.kind[t] is kind)


class CostVariant(str, Enum):
    """Standard unit costs or probability-weighted costs."""

    STANDARD = "standard"
    WEIGHTED = "weighted"


@dataclass(frozen=True)
class CostFunction:
    """Cost variant plus ε; a weighted function without a valid ε is rejected."""

    variant: CostVariant
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.variant is CostVariant.WEIGHTED:
            eps = self.epsilon
            if eps is None or not isinstance(eps, numbers.Real) or math.isnan(eps) or not (
                Settings.EPSILON_MIN <= eps <= Settings.EPSILON_MAX
            ):
                raise InvalidEpsilon(
                    f"epsilon must lie in [{Settings.EPSILON_MIN}, {Settings.EPSILON_MAX}], got {eps!r}",
                    {"epsilon": eps},
                )
        elif self.epsilon is not None:
            raise InvalidInput("the standard cost function takes no epsilon")

    @classmethod
    def standard(cls) -> "CostFunction":
        """Unit costs for log and model moves."""
        return cls(CostVariant.STANDARD)

    @classmethod
    def weighted(cls, epsilon: float) -> "CostFunction":
        """Probability-weighted costs with trust threshold ε."""
        return cls(CostVariant.WEIGHTED, float(epsilon))

    @property
    def is_weighted(self) -> bool:
        return self.variant is CostVariant.WEIGHTED

    def __str__(self):
        return f"weighted(eps={self.epsilon:g})" if self.is_weighted else "standard"


@dataclass(frozen=True)
class Move:
    """One step of an alignment."""

    transition: str
    kind: MoveKind
    model_label: Optional[Label]
    log_label: Optional[str]
    event_index: Optional[int]
    weight: float
    cost: float

    @property
    def log_side(self) -> str:
        return self.log_label if self.log_label is not None else SKIP

    @property
    def model_side(self) -> str:
        return str(self.model_label) if self.model_label is not None else SKIP

    def __str__(self):
        return f"({self.log_side},{self.model_side})"


@dataclass(frozen=True)
class SearchStats:
    """Search effort for one alignment."""

    expanded: int = 0
    generated: int = 0
    queue_peak: int = 0
    elapsed: float = 0.0
    product_places: int = 0
    product_transitions: int = 0


@dataclass(frozen=True)
class Alignment:
    """Optimal alignment of one trace with its cost and search statistics."""

    moves: Tuple[Move, ...]
    total_cost: float
    stats: SearchStats
    cost_function: CostFunction
    trace_length: int
    case_id: Optional[str] = None

    def event_moves(self) -> Tuple[Move, ...]:
        """Moves that consume a trace event (sync and log moves), in event order."""
        consuming = [m for m in self.moves if m.event_index is not None]
        return tuple(sorted(consuming, key=lambda m: m.event_index))

    def pairs(self) -> Tuple[Tuple[str, str], ...]:
        """(log side, model side) per move, e.g. ("≫", "a") for a model move on a."""
        return tuple((m.log_side, m.model_side) for m in self.moves)

    def render(self) -> str:
        """Two-row table: event log on top, process model below."""
        cells = [(m.log_side, m.model_side) for m in self.moves]
        widths = [max(len(top), len(bottom)) for top, bottom in cells]
        top = " | ".join(c[0].center(w) for c, w in zip(cells, widths))
        bottom = " | ".join(c[1].center(w) for c, w in zip(cells, widths))
        return f"log   | {top} |\nmodel | {bottom} |"


# Ground truth and evaluation


class EventLabel(str, Enum):
    """Ground-truth or predicted label of an event."""

    NORMAL = "normal"
    DEVIATION = "deviation"


@dataclass(frozen=True)
class NoisyEvent:
    """What noise injection did to one event: original kept with probability p."""

    original: str
    added: str
    p: float


@dataclass(frozen=True)
class EventTruth:
    """NoisyEvent plus its label for a given T_d."""

    original: str
    added: str
    p: float
    label: EventLabel


@dataclass(frozen=True)
class GroundTruth:
    """Labelled events of one case"""

    case_id: str
    events: Tuple[EventTruth, ...]
    t_d: float

    @property
    def labels(self) -> Tuple[EventLabel, ...]:
        """Labels in event order."""
        return tuple(e.label for e in self.events)


@dataclass(frozen=True)
class RecoveredTrace:
    """Activities an alignment attributes to the events of a trace."""

    case_id: Optional[str]
    activities: Tuple[str, ...]


@dataclass(frozen=True)
class CaseResult:
    """One case of a batch: an alignment, or the machine-readable error that stopped it."""

    case_id: str
    alignment: Optional[Alignment] = None
    error: Optional[Dict[str, object]] = None

    @property
    def ok(self) -> bool:
        return self.alignment is not None
