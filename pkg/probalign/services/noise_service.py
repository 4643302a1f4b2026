"""Synthetic probabilistic logs: seeded models, play-out and noise injection.

Every random draw goes through numpy's PCG64 bit generator seeded by a
SeedSequence, so a (seed, case index) pair reproduces the same output on every
platform and regardless of how cases are spread over workers.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import InvalidInput, UniverseTooSmall
from ..models import (
    TAU,
    DetTrace,
    EventLabel,
    EventTruth,
    GroundTruth,
    Marking,
    NoisyEvent,
    PetriNet,
    ProbEvent,
    ProbEventLog,
    ProbTrace,
    is_silent,
)
from ..schemas import NoiseConfig
from .petri_service import enabled_transitions, fire
from .problog_service import make_log

logger = logging.getLogger(__name__)

# stream ids mixed into the seed so models, play-out and noise never share draws
_MODEL_STREAM = 1
_PLAYOUT_STREAM = 2
_NOISE_STREAM = 3
_SPLIT_STREAM = 4


def generator(seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *keys])))


def high_count(p_h: float, m: int) -> int:
    """round(P_h * m), halves rounded up."""
    return int(math.floor(p_h * m + 0.5))


def _draw_probability(rng: np.random.Generator, high: bool) -> float:
    low, upper = (0.5, 1.0) if high else (0.0, 0.5)
    while True:
        p = float(rng.uniform(low, upper))
        if low < p < upper:
            return p


def _inject(trace: DetTrace, p_h: float, universe: Sequence[str], rng: np.random.Generator):
    m = len(trace.activities)
    order = rng.permutation(m)
    favoured = set(int(i) for i in order[: high_count(p_h, m)])

    events: List[ProbEvent] = []
    raw: List[NoisyEvent] = []
    for index, original in enumerate(trace.activities):
        alternatives = [a for a in universe if a != original]
        if not alternatives:
            raise UniverseTooSmall(
                f"no alternative activity for {original!r} in a universe of {len(universe)}",
                {"case_id": trace.case_id, "event": index},
            )
        added = alternatives[int(rng.integers(len(alternatives)))]
        p = _draw_probability(rng, index in favoured)
        events.append(ProbEvent(dict(sorted({original: p, added: 1.0 - p}.items()))))
        raw.append(NoisyEvent(original, added, p))
    return ProbTrace(trace.case_id, tuple(events)), raw


def inject(trace: DetTrace, cfg: NoiseConfig) -> Tuple[ProbTrace, List[NoisyEvent]]:
    """Attach one random alternative to every event of a ground-truth trace.

    Each event becomes {original: p, added: 1 - p}. A seeded permutation picks
    round(P_h * m) events whose p is drawn from (0.5, 1); the rest draw from (0, 0.5).
    """
    return _inject(trace, cfg.p_h, cfg.activity_universe, generator(cfg.seed, _NOISE_STREAM))


def inject_log(traces: Sequence[DetTrace], cfg: NoiseConfig) -> Tuple[ProbEventLog, List[List[NoisyEvent]]]:
    """inject() over a whole log, one derived seed per case index."""
    prob_traces = []
    raw_log = []
    for index, trace in enumerate(traces):
        rng = generator(cfg.seed, _NOISE_STREAM, index)
        prob, raw = _inject(trace, cfg.p_h, cfg.activity_universe, rng)
        prob_traces.append(prob)
        raw_log.append(raw)
    logger.info(f"Injected noise into {len(prob_traces)} traces (P_h={cfg.p_h}, seed={cfg.seed})")
    return make_log(prob_traces, cfg.activity_universe), raw_log


def label_ground_truth(gt_raw: Sequence[NoisyEvent], t_d: float, case_id: str = "") -> GroundTruth:
    """Normal iff the original's odds p / (1 - p) reach T_d."""
    if not (0 <= t_d <= 1):
        raise InvalidInput(f"T_d must lie in [0, 1], got {t_d!r}")
    events = tuple(
        EventTruth(
            e.original,
            e.added,
            e.p,
            EventLabel.NORMAL if e.p / (1.0 - e.p) >= t_d else EventLabel.DEVIATION,
        )
        for e in gt_raw
    )
    return GroundTruth(case_id, events, t_d)


def label_log(traces: Sequence[ProbTrace], raw_log: Sequence[Sequence[NoisyEvent]], t_d: float) -> List[GroundTruth]:
    return [label_ground_truth(raw, t_d, t.case_id) for t, raw in zip(traces, raw_log)]


# Models and play-out


def activity_names(n: int, prefix: str = "A") -> List[str]:
    width = max(2, len(str(n - 1)))
    return [f"{prefix}{i:0{width}d}" for i in range(n)]


def random_model(
    n_activities: int, seed: int, parallel: bool = True, name: Optional[str] = None
) -> PetriNet:
    """Seeded block-structured workflow net over activities A00, A01, ...

    Blocks are chained place to place: single activities, exclusive choices, one
    optional activity bypassed by a τ-transition and, when `parallel` and there
    are enough activities, one two-branch parallel block. Sound by construction.
    """
    if n_activities < 3:
        raise InvalidInput(f"a random model needs at least 3 activities, got {n_activities}")
    rng = generator(seed, _MODEL_STREAM)
    activities = activity_names(n_activities)

    blocks: List[Tuple[str, int]] = [("xor", 2), ("opt", 1)]
    remaining = n_activities - 3
    if parallel and remaining >= 2:
        blocks.append(("and", 2))
        remaining -= 2
    while remaining > 0:
        if remaining >= 2 and rng.random() < 0.3:
            size = min(remaining, int(rng.integers(2, 4)))
            blocks.append(("xor", size))
            remaining -= size
        else:
            blocks.append(("seq", 1))
            remaining -= 1
    blocks = [blocks[int(i)] for i in rng.permutation(len(blocks))]

    places = [f"p{i}" for i in range(len(blocks) + 1)]
    transitions: List[str] = []
    arcs = set()
    labels: Dict[str, object] = {}
    taus = 0
    cursor = 0

    def transition(tid, label, inputs, outputs):
        transitions.append(tid)
        labels[tid] = label
        arcs.update((p, tid) for p in inputs)
        arcs.update((tid, p) for p in outputs)

    for k, (kind, size) in enumerate(blocks):
        src, dst = places[k], places[k + 1]
        members = activities[cursor:cursor + size]
        cursor += size
        if kind == "and":
            branch = [f"{src}_{side}{j}" for j in range(2) for side in ("in", "out")]
            places.extend(branch)
            transition(f"tau{taus}", TAU, [src], [branch[0], branch[2]])
            transition(f"tau{taus + 1}", TAU, [branch[1], branch[3]], [dst])
            taus += 2
            transition(f"t_{members[0]}", members[0], [branch[0]], [branch[1]])
            transition(f"t_{members[1]}", members[1], [branch[2]], [branch[3]])
            continue
        for activity in members:
            transition(f"t_{activity}", activity, [src], [dst])
        if kind == "opt":
            transition(f"tau{taus}", TAU, [src], [dst])
            taus += 1

    return PetriNet(
        name=name or f"random-{n_activities}-{seed}",
        places=tuple(places),
        transitions=tuple(transitions),
        arcs=frozenset(arcs),
        labels=labels,
        initial_marking=Marking({places[0]: 1}),
        final_marking=Marking({places[len(blocks)]: 1}),
    )


def play_out(model: PetriNet, n_traces: int, seed: int, max_steps: Optional[int] = None) -> List[DetTrace]:
    """Seeded random runs from the initial to the final marking; τ firings leave no event."""
    if model.final_marking is None:
        raise InvalidInput(f"model {model.name!r} has no final marking to play out to")
    limit = max_steps or 10 * len(model.transitions) + 100
    traces = []
    for index in range(n_traces):
        rng = generator(seed, _PLAYOUT_STREAM, index)
        marking = model.initial_marking
        activities = []
        for _ in range(limit):
            if marking == model.final_marking:
                break
            enabled = sorted(enabled_transitions(model, marking))
            if not enabled:
                raise InvalidInput(f"model {model.name!r} deadlocks in {marking!r}")
            t = enabled[int(rng.integers(len(enabled)))]
            marking = fire(model, marking, t)
            if not is_silent(model.labels[t]):
                activities.append(model.labels[t])
        else:
            raise InvalidInput(f"play-out of {model.name!r} did not finish within {limit} steps")
        traces.append(DetTrace(f"case-{index:04d}", tuple(activities)))
    return traces


@dataclass(frozen=True)
class Suite:
    model: PetriNet
    traces: Tuple[DetTrace, ...]
    activity_universe: Tuple[str, ...]


def build_suite(n_activities: int = 20, n_traces: int = 100, extra_activities: int = 60, seed: int = 42) -> Suite:
    """A seeded model, conforming traces played out of it, and a wider activity universe.

    The `extra_activities` foreign names (X00, X01, ...) never occur in the model.
    """
    model = random_model(n_activities, seed)
    traces = play_out(model, n_traces, seed)
    universe = tuple(sorted(model.visible_labels | set(activity_names(extra_activities, "X") if extra_activities else ())))
    logger.info(
        f"Built suite: {n_activities} model activities, {extra_activities} foreign, {n_traces} traces (seed={seed})"
    )
    return Suite(model, tuple(traces), universe)


def split_dev(traces: Sequence, fraction: float = 0.7, seed: int = 42) -> Tuple[list, list]:
    """Seeded split into a development subset and the rest, each kept in input order."""
    if not (0 < fraction <= 1):
        raise InvalidInput(f"development fraction must lie in (0, 1], got {fraction!r}")
    n = len(traces)
    chosen = set(int(i) for i in generator(seed, _SPLIT_STREAM).permutation(n)[: high_count(fraction, n)])
    dev = [t for i, t in enumerate(traces) if i in chosen]
    rest = [t for i, t in enumerate(traces) if i not in chosen]
    return dev, rest
