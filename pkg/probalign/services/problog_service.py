import logging
import math
from typing import Iterable, List, Mapping, Optional, Sequence

from ..config import settings
from ..exceptions import EmptyTrace, InvalidInput
from ..models import (
    DetTrace,
    EmptyTraceViolation,
    ProbabilityRange,
    ProbEvent,
    ProbEventLog,
    ProbTrace,
    SumViolation,
    UnknownActivity,
    check_activity,
)

logger = logging.getLogger(__name__)


def make_event(candidates: Mapping[str, float], renormalize: bool = False) -> ProbEvent:
    """Build an event, dropping zero-probability candidates.

    Negative, NaN or infinite probabilities are rejected outright; the sum is only
    checked by validate_log, unless `renormalize` rescales the positive entries to 1.
    """
    kept = {}
    for activity, value in candidates.items():
        check_activity(activity)
        try:
            p = float(value)
        except (TypeError, ValueError):
            raise InvalidInput(f"probability of {activity!r} is not a number: {value!r}")
        if math.isnan(p) or math.isinf(p) or p < 0:
            raise InvalidInput(f"probability of {activity!r} must be finite and >= 0, got {value!r}")
        if p > 0:
            kept[activity] = p
    if not kept:
        raise InvalidInput("event has no candidate with positive probability")
    if renormalize:
        total = math.fsum(kept.values())
        kept = {a: p / total for a, p in kept.items()}
    return ProbEvent(dict(sorted(kept.items())))


def make_trace(case_id: str, events: Sequence[ProbEvent]) -> ProbTrace:
    return ProbTrace(str(case_id), tuple(events))


def make_log(traces: Iterable[ProbTrace], activity_universe: Optional[Iterable[str]] = None) -> ProbEventLog:
    traces = tuple(traces)
    if activity_universe is None:
        universe = {a for t in traces for e in t.events for a in e.candidates}
    else:
        universe = {check_activity(a) for a in activity_universe}
    return ProbEventLog(traces, frozenset(universe))


def validate_log(log: ProbEventLog, tol: Optional[float] = None) -> List[object]:
    """Report every event whose distribution is malformed; never raises on bad data."""
    tol = settings.SUM_TOLERANCE if tol is None else tol
    if not tol > 0:
        raise InvalidInput(f"tolerance must be > 0, got {tol!r}")

    violations: List[object] = []
    for trace in log.traces:
        if not trace.events:
            violations.append(EmptyTraceViolation(trace.case_id))
        for index, event in enumerate(trace.events):
            for activity, p in event.candidates.items():
                if not (0 < p <= 1):
                    violations.append(ProbabilityRange(trace.case_id, index, activity, p))
                if activity not in log.activity_universe:
                    violations.append(UnknownActivity(trace.case_id, index, activity))
            total = event.total
            if abs(total - 1.0) > tol:
                violations.append(SumViolation(trace.case_id, index, total))
    if violations:
        logger.debug(f"Log validation found {len(violations)} violation(s) in {len(log.traces)} traces")
    return violations


def argmax_trace(trace: ProbTrace) -> DetTrace:
    """Most probable activity per event; ties go to the lexicographically smallest name."""
    activities = []
    for event in trace.events:
        best = min(event.candidates.items(), key=lambda item: (-item[1], item[0]))
        activities.append(best[0])
    return DetTrace(trace.case_id, tuple(activities))


def argmax_log(log: ProbEventLog) -> List[DetTrace]:
    return [argmax_trace(t) for t in log.traces]


def lift_deterministic(trace: DetTrace) -> ProbTrace:
    """A deterministic trace is the probability-1 special case of a probabilistic one."""
    if not trace.activities:
        raise EmptyTrace(f"trace {trace.case_id!r} has no events", {"case_id": trace.case_id})
    return ProbTrace(trace.case_id, tuple(ProbEvent({check_activity(a): 1.0}) for a in trace.activities))


def lift_log(traces: Iterable[DetTrace]) -> ProbEventLog:
    lifted = [lift_deterministic(t) for t in traces]
    return make_log(lifted)


def activity_universe(traces: Iterable[DetTrace]) -> List[str]:
    return sorted({a for t in traces for a in t.activities})
