"""Codecs for probabilistic logs, deterministic logs and ground-truth sidecars.

JSON documents are checked against the pydantic document schemas first, then
rebuilt into domain values and validated; nothing malformed is coerced.
The CSV layout is the probability matrix of one case: one row per activity,
one column per event (e0, e1, ...).
"""
import io
import json
import logging
import re
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import pandas as pd
from pydantic import BaseModel, ValidationError

from ..exceptions import InvalidInput, LogValidationError, ParseError, SchemaError
from ..models import DetTrace, EventLabel, EventTruth, GroundTruth, ProbEventLog, ProbTrace
from ..schemas import (
    DetLogDocument,
    DetTraceDocument,
    EventTruthDocument,
    GroundTruthCaseDocument,
    GroundTruthDocument,
    ProbLogDocument,
    ProbLogTraceDocument,
)
from .problog_service import make_event, make_log, make_trace, validate_log

logger = logging.getLogger(__name__)

EVENT_COLUMN = re.compile(r"^e(\d+)$")


def _load_json(data: bytes) -> Any:
    try:
        return json.loads(data.decode("utf-8") if isinstance(data, bytes) else data)
    except UnicodeDecodeError as e:
        raise ParseError(f"not UTF-8: {e}")
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed JSON: {e.msg}", line=e.lineno)


def _parse_document(model: type, data: bytes) -> BaseModel:
    raw = _load_json(data)
    try:
        return model.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise SchemaError(f"{first['msg']} ({e.error_count()} error(s))", element=location or None)


def _dump(document: BaseModel) -> bytes:
    payload = document.model_dump(mode="json", exclude_none=True)
    return (json.dumps(payload, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _probability(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"probability must be a number, got {value!r}", element=where)
    return float(value)


def _checked(log: ProbEventLog, tol: Optional[float]) -> ProbEventLog:
    violations = validate_log(log, tol)
    if violations:
        raise LogValidationError(violations)
    return log


# Probabilistic logs


def read_prob_log_json(data: bytes, renormalize: bool = False, tol: Optional[float] = None) -> ProbEventLog:
    document: ProbLogDocument = _parse_document(ProbLogDocument, data)
    traces = []
    for t, trace_doc in enumerate(document.traces):
        events = []
        for i, candidates in enumerate(trace_doc.events):
            where = f"traces.{t}.events.{i}"
            checked = {a: _probability(p, where) for a, p in candidates.items()}
            try:
                events.append(make_event(checked, renormalize=renormalize))
            except InvalidInput as e:
                raise SchemaError(e.message, element=where)
        traces.append(make_trace(trace_doc.case_id, events))
    log = make_log(traces, document.activity_universe)
    logger.info(f"Read probabilistic log: {len(log.traces)} traces, {len(log.activity_universe)} activities")
    return _checked(log, tol)


def write_prob_log_json(log: ProbEventLog) -> bytes:
    document = ProbLogDocument(
        activity_universe=sorted(log.activity_universe),
        traces=[
            ProbLogTraceDocument(case_id=t.case_id, events=[dict(sorted(e.candidates.items())) for e in t.events])
            for t in log.traces
        ],
    )
    return _dump(document)


def read_prob_trace_csv(data: bytes, case_id: str, renormalize: bool = False) -> ProbTrace:
    """One case's probability matrix: header `activity,e0,e1,...`, one row per activity."""
    try:
        frame = pd.read_csv(io.BytesIO(data), dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(f"malformed CSV for case {case_id!r}: {e}")

    columns = list(frame.columns)
    if not columns or columns[0].strip() != "activity":
        raise SchemaError("first column must be 'activity'", line=1, element=case_id)
    events = columns[1:]
    for position, column in enumerate(events):
        match = EVENT_COLUMN.match(column.strip())
        if not match or int(match.group(1)) != position:
            raise SchemaError(f"expected column e{position}, got {column!r}", line=1, element=case_id)

    activities = [a.strip() for a in frame["activity"]]
    if len(set(activities)) != len(activities):
        raise SchemaError("duplicate activity row", element=case_id)

    columns_of_events: List[Dict[str, float]] = [{} for _ in events]
    for row, activity in enumerate(activities):
        for position, column in enumerate(events):
            cell = frame.iloc[row][column].strip()
            try:
                columns_of_events[position][activity] = float(cell)
            except ValueError:
                raise SchemaError(
                    f"probability {cell!r} of {activity!r} in {column} is not a number", line=row + 2, element=case_id
                )

    try:
        return make_trace(case_id, [make_event(c, renormalize=renormalize) for c in columns_of_events])
    except InvalidInput as e:
        raise SchemaError(e.message, element=case_id)


def read_prob_log_csv(
    files: Sequence[Tuple[str, bytes]], renormalize: bool = False, tol: Optional[float] = None
) -> ProbEventLog:
    """A log from (case id, CSV bytes) pairs, one matrix per case."""
    traces = [read_prob_trace_csv(data, case_id, renormalize) for case_id, data in files]
    return _checked(make_log(traces), tol)


def _format_probability(p: float) -> str:
    return "0" if p == 0 else repr(float(p))


def write_prob_trace_csv(trace: ProbTrace) -> bytes:
    activities = sorted({a for e in trace.events for a in e.candidates})
    frame = pd.DataFrame(
        {f"e{i}": [_format_probability(e.probability(a)) for a in activities] for i, e in enumerate(trace.events)},
    )
    frame.insert(0, "activity", activities)
    return frame.to_csv(index=False, lineterminator="\n").encode("utf-8")


def write_prob_log_csv(log: ProbEventLog) -> List[Tuple[str, bytes]]:
    return [(t.case_id, write_prob_trace_csv(t)) for t in log.traces]


def case_id_from_path(path: Path) -> str:
    name = path.name
    for suffix in (".problog.csv", ".csv"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return path.stem


def read_prob_log_path(path: Path, renormalize: bool = False, tol: Optional[float] = None) -> ProbEventLog:
    """A .problog.json file, a single .problog.csv file, or a directory of them."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.csv"))
        if not files:
            raise InvalidInput(f"no CSV files in {path}")
        return read_prob_log_csv([(case_id_from_path(f), f.read_bytes()) for f in files], renormalize, tol)
    if path.suffix == ".csv":
        return read_prob_log_csv([(case_id_from_path(path), path.read_bytes())], renormalize, tol)
    return read_prob_log_json(path.read_bytes(), renormalize, tol)


# Deterministic logs


def read_det_log_json(data: bytes) -> Tuple[List[DetTrace], Optional[List[str]]]:
    """Traces plus the declared activity universe, when the document has one."""
    document: DetLogDocument = _parse_document(DetLogDocument, data)
    traces = []
    for t in document.traces:
        if any(not a for a in t.activities):
            raise SchemaError("activity names must be non-empty", element=t.case_id)
        traces.append(DetTrace(t.case_id, tuple(t.activities)))
    universe = sorted(set(document.activity_universe)) if document.activity_universe is not None else None
    return traces, universe


def write_det_log_json(traces: Iterable[DetTrace], activity_universe: Optional[Iterable[str]] = None) -> bytes:
    document = DetLogDocument(
        activity_universe=sorted(activity_universe) if activity_universe is not None else None,
        traces=[DetTraceDocument(case_id=t.case_id, activities=list(t.activities)) for t in traces]
    )
    return _dump(document)


# Ground-truth sidecars


def write_ground_truth(
    truths: Sequence[GroundTruth], t_d: float, p_h: Optional[float] = None, seed: Optional[int] = None
) -> bytes:
    document = GroundTruthDocument(
        t_d=t_d,
        p_h=p_h,
        seed=seed,
        cases=[
            GroundTruthCaseDocument(
                case_id=gt.case_id,
                events=[
                    EventTruthDocument(original=e.original, added=e.added, p=e.p, label=e.label) for e in gt.events
                ],
            )
            for gt in truths
        ],
    )
    return _dump(document)


def read_ground_truth(data: bytes) -> List[GroundTruth]:
    document: GroundTruthDocument = _parse_document(GroundTruthDocument, data)
    return [
        GroundTruth(
            case.case_id,
            tuple(EventTruth(e.original, e.added, e.p, EventLabel(e.label)) for e in case.events),
            document.t_d,
        )
        for case in document.cases
    ]
