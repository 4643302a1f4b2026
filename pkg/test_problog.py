"""
Tests for probabilistic events, traces and logs
"""
import pytest

from probalign.exceptions import EmptyTrace, InvalidInput
from probalign.models import DetTrace, EmptyTraceViolation, SumViolation, UnknownActivity
from probalign.services.problog_service import (
    activity_universe,
    argmax_log,
    argmax_trace,
    lift_deterministic,
    lift_log,
    make_event,
    make_log,
    make_trace,
    validate_log,
)


def test_make_event_drops_zero_candidates():
    event = make_event({"b": 0.7, "a": 0.3, "c": 0.0})
    assert event.activities == ("a", "b")
    assert event.probability("c") == 0.0


def test_make_event_rejects_bad_probabilities():
    with pytest.raises(InvalidInput):
        make_event({"a": -0.1, "b": 1.1})
    with pytest.raises(InvalidInput):
        make_event({"a": float("nan")})
    with pytest.raises(InvalidInput):
        make_event({"a": 0.0})
    with pytest.raises(InvalidInput):
        make_event({"": 1.0})


def test_make_event_renormalizes_only_when_asked():
    raw = make_event({"a": 0.3, "b": 0.6})
    assert raw.total == pytest.approx(0.9)
    scaled = make_event({"a": 0.3, "b": 0.6}, renormalize=True)
    assert scaled.probability("a") == pytest.approx(1 / 3)
    assert scaled.total == pytest.approx(1.0)


def test_validate_log_reports_sum_violation():
    """Test that an event summing to 0.9 is reported, not raised"""
    log = make_log([make_trace("c1", [make_event({"a": 0.3, "b": 0.6})])])
    violations = validate_log(log)
    assert violations == [SumViolation("c1", 0, pytest.approx(0.9))]


def test_validate_log_reports_unknown_activity_and_empty_trace(caplog):
    caplog.set_level("DEBUG", logger="probalign.services.problog_service")
    log = make_log(
        [make_trace("c1", [make_event({"a": 0.5, "zz": 0.5})]), make_trace("c2", [])],
        activity_universe=["a", "b"],
    )
    violations = validate_log(log)
    assert UnknownActivity("c1", 0, "zz") in violations
    assert EmptyTraceViolation("c2") in violations
    assert "Log validation found" in caplog.text


def test_validate_log_tolerance_must_be_positive(running_trace):
    with pytest.raises(InvalidInput):
        validate_log(make_log([running_trace]), tol=0)


def test_argmax_of_running_trace(running_trace):
    assert argmax_trace(running_trace) == DetTrace("running", ("b", "b", "c"))


def test_argmax_breaks_ties_by_name():
    trace = make_trace("tie", [make_event({"y": 0.5, "x": 0.5})])
    assert argmax_trace(trace).activities == ("x",)


def test_lift_deterministic_round_trips_through_argmax():
    det = DetTrace("d1", ("a", "b", "a"))
    lifted = lift_deterministic(det)
    assert all(e.candidates == {a: 1.0} for e, a in zip(lifted.events, det.activities))
    assert argmax_log(lift_log([det])) == [det]


def test_lift_rejects_empty_trace():
    with pytest.raises(EmptyTrace):
        lift_deterministic(DetTrace("empty", ()))


def test_activity_universe_is_sorted_and_unique():
    traces = [DetTrace("1", ("c", "a")), DetTrace("2", ("a", "b"))]
    assert activity_universe(traces) == ["a", "b", "c"]
