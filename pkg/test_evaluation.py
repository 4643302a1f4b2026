"""
Tests for trace recovery, move classification and detection metrics
"""
import math

import pytest

from probalign.exceptions import LengthMismatch
from probalign.models import CostFunction, DetTrace, EventLabel, RecoveredTrace
from probalign.schemas import NoiseConfig
from probalign.services.alignment_service import align_trace
from probalign.services.evaluation_service import (
    added_sequences,
    aggregate,
    classify_moves,
    fitness_profile,
    mean_recovery_accuracy,
    recover,
    recovery_accuracy,
    report_from_counts,
    score,
    sign_test,
)
from probalign.services.noise_service import build_suite, inject_log

N, D = EventLabel.NORMAL, EventLabel.DEVIATION


def test_recover_running_at_low_epsilon(running_model, running_trace):
    """Test that ε=0.4 recovers ⟨a,b,c⟩ from the worked-example matrix"""
    alignment = align_trace(running_model, running_trace, CostFunction.weighted(0.4))
    recovered = recover(alignment)
    assert recovered.activities == ("a", "b", "c")
    assert recovery_accuracy(recovered, DetTrace("running", ("a", "b", "c"))) == 1.0
    assert classify_moves(alignment) == [N, N, N]


def test_recover_follows_event_order_not_move_order(running_model, running_trace):
    alignment = align_trace(running_model, running_trace, CostFunction.weighted(0.8))
    assert recover(alignment).activities == ("b", "b", "c")
    assert classify_moves(alignment) == [D, N, N]


def test_recovery_accuracy_counts_matches():
    recovered = RecoveredTrace("c", ("a", "x", "c", "y"))
    assert recovery_accuracy(recovered, DetTrace("c", ("a", "b", "c", "d"))) == 0.5
    with pytest.raises(LengthMismatch):
        recovery_accuracy(recovered, DetTrace("c", ("a",)))


def test_mean_recovery_is_event_weighted():
    recovered = [RecoveredTrace("1", ("a",)), RecoveredTrace("2", ("x", "b", "c"))]
    originals = [DetTrace("1", ("a",)), DetTrace("2", ("a", "b", "c"))]
    assert mean_recovery_accuracy(recovered, originals) == pytest.approx(3 / 4)


def test_score_counts_deviation_as_positive():
    report = score([D, D, N, N, D], [D, N, N, D, D])
    assert (report.tp, report.fp, report.tn, report.fn) == (2, 1, 1, 1)
    assert report.accuracy == pytest.approx(3 / 5)
    assert report.sensitivity == pytest.approx(2 / 3)
    assert report.specificity == pytest.approx(1 / 2)
    assert report.f1 == pytest.approx(4 / 6)
    assert report.g_mean == pytest.approx(math.sqrt(2 / 3 * 1 / 2))
    assert report.degenerate == []


def test_score_length_mismatch():
    with pytest.raises(LengthMismatch):
        score([N], [N, D])


def test_degenerate_denominators_are_zero_and_flagged():
    """Test that a run with no deviations reports sensitivity 0 and says so"""
    report = score([N, N], [N, N])
    assert report.sensitivity == 0.0
    assert report.g_mean == 0.0
    assert "sensitivity" in report.degenerate
    assert "f1" in report.degenerate
    assert report.specificity == 1.0


def test_aggregate_sums_counts_before_ratios():
    first = report_from_counts(tp=1, fp=0, tn=0, fn=0)
    second = report_from_counts(tp=0, fp=0, tn=9, fn=1)
    total = aggregate([first, second])
    assert (total.tp, total.tn, total.fn) == (1, 9, 1)
    assert total.accuracy == pytest.approx(10 / 11)
    assert total.sensitivity == pytest.approx(1 / 2)
    assert aggregate([second, first]) == total


def test_sign_test():
    assert sign_test([(0.1, 0.2), (0.3, 0.3), (0.5, 0.4), (0.0, 1.0)]) == (2, 1, 1)


def test_added_activities_fit_the_model_worse_than_originals():
    """Test that conforming traces have fitness 1 while the added-activity sequences score lower"""
    suite = build_suite(8, 12, 10, seed=3)
    _, raw = inject_log(suite.traces, NoiseConfig(p_h=0.0, seed=3, activity_universe=suite.activity_universe))
    added = added_sequences(suite.traces, raw)
    assert [len(a) for a in added] == [len(t) for t in suite.traces]
    assert all(a != t.activities[i] for s, t in zip(added, suite.traces) for i, a in enumerate(s.activities))

    original = fitness_profile(suite.model, suite.traces)
    noisy = fitness_profile(suite.model, added)
    fitting = sum(1 for t in suite.traces if t.activities)
    assert original == {"cases": fitting, "failed": 0, "mean": 1.0, "sd": 0.0}
    assert noisy["cases"] == fitting
    assert noisy["mean"] < 0.8
    assert noisy["sd"] >= 0.0
