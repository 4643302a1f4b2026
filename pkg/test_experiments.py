"""
Tests for detection runs, parameter sweeps and the synthetic experiment trends
"""
import statistics

import pytest

from probalign.cli.commands import parse_grid
from probalign.exceptions import InvalidInput, ProbAlignError, UsageError
from probalign.models import CaseResult
from probalign.schemas import Algorithm, NoiseConfig
from probalign.services.evaluation_service import recovery_experiment, sign_test
from probalign.services.experiment_service import (
    ExperimentRunner,
    clamp_epsilon,
    epsilon_grid,
    relabel,
    t_d_grid,
)
from probalign.services.noise_service import build_suite, inject_log, label_log

SEEDS = range(10)


def _noisy_suite(seed: int, n_activities: int = 20, n_traces: int = 100, extra: int = 60, p_h: float = 0.0):
    suite = build_suite(n_activities, n_traces, extra, seed)
    log, raw = inject_log(suite.traces, NoiseConfig(p_h=p_h, seed=seed, activity_universe=suite.activity_universe))
    return suite, log, label_log(log.traces, raw, 0.25)


@pytest.fixture(scope="module")
def small():
    return _noisy_suite(3, n_activities=8, n_traces=12, extra=10)


# Grids and presets


def test_parse_grid():
    assert parse_grid("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert parse_grid("0.05:1:0.05")[-1] == 1.0
    assert len(parse_grid("0.05:1:0.05")) == 20
    assert parse_grid("0.1, 0.3") == [0.1, 0.3]
    with pytest.raises(UsageError):
        parse_grid("0:1:0")
    with pytest.raises(UsageError):
        parse_grid("a,b")


def test_epsilon_grid_caps_one():
    assert epsilon_grid([0.25, 1.0]) == [0.25, 1 - 1e-6]
    with pytest.raises(UsageError):
        epsilon_grid([0.0])
    with pytest.raises(UsageError):
        t_d_grid([1.5])


def test_clamp_epsilon():
    assert clamp_epsilon(0.0) == 1e-6
    assert clamp_epsilon(1.0) == 1 - 1e-6
    assert clamp_epsilon(0.3) == 0.3


def test_relabel_keeps_probabilities(small):
    _, _, truths = small
    relabelled = relabel(truths, 0.0)
    assert [t.case_id for t in relabelled] == [t.case_id for t in truths]
    assert all(t.t_d == 0.0 for t in relabelled)
    assert [e.p for e in relabelled[0].events] == [e.p for e in truths[0].events]


# Runner


def test_compare_rows_per_algorithm(small):
    suite, log, truths = small
    rows = ExperimentRunner(suite.model).compare(log, truths, 0.25, 0.25)
    assert [r.algorithm for r in rows] == ["standard", "probcost", "lowertrust"]
    assert all(r.runtime_s == 0.0 for r in rows)
    assert all(0 <= r.g_mean <= 1 for r in rows)


def test_probcost_needs_epsilon(small):
    suite, log, _ = small
    with pytest.raises(UsageError):
        ExperimentRunner(suite.model).run(log, Algorithm.PROBCOST)


def test_sweep_epsilon_on_development_subset(small):
    suite, log, truths = small
    rows = ExperimentRunner(suite.model).sweep_epsilon(log, truths, [0.1, 0.5], 0.25, dev_fraction=0.5, seed=1)
    assert len(rows) == 6
    assert [r.epsilon for r in rows[::3]] == [0.1, 0.5]
    assert {r.t_d for r in rows} == {0.25}


def test_score_results_surfaces_failed_cases(small):
    suite, _, truths = small
    runner = ExperimentRunner(suite.model)
    failed = [CaseResult("case-0000", error={"error": "timeout", "message": "too slow", "details": {}})]
    with pytest.raises(ProbAlignError) as exc:
        runner.score_results(failed, truths)
    assert exc.value.code == "timeout"


def test_score_results_needs_ground_truth(small):
    suite, log, _ = small
    runner = ExperimentRunner(suite.model)
    with pytest.raises(InvalidInput):
        runner.score_results(runner.run(log, Algorithm.STANDARD), [])


def test_bench_rows(small):
    suite, log, _ = small
    summary, per_case = ExperimentRunner(suite.model).bench({"small": log}, 0.25)
    assert [r["variant"] for r in summary] == ["standard", "weighted"]
    assert len(per_case) == 2 * len(log.traces)
    assert summary[0]["model_transitions"] == len(suite.model.transitions)


# Experiment trends on the seeded synthetic suite


@pytest.mark.slow
def test_recovery_is_non_decreasing_in_p_h():
    """Test that recovery at ε=0.01 does not fall as P_h rises and matches Argmax at P_h=1"""
    grid = [0.0, 0.25, 0.5, 0.75, 1.0]
    pairs = []
    for seed in SEEDS:
        suite = build_suite(20, 100, 60, seed)
        rows = recovery_experiment(suite.model, suite.traces, grid, 0.01, seed, suite.activity_universe)
        pairs.extend((a["probcost"], b["probcost"]) for a, b in zip(rows, rows[1:]))
        assert rows[-1]["probcost"] == rows[-1]["argmax"] == 1.0
    wins, losses, ties = sign_test(pairs)
    assert wins + ties > losses


@pytest.mark.slow
def test_probcost_beats_both_baselines():
    """Test the detection ordering at P_h=0, T_d=0.25 and ε=0.25"""
    good = 0
    for seed in SEEDS:
        suite, log, truths = _noisy_suite(seed)
        runner = ExperimentRunner(suite.model)
        reports = {a: runner.detect(log, truths, a, 0.25)[0] for a in Algorithm}
        probcost = reports[Algorithm.PROBCOST]
        standard = reports[Algorithm.STANDARD]
        lowertrust = reports[Algorithm.LOWERTRUST]
        if (
            probcost.g_mean > standard.g_mean
            and probcost.g_mean > lowertrust.g_mean
            and lowertrust.sensitivity < min(probcost.sensitivity, standard.sensitivity)
            and standard.specificity < min(probcost.specificity, lowertrust.specificity)
        ):
            good += 1
    assert good >= 8


@pytest.mark.slow
def test_t_d_sweep_endpoints():
    """Test that T_d=0 zeroes every G-mean and T_d=1 matches standard accuracy"""
    suite, log, truths = _noisy_suite(0)
    rows = ExperimentRunner(suite.model).sweep_t_d(log, truths, [0.0, 1.0])
    at_zero = [r for r in rows if r.t_d == 0.0]
    assert len(at_zero) == 3
    assert all(r.g_mean == 0.0 for r in at_zero)

    at_one = {r.algorithm: r for r in rows if r.t_d == 1.0}
    assert at_one["probcost"].accuracy == pytest.approx(at_one["standard"].accuracy, abs=1e-6)


@pytest.mark.slow
def test_weighted_search_cost_stays_bounded():
    """Test that weighted products are larger but median time stays within 10x of standard"""
    suite, log, _ = _noisy_suite(1)
    summary, per_case = ExperimentRunner(suite.model, timings=True).bench({"suite": log}, 0.25)
    standard, weighted = summary
    assert standard["failed"] == weighted["failed"] == 0
    assert weighted["product_transitions_avg"] > standard["product_transitions_avg"]
    assert weighted["time_median_s"] <= 10 * max(standard["time_median_s"], 1e-4)
    assert max(r["expanded"] for r in per_case) <= 5_000_000
    assert statistics.median(r["events"] for r in per_case) > 0
