"""Deviation detection, parameter sweeps and runtime benchmarks over whole logs.

Three algorithms are compared:
  standard    unit costs on the Argmax projection of every trace
  probcost    weighted costs with a chosen ε
  lowertrust  weighted costs with ε = 0.01, trusting the model over the log
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

from ..config import Settings
from ..exceptions import InvalidInput, ProbAlignError, UsageError
from ..models import CaseResult, CostFunction, GroundTruth, NoisyEvent, PetriNet, ProbEventLog
from ..schemas import Algorithm, EvalReport, ReportRow
from .alignment_service import align_log
from .builder_service import ensure_final_marking
from .evaluation_service import aggregate, classify_moves, score
from .noise_service import label_ground_truth, split_dev
from .problog_service import argmax_log, make_log
from .report_service import bench_row

logger = logging.getLogger(__name__)

LOWER_TRUST_EPSILON = 0.01


def clamp_epsilon(value: float) -> float:
    return min(max(value, Settings.EPSILON_MIN), Settings.EPSILON_MAX)


def epsilon_grid(values: Sequence[float]) -> List[float]:
    """Grid points must lie in (0, 1]; 1 and anything above 1 - 1e-6 is capped there."""
    grid = []
    for value in values:
        if not (0 < value <= 1):
            raise UsageError(f"epsilon grid points must lie in (0, 1], got {value}")
        grid.append(min(value, Settings.EPSILON_MAX))
    return grid


def t_d_grid(values: Sequence[float]) -> List[float]:
    for value in values:
        if not (0 <= value <= 1):
            raise UsageError(f"T_d grid points must lie in [0, 1], got {value}")
    return list(values)


def relabel(truths: Sequence[GroundTruth], t_d: float) -> List[GroundTruth]:
    return [
        label_ground_truth([NoisyEvent(e.original, e.added, e.p) for e in gt.events], t_d, gt.case_id)
        for gt in truths
    ]


class ExperimentRunner:
    def __init__(
        self,
        model: PetriNet,
        workers: int = 1,
        max_expansions: Optional[int] = None,
        timeout: Optional[float] = None,
        timings: bool = False,
    ):
        self.model = ensure_final_marking(model)
        self.workers = workers
        self.max_expansions = max_expansions
        self.timeout = timeout
        self.timings = timings

    def run(self, log: ProbEventLog, algorithm: Algorithm, epsilon: Optional[float] = None) -> List[CaseResult]:
        """Align every case of `log` the way `algorithm` does."""
        if algorithm is Algorithm.STANDARD:
            traces, cost_function = argmax_log(log), CostFunction.standard()
        elif algorithm is Algorithm.LOWERTRUST:
            traces, cost_function = log.traces, CostFunction.weighted(LOWER_TRUST_EPSILON)
        else:
            if epsilon is None:
                raise UsageError("probcost needs an epsilon")
            traces, cost_function = log.traces, CostFunction.weighted(epsilon)
        return align_log(
            self.model,
            traces,
            cost_function,
            workers=self.workers,
            max_expansions=self.max_expansions,
            timeout=self.timeout,
        )

    def runtime(self, results: Sequence[CaseResult]) -> float:
        if not self.timings:
            return 0.0
        return sum(r.alignment.stats.elapsed for r in results if r.ok)

    def score_results(self, results: Sequence[CaseResult], truths: Sequence[GroundTruth]) -> EvalReport:
        """Per-case confusion counts, summed before any ratio is taken."""
        by_case = {gt.case_id: gt for gt in truths}
        reports = []
        for result in results:
            if not result.ok:
                raise ProbAlignError.from_dict(result.error)
            truth = by_case.get(result.case_id)
            if truth is None:
                raise InvalidInput(f"no ground truth for case {result.case_id!r}", {"case_id": result.case_id})
            reports.append(score(classify_moves(result.alignment), truth))
        return aggregate(reports)

    def detect(
        self,
        log: ProbEventLog,
        truths: Sequence[GroundTruth],
        algorithm: Algorithm,
        epsilon: Optional[float] = None,
    ) -> Tuple[EvalReport, float]:
        try:
            results = self.run(log, algorithm, epsilon)
            report = self.score_results(results, truths)
        except ProbAlignError as e:
            logger.error(f"Detection with {algorithm.value} failed: {e.message}")
            raise
        logger.info(
            f"{algorithm.value}: accuracy={report.accuracy:.4f} sensitivity={report.sensitivity:.4f} "
            f"specificity={report.specificity:.4f} g_mean={report.g_mean:.4f}"
        )
        return report, self.runtime(results)

    def compare(
        self, log: ProbEventLog, truths: Sequence[GroundTruth], epsilon: float, t_d: Optional[float] = None
    ) -> List[ReportRow]:
        """One row per algorithm on the same log and ground truth."""
        rows = []
        for algorithm in Algorithm:
            report, runtime = self.detect(log, truths, algorithm, epsilon)
            rows.append(self.report_row(epsilon, t_d, algorithm, report, runtime))
        return rows

    def sweep_epsilon(
        self,
        log: ProbEventLog,
        truths: Sequence[GroundTruth],
        grid: Sequence[float],
        t_d: Optional[float] = None,
        dev_fraction: Optional[float] = None,
        seed: int = 42,
    ) -> List[ReportRow]:
        """ProbCost at every grid point; the two baselines do not depend on ε and run once."""
        grid = epsilon_grid(grid)
        if dev_fraction is not None:
            dev, _ = split_dev(log.traces, dev_fraction, seed)
            log = make_log(dev, log.activity_universe)
            logger.info(f"Sweeping ε on a development subset of {len(dev)} traces")

        baselines = {a: self.detect(log, truths, a) for a in (Algorithm.STANDARD, Algorithm.LOWERTRUST)}
        rows = []
        for epsilon in grid:
            probcost, runtime = self.detect(log, truths, Algorithm.PROBCOST, epsilon)
            rows.append(self.report_row(epsilon, t_d, Algorithm.PROBCOST, probcost, runtime))
            for algorithm, (report, base_runtime) in baselines.items():
                rows.append(self.report_row(epsilon, t_d, algorithm, report, base_runtime))
        return rows

    def sweep_t_d(self, log: ProbEventLog, truths: Sequence[GroundTruth], grid: Sequence[float]) -> List[ReportRow]:
        """Relabel the ground truth per T_d; ProbCost runs with ε = T_d clamped into range."""
        grid = t_d_grid(grid)
        baselines = {a: self.run(log, a) for a in (Algorithm.STANDARD, Algorithm.LOWERTRUST)}
        rows = []
        for t_d in grid:
            labelled = relabel(truths, t_d)
            epsilon = clamp_epsilon(t_d)
            probcost, runtime = self.detect(log, labelled, Algorithm.PROBCOST, epsilon)
            rows.append(self.report_row(epsilon, t_d, Algorithm.PROBCOST, probcost, runtime))
            for algorithm, results in baselines.items():
                report = self.score_results(results, labelled)
                rows.append(self.report_row(epsilon, t_d, algorithm, report, self.runtime(results)))
        return rows

    def bench(self, logs: Dict[str, ProbEventLog], epsilon: float) -> Tuple[List[Dict], List[Dict]]:
        """Standard vs weighted search cost per log; failed cases are recorded and skipped."""
        summary, per_case = [], []
        for name, log in logs.items():
            counts = [len(t.events) for t in log.traces]
            for variant, algorithm in (("standard", Algorithm.STANDARD), ("weighted", Algorithm.PROBCOST)):
                results = self.run(log, algorithm, epsilon)
                summary.append(bench_row(name, variant, self.model, counts, results, self.timings))
                for result, events in zip(results, counts):
                    per_case.append(self._case_row(name, variant, result, events))
        return summary, per_case

    def _case_row(self, log_name: str, variant: str, result: CaseResult, events: int) -> Dict:
        stats = result.alignment.stats if result.ok else None
        return {
            "log": log_name,
            "variant": variant,
            "case_id": result.case_id,
            "events": events,
            "expanded": stats.expanded if stats else 0,
            "generated": stats.generated if stats else 0,
            "product_transitions": stats.product_transitions if stats else 0,
            "time_s": stats.elapsed if stats and self.timings else 0.0,
            "error": "" if result.ok else result.error.get("error", "error"),
        }

    @staticmethod
    def report_row(epsilon, t_d, algorithm: Algorithm, report: EvalReport, runtime: float) -> ReportRow:
        return ReportRow(
            epsilon=epsilon,
            t_d=t_d,
            algorithm=algorithm.value,
            accuracy=report.accuracy,
            f1=report.f1,
            sensitivity=report.sensitivity,
            specificity=report.specificity,
            g_mean=report.g_mean,
            runtime_s=runtime,
        )
