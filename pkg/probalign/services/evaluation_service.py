"""Trace recovery and deviation detection scored against ground truth.

Deviation is the positive class throughout: a true positive is a deviating event
that the alignment consumed with a log move.
"""
import logging
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import LengthMismatch
from ..models import (
    Alignment,
    CostFunction,
    DetTrace,
    EventLabel,
    GroundTruth,
    MoveKind,
    NoisyEvent,
    PetriNet,
    RecoveredTrace,
)
from ..schemas import EvalReport, NoiseConfig
from .alignment_service import align_log, fitness, model_path_cost
from .noise_service import inject_log
from .problog_service import argmax_log

logger = logging.getLogger(__name__)


def recover(alignment: Alignment) -> RecoveredTrace:
    """The activity each trace event was consumed as, in event order."""
    return RecoveredTrace(alignment.case_id, tuple(m.log_label for m in alignment.event_moves()))


def recovery_accuracy(recovered: RecoveredTrace, original: DetTrace) -> float:
    if len(recovered.activities) != len(original.activities):
        raise LengthMismatch(
            f"recovered trace has {len(recovered.activities)} events, original has {len(original.activities)}",
            {"case_id": original.case_id},
        )
    if not original.activities:
        return 1.0
    hits = sum(1 for r, o in zip(recovered.activities, original.activities) if r == o)
    return hits / len(original.activities)


def classify_moves(alignment: Alignment) -> List[EventLabel]:
    return [
        EventLabel.DEVIATION if m.kind is MoveKind.LOG else EventLabel.NORMAL
        for m in alignment.event_moves()
    ]


def _ratio(numerator: int, denominator: int, name: str, degenerate: List[str]) -> float:
    if denominator == 0:
        degenerate.append(name)
        return 0.0
    return numerator / denominator


def report_from_counts(tp: int, fp: int, tn: int, fn: int) -> EvalReport:
    degenerate: List[str] = []
    accuracy = _ratio(tp + tn, tp + fp + tn + fn, "accuracy", degenerate)
    sensitivity = _ratio(tp, tp + fn, "sensitivity", degenerate)
    specificity = _ratio(tn, tn + fp, "specificity", degenerate)
    f1 = _ratio(2 * tp, 2 * tp + fp + fn, "f1", degenerate)
    return EvalReport(
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        accuracy=accuracy,
        f1=f1,
        sensitivity=sensitivity,
        specificity=specificity,
        g_mean=math.sqrt(sensitivity * specificity),
        degenerate=degenerate,
    )


def score(predictions: Sequence[EventLabel], ground_truth: Union[GroundTruth, Sequence[EventLabel]]) -> EvalReport:
    """Confusion counts of predictions against ground-truth labels, Deviation positive."""
    truth = ground_truth.labels if isinstance(ground_truth, GroundTruth) else tuple(ground_truth)
    if len(predictions) != len(truth):
        raise LengthMismatch(f"{len(predictions)} predictions for {len(truth)} ground-truth events")
    tp = fp = tn = fn = 0
    for predicted, actual in zip(predictions, truth):
        if actual is EventLabel.DEVIATION:
            if predicted is EventLabel.DEVIATION:
                tp += 1
            else:
                fn += 1
        elif predicted is EventLabel.DEVIATION:
            fp += 1
        else:
            tn += 1
    return report_from_counts(tp, fp, tn, fn)


def aggregate(reports: Iterable[EvalReport]) -> EvalReport:
    """Sum confusion counts first, then derive the ratios."""
    tp = fp = tn = fn = 0
    for r in reports:
        tp += r.tp
        fp += r.fp
        tn += r.tn
        fn += r.fn
    return report_from_counts(tp, fp, tn, fn)


def sign_test(pairs: Iterable[Tuple[float, float]]) -> Tuple[int, int, int]:
    """(wins, losses, ties) of the second value over the first across pairs."""
    wins = losses = ties = 0
    for before, after in pairs:
        if after > before:
            wins += 1
        elif after < before:
            losses += 1
        else:
            ties += 1
    return wins, losses, ties


def mean_recovery_accuracy(recovered: Sequence[RecoveredTrace], originals: Sequence[DetTrace]) -> float:
    total = sum(len(o.activities) for o in originals)
    if total == 0:
        return 1.0
    hits = sum(recovery_accuracy(r, o) * len(o.activities) for r, o in zip(recovered, originals))
    return hits / total


def recovery_experiment(
    model: PetriNet,
    traces: Sequence[DetTrace],
    p_h_grid: Sequence[float],
    epsilon: float,
    seed: int,
    activity_universe: Optional[Sequence[str]] = None,
    workers: int = 1,
) -> List[dict]:
    """Per P_h: event-weighted recovery accuracy of ProbCost(ε) and of the Argmax projection."""
    universe = list(activity_universe) if activity_universe is not None else sorted(
        {a for t in traces for a in t.activities} | model.visible_labels
    )
    cost_function = CostFunction.weighted(epsilon)
    rows = []
    for p_h in p_h_grid:
        log, _ = inject_log(traces, NoiseConfig(p_h=p_h, seed=seed, activity_universe=universe))
        results = align_log(model, log, cost_function, workers=workers)
        failed = [r.case_id for r in results if not r.ok]
        if failed:
            logger.warning(f"P_h={p_h}: {len(failed)} case(s) without alignment, scored as unrecovered")
        recovered = [
            recover(r.alignment) if r.ok else RecoveredTrace(r.case_id, ("",) * len(t.activities))
            for r, t in zip(results, traces)
        ]
        argmax = [RecoveredTrace(d.case_id, d.activities) for d in argmax_log(log)]
        rows.append(
            {
                "p_h": p_h,
                "probcost": mean_recovery_accuracy(recovered, traces),
                "argmax": mean_recovery_accuracy(argmax, traces),
            }
        )
        logger.info(f"Recovery at P_h={p_h}: probcost={rows[-1]['probcost']:.4f} argmax={rows[-1]['argmax']:.4f}")
    return rows


def added_sequences(traces: Sequence[DetTrace], raw_log: Sequence[Sequence[NoisyEvent]]) -> List[DetTrace]:
    """The activities noise injection added, one sequence per case in event order."""
    return [DetTrace(t.case_id, tuple(e.added for e in raw)) for t, raw in zip(traces, raw_log)]


def fitness_profile(
    model: PetriNet,
    traces: Sequence[DetTrace],
    workers: int = 1,
    max_expansions: Optional[int] = None,
) -> Dict[str, float]:
    """Mean and population SD of Standard fitness over non-empty traces.

    Cases without an alignment are left out and counted under `failed`.
    """
    traces = [t for t in traces if t.activities]
    path_cost = model_path_cost(model, max_expansions)
    results = align_log(model, traces, CostFunction.standard(), workers=workers, max_expansions=max_expansions)
    values = np.asarray(
        [fitness(r.alignment, model, len(t), path_cost) for r, t in zip(results, traces) if r.ok],
        dtype=float,
    )
    failed = sum(1 for r in results if not r.ok)
    if failed:
        logger.warning(f"Fitness profile: {failed} case(s) without alignment left out")
    return {
        "cases": int(values.size),
        "failed": failed,
        "mean": float(values.mean()) if values.size else 0.0,
        "sd": float(values.std()) if values.size else 0.0,
    }
