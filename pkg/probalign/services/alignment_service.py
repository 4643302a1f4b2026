"""Optimal alignments over (weighted) synchronous product nets.

The search is uniform-cost (A* with a zero heuristic unless one is supplied) with a
closed set keyed on product markings. Path costs are accumulated as integers in units
of COST_RESOLUTION, so equal-cost paths compare exactly equal whatever the order in
which their moves were summed. Among equal-cost queue entries the entry reached by a
synchronous move pops first, then τ, log and model moves, then the lexicographically
smaller transition id.
"""
import heapq
import logging
import math
import numbers
import time
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Union

from ..config import settings
from ..exceptions import (
    InvalidInput,
    InvalidWeight,
    NoAlignment,
    NodeBudgetExceeded,
    ProbAlignError,
    SearchTimeout,
)
from ..models import (
    Alignment,
    CaseResult,
    CostFunction,
    DetTrace,
    Marking,
    Move,
    MoveKind,
    PetriNet,
    ProbEventLog,
    ProbTrace,
    SearchStats,
    SyncProductNet,
)
from .builder_service import build_empty_trace_product, build_sync_product, build_weighted_trace_model
from .petri_service import enabled_transitions, fire
from .problog_service import lift_deterministic

logger = logging.getLogger(__name__)

COST_RESOLUTION = 1e-12

KIND_PRIORITY = {MoveKind.SYNC: 0, MoveKind.TAU: 1, MoveKind.LOG: 2, MoveKind.MODEL: 3}

Heuristic = Callable[[SyncProductNet, Marking], float]


def zero_heuristic(product: SyncProductNet, marking: Marking) -> float:
    return 0.0


def move_cost(kind: MoveKind, weight: float, cost_function: CostFunction) -> float:
    """Cost of firing one product transition.

    Standard: 0 for synchronous and τ moves, 1 for log and model moves.
    Weighted: -log(w) for synchronous, -log(w) - log(eps) for log, -log(eps) for model
    moves, 0 for τ. Natural logarithm.
    """
    if not cost_function.is_weighted:
        return 0.0 if kind in (MoveKind.SYNC, MoveKind.TAU) else 1.0

    if isinstance(weight, bool) or not isinstance(weight, numbers.Real) or math.isnan(weight) or not (0 < weight <= 1):
        raise InvalidWeight(f"weight must lie in (0, 1], got {weight!r}", {"weight": weight})
    distrust = -math.log(cost_function.epsilon)
    if kind is MoveKind.TAU:
        return 0.0
    if kind is MoveKind.SYNC:
        return -math.log(weight) + 0.0
    if kind is MoveKind.LOG:
        return -math.log(weight) + distrust
    return distrust


def _to_units(cost: float) -> int:
    return int(round(cost / COST_RESOLUTION))


def align(
    product: SyncProductNet,
    cost_function: CostFunction,
    max_expansions: Optional[int] = None,
    timeout: Optional[float] = None,
    heuristic: Optional[Heuristic] = None,
    case_id: Optional[str] = None,
) -> Alignment:
    """Minimal-cost firing sequence from the product's initial to its final marking."""
    net = product.net
    budget = settings.MAX_EXPANSIONS if max_expansions is None else max_expansions
    timeout = settings.TIMEOUT_S if timeout is None else timeout
    heuristic = heuristic or zero_heuristic
    final = net.final_marking
    if final is None:
        raise InvalidInput("product net has no final marking")

    costs = {t: move_cost(product.kind[t], product.weight[t], cost_function) for t in net.transitions}
    units = {t: _to_units(c) for t, c in costs.items()}
    priority = {t: KIND_PRIORITY[product.kind[t]] for t in net.transitions}

    started = time.perf_counter()
    markings: List[Marking] = [net.initial_marking]
    parents: List[int] = [-1]
    via: List[Optional[str]] = [None]
    g_units: List[int] = [0]
    best: Dict[Marking, int] = {net.initial_marking: 0}
    closed = set()

    sequence = 0
    heap = [(_to_units(heuristic(product, net.initial_marking)), -1, "", sequence, 0)]
    expanded = generated = queue_peak = 0

    def stats() -> SearchStats:
        return SearchStats(
            expanded=expanded,
            generated=generated,
            queue_peak=queue_peak,
            elapsed=time.perf_counter() - started,
            product_places=len(net.places),
            product_transitions=len(net.transitions),
        )

    while heap:
        _, _, _, _, node = heapq.heappop(heap)
        marking = markings[node]
        if marking in closed:
            continue
        closed.add(marking)

        if marking == final:
            return _build_alignment(product, cost_function, costs, node, parents, via, stats(), case_id)

        expanded += 1
        if expanded > budget:
            raise NodeBudgetExceeded(
                f"search exceeded {budget} expansions",
                {"case_id": case_id, "expanded": expanded},
            )
        if timeout is not None and time.perf_counter() - started > timeout:
            raise SearchTimeout(
                f"search exceeded {timeout} s",
                {"case_id": case_id, "expanded": expanded},
            )

        for t in sorted(enabled_transitions(net, marking)):
            successor = fire(net, marking, t)
            if successor in closed:
                continue
            g = g_units[node] + units[t]
            known = best.get(successor)
            if known is not None and g > known:
                continue
            best[successor] = g
            markings.append(successor)
            parents.append(node)
            via.append(t)
            g_units.append(g)
            sequence += 1
            f = g + _to_units(heuristic(product, successor))
            heapq.heappush(heap, (f, priority[t], t, sequence, len(markings) - 1))
            generated += 1
        queue_peak = max(queue_peak, len(heap))

    raise NoAlignment(
        "final marking is unreachable from the initial marking",
        {"case_id": case_id, "expanded": expanded},
    )


def _build_alignment(product, cost_function, costs, node, parents, via, stats, case_id) -> Alignment:
    fired = []
    while parents[node] != -1:
        fired.append(via[node])
        node = parents[node]
    fired.reverse()

    moves = tuple(
        Move(
            transition=t,
            kind=product.kind[t],
            model_label=product.model_label[t],
            log_label=product.log_label[t],
            event_index=product.event_index[t],
            weight=product.weight[t],
            cost=costs[t],
        )
        for t in fired
    )
    return Alignment(
        moves=moves,
        total_cost=math.fsum(m.cost for m in moves),
        stats=stats,
        cost_function=cost_function,
        trace_length=product.trace_length,
        case_id=case_id,
    )


def align_trace(
    model: PetriNet,
    trace: Union[ProbTrace, DetTrace],
    cost_function: CostFunction,
    max_expansions: Optional[int] = None,
    timeout: Optional[float] = None,
    heuristic: Optional[Heuristic] = None,
) -> Alignment:
    """Weighted trace model, then product, then search."""
    if isinstance(trace, DetTrace):
        trace = lift_deterministic(trace)
    product = build_sync_product(model, build_weighted_trace_model(trace))
    return align(product, cost_function, max_expansions, timeout, heuristic, case_id=trace.case_id)


def model_path_cost(model: PetriNet, max_expansions: Optional[int] = None) -> float:
    """Cheapest Standard cost of running the model with no events at all."""
    product = build_empty_trace_product(model)
    return align(product, CostFunction.standard(), max_expansions=max_expansions).total_cost


def fitness(alignment: Alignment, model: PetriNet, trace_len: int, path_cost: Optional[float] = None) -> float:
    """1 - cost / (trace length + cheapest model path), for Standard-cost alignments."""
    if alignment.cost_function.is_weighted:
        raise InvalidInput("fitness is defined for alignments computed under the standard cost function")
    if path_cost is None:
        path_cost = model_path_cost(model)
    worst = trace_len + path_cost
    if worst <= 0:
        return 1.0
    return min(1.0, max(0.0, 1.0 - alignment.total_cost / worst))


# Batch alignment over a worker pool

# Per-process state, set only by the pool initializer in worker processes
_worker_state: Dict[str, object] = {}


def _init_worker(model, cost_function, max_expansions, timeout):
    _worker_state.update(
        model=model, cost_function=cost_function, max_expansions=max_expansions, timeout=timeout
    )


def _align_case_with(
    model: PetriNet,
    cost_function: CostFunction,
    max_expansions: Optional[int],
    timeout: Optional[float],
    trace: Union[ProbTrace, DetTrace],
) -> CaseResult:
    """Align one case, turning a per-case failure into an error record."""
    try:
        alignment = align_trace(model, trace, cost_function, max_expansions=max_expansions, timeout=timeout)
        return CaseResult(trace.case_id, alignment=alignment)
    except ProbAlignError as e:
        logger.warning(f"Case {trace.case_id}: {e.message}")
        return CaseResult(trace.case_id, error=e.to_dict())


def _align_case(trace: Union[ProbTrace, DetTrace]) -> CaseResult:
    return _align_case_with(
        _worker_state["model"],
        _worker_state["cost_function"],
        _worker_state["max_expansions"],
        _worker_state["timeout"],
        trace,
    )


def align_log(
    model: PetriNet,
    traces: Union[ProbEventLog, Sequence[Union[ProbTrace, DetTrace]]],
    cost_function: CostFunction,
    workers: int = 1,
    max_expansions: Optional[int] = None,
    timeout: Optional[float] = None,
) -> List[CaseResult]:
    """Align every trace against a shared model; results come back in input order."""
    if isinstance(traces, ProbEventLog):
        traces = traces.traces
    traces = list(traces)
    args = (model, cost_function, max_expansions, timeout)

    if workers <= 1 or len(traces) <= 1:
        align_one = partial(_align_case_with, *args)
        results = [align_one(t) for t in traces]
    else:
        chunksize = max(1, len(traces) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=args) as pool:
            results = list(pool.map(_align_case, traces, chunksize=chunksize))

    failed = sum(1 for r in results if not r.ok)
    logger.info(f"Aligned {len(results) - failed}/{len(results)} cases with {cost_function}")
    return results
