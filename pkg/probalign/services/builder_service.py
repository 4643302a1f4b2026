import logging
from typing import Dict, List, Mapping, Optional, Set, Tuple, Union

from ..exceptions import EmptyTrace, InvalidInput, InvalidWeight, MissingFinalMarking
from ..models import (
    DetTrace,
    Label,
    Marking,
    MoveKind,
    PetriNet,
    ProbTrace,
    SyncProductNet,
    is_silent,
)
from .petri_service import require_valid

logger = logging.getLogger(__name__)

NO_MOVE = ">>"

WeightedTraceModel = Tuple[PetriNet, Dict[str, float]]


def trace_transition_id(index: int, activity: str) -> str:
    return f"t(e{index},{activity})"


def _linear_net(case_id: str, columns: List[List[Tuple[str, float]]]) -> WeightedTraceModel:
    places = tuple(f"P{i}" for i in range(len(columns) + 1))
    transitions: List[str] = []
    arcs = set()
    labels: Dict[str, Label] = {}
    weights: Dict[str, float] = {}
    for index, candidates in enumerate(columns):
        for activity, weight in candidates:
            t = trace_transition_id(index, activity)
            transitions.append(t)
            arcs.add((places[index], t))
            arcs.add((t, places[index + 1]))
            labels[t] = activity
            weights[t] = weight
    net = PetriNet(
        name=f"trace:{case_id}",
        places=places,
        transitions=tuple(transitions),
        arcs=frozenset(arcs),
        labels=labels,
        initial_marking=Marking({places[0]: 1}),
        final_marking=Marking({places[-1]: 1}),
    )
    return net, weights


def build_trace_model(trace: DetTrace) -> PetriNet:
    """Linear net P0 -a0-> P1 -a1-> ... -> Pm for a deterministic trace."""
    if not trace.activities:
        raise EmptyTrace(f"trace {trace.case_id!r} has no events", {"case_id": trace.case_id})
    net, _ = _linear_net(trace.case_id, [[(a, 1.0)] for a in trace.activities])
    return net


def build_weighted_trace_model(trace: ProbTrace) -> WeightedTraceModel:
    """One weighted transition per positive-probability candidate, between P_i and P_i+1."""
    if not trace.events:
        raise EmptyTrace(f"trace {trace.case_id!r} has no events", {"case_id": trace.case_id})
    columns = [
        [(a, p) for a, p in sorted(event.candidates.items()) if p > 0]
        for event in trace.events
    ]
    return _linear_net(trace.case_id, columns)


def infer_final_marking(model: PetriNet) -> Marking:
    """One token on every place that no transition consumes from."""
    places = set(model.places)
    consumed = {source for source, _ in model.arcs if source in places}
    sinks = [p for p in model.places if p not in consumed]
    if not sinks:
        raise MissingFinalMarking(
            f"model {model.name!r} declares no final marking and has no sink place to infer one from"
        )
    return Marking({p: 1 for p in sinks})


def ensure_final_marking(model: PetriNet) -> PetriNet:
    if model.final_marking is not None and len(model.final_marking) > 0:
        return model
    inferred = infer_final_marking(model)
    logger.debug(f"Inferred final marking {inferred} for model {model.name!r}")
    return model.with_final_marking(inferred)


def _event_indices(trace_net: PetriNet) -> Dict[str, int]:
    position = {p: i for i, p in enumerate(trace_net.places)}
    indices = {}
    for t in trace_net.transitions:
        inputs = trace_net.preset[t]
        if len(inputs) != 1:
            raise InvalidInput(f"trace model transition {t!r} must have exactly one input place")
        indices[t] = position[inputs[0]]
    return indices


def build_sync_product(
    model: PetriNet, wtrace: Union[WeightedTraceModel, PetriNet]
) -> SyncProductNet:
    """Weighted synchronous product of a process model and a (weighted) trace model.

    Model moves weigh 1; log and synchronous moves carry the trace transition's weight.
    Initial and final markings are the unions of both components' markings.
    """
    if isinstance(wtrace, PetriNet):
        trace_net, weights = wtrace, {t: 1.0 for t in wtrace.transitions}
    else:
        trace_net, weights = wtrace
    model = require_valid(ensure_final_marking(model))
    require_valid(trace_net)
    if trace_net.final_marking is None:
        raise MissingFinalMarking(f"trace model {trace_net.name!r} has no final marking")

    for t in trace_net.transitions:
        w = weights.get(t)
        if w is None or not (0 < w <= 1):
            raise InvalidWeight(f"trace transition {t!r} has weight {w!r}, expected a value in (0, 1]")

    # keep the two place sets disjoint
    clash = set(model.places) & set(trace_net.places)
    rename = (lambda p: f"trace:{p}") if clash else (lambda p: p)

    event_index = _event_indices(trace_net)
    places = tuple(model.places) + tuple(rename(p) for p in trace_net.places)

    transitions: List[str] = []
    arcs: Set[Tuple[str, str]] = set()
    labels: Dict[str, Label] = {}
    kind: Dict[str, MoveKind] = {}
    weight: Dict[str, float] = {}
    origin: Dict[str, Tuple[Optional[str], Optional[str]]] = {}
    model_label: Dict[str, Optional[Label]] = {}
    log_label: Dict[str, Optional[str]] = {}
    product_event: Dict[str, Optional[int]] = {}

    def add(t: str, t_model: Optional[str], t_trace: Optional[str], move: MoveKind, w: float):
        transitions.append(t)
        kind[t] = move
        weight[t] = w
        origin[t] = (t_model, t_trace)
        model_label[t] = model.labels[t_model] if t_model is not None else None
        log_label[t] = trace_net.labels[t_trace] if t_trace is not None else None
        product_event[t] = event_index[t_trace] if t_trace is not None else None
        labels[t] = log_label[t] if log_label[t] is not None else model_label[t]
        if t_model is not None:
            arcs.update((p, t) for p in model.preset[t_model])
            arcs.update((t, p) for p in model.postset[t_model])
        if t_trace is not None:
            arcs.update((rename(p), t) for p in trace_net.preset[t_trace])
            arcs.update((t, rename(p)) for p in trace_net.postset[t_trace])

    for t1 in model.transitions:
        move = MoveKind.TAU if is_silent(model.labels[t1]) else MoveKind.MODEL
        add(f"({t1},{NO_MOVE})", t1, None, move, 1.0)
    for t2 in trace_net.transitions:
        add(f"({NO_MOVE},{t2})", None, t2, MoveKind.LOG, weights[t2])
    for t1 in model.transitions:
        l1 = model.labels[t1]
        if is_silent(l1):
            continue
        for t2 in trace_net.transitions:
            if trace_net.labels[t2] == l1:
                add(f"({t1},{t2})", t1, t2, MoveKind.SYNC, weights[t2])

    net = PetriNet(
        name=f"{model.name}x{trace_net.name}",
        places=places,
        transitions=tuple(transitions),
        arcs=frozenset(arcs),
        labels=labels,
        initial_marking=model.initial_marking + Marking({rename(p): c for p, c in trace_net.initial_marking.items()}),
        final_marking=model.final_marking + Marking({rename(p): c for p, c in trace_net.final_marking.items()}),
    )
    return SyncProductNet(
        net=net,
        kind=kind,
        weight=weight,
        origin=origin,
        model_label=model_label,
        log_label=log_label,
        event_index=product_event,
        trace_length=len(trace_net.places) - 1,
    )


def build_empty_trace_product(model: PetriNet) -> SyncProductNet:
    """Product with a zero-event trace: only model moves can fire."""
    empty = PetriNet(
        name="trace:<empty>",
        places=("P0",),
        transitions=(),
        arcs=frozenset(),
        labels={},
        initial_marking=Marking({"P0": 1}),
        final_marking=Marking({"P0": 1}),
    )
    return build_sync_product(model, (empty, {}))
