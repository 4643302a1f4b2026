import logging
from collections import Counter
from typing import FrozenSet, Iterable, List

from ..exceptions import InvalidNet, NotEnabled
from ..models import (
    DanglingArc,
    DuplicateId,
    Marking,
    MarkingOutsideNet,
    NonBipartiteArc,
    PetriNet,
    UnlabelledTransition,
)

logger = logging.getLogger(__name__)


def enabled_transitions(net: PetriNet, marking: Marking) -> FrozenSet[str]:
    """Transitions whose every input place holds at least one token."""
    candidates = set(net.source_transitions)
    for place in marking:
        candidates.update(net.consumers.get(place, ()))
    preset = net.preset
    return frozenset(t for t in candidates if all(marking[p] >= 1 for p in preset[t]))


def is_enabled(net: PetriNet, marking: Marking, transition: str) -> bool:
    if transition not in net.preset:
        return False
    return all(marking[p] >= 1 for p in net.preset[transition])


def fire(net: PetriNet, marking: Marking, transition: str) -> Marking:
    """Marking after firing `transition`; the input marking is left untouched."""
    if not is_enabled(net, marking, transition):
        raise NotEnabled(transition)
    tokens = dict(marking.items())
    for place in net.preset[transition]:
        tokens[place] -= 1
    for place in net.postset[transition]:
        tokens[place] = tokens.get(place, 0) + 1
    return Marking(tokens)


def replay(net: PetriNet, marking: Marking, sequence: Iterable[str]) -> Marking:
    for transition in sequence:
        marking = fire(net, marking, transition)
    return marking


def is_final(net: PetriNet, marking: Marking) -> bool:
    return net.final_marking is not None and marking == net.final_marking


def validate(net: PetriNet) -> List[object]:
    """Every well-formedness violation of `net`; empty when the net is sound to use."""
    violations: List[object] = []

    counts = Counter(net.places) + Counter(net.transitions)
    for element, count in sorted(counts.items()):
        if count > 1:
            violations.append(DuplicateId(element))

    places = set(net.places)
    transitions = set(net.transitions)
    for source, target in sorted(net.arcs):
        known_source = source in places or source in transitions
        known_target = target in places or target in transitions
        if not known_source:
            violations.append(DanglingArc(source, target, source))
        if not known_target:
            violations.append(DanglingArc(source, target, target))
        if known_source and known_target:
            place_to_transition = source in places and target in transitions
            transition_to_place = source in transitions and target in places
            if not (place_to_transition or transition_to_place):
                violations.append(NonBipartiteArc(source, target))

    for transition in net.transitions:
        if transition not in net.labels:
            violations.append(UnlabelledTransition(transition))

    for name, marking in (("initial", net.initial_marking), ("final", net.final_marking)):
        if marking is None:
            continue
        for place in marking:
            if place not in places:
                violations.append(MarkingOutsideNet(name, place))

    return violations


def require_valid(net: PetriNet) -> PetriNet:
    violations = validate(net)
    if violations:
        logger.error(f"Net {net.name!r} failed validation with {len(violations)} violation(s)")
        raise InvalidNet(violations)
    return net
