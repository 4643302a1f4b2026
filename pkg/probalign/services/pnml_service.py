"""Reader and writer for the place/transition subset of PNML.

Supported: place, transition, arc, name, initialMarking and finalMarking (either
per place or as a `finalmarkings` block). A transition is silent when it carries
a toolspecific element with activity="$invisible$" or has no (or an empty) name.
Arcs must have weight 1; typed arcs such as inhibitor or reset arcs are rejected.
"""
import logging
import xml.etree.ElementTree as ET
from typing import Dict, List, Optional, Tuple

from ..exceptions import ParseError, UnsupportedFeature
from ..models import TAU, Label, Marking, PetriNet, is_silent
from .petri_service import require_valid

logger = logging.getLogger(__name__)

PTNET_TYPE = "http://www.pnml.org/version-2009/grammar/ptnet"
INVISIBLE = "$invisible$"


def _local(tag: str) -> str:
    """Tag name without its XML namespace."""
    return tag.rsplit("}", 1)[-1] if "}" in tag else tag


def _children(element: ET.Element, name: str) -> List[ET.Element]:
    """Direct children with the given local name"""
    return [child for child in element if _local(child.tag) == name]


def _child(element: ET.Element, name: str) -> Optional[ET.Element]:
    found = _children(element, name)
    return found[0] if found else None


def _text_of(element: Optional[ET.Element]) -> Optional[str]:
    """Stripped content of a <text> child."""
    if element is None:
        return None
    text = _child(element, "text")
    if text is None or text.text is None:
        return None
    return text.text.strip()


def _describe(element: ET.Element) -> str:
    """Element reference for error messages, e.g. place#p1."""
    ident = element.get("id") or element.get("idref")
    return f"{_local(element.tag)}#{ident}" if ident else _local(element.tag)


def _token_count(element: Optional[ET.Element], owner: ET.Element) -> int:
    """Non-negative token count; absent means 0."""
    raw = _text_of(element)
    if raw is None or raw == "":
        return 0
    try:
        count = int(raw)
    except ValueError:
        raise ParseError(f"token count {raw!r} is not an integer", element=_describe(owner))
    if count < 0:
        raise ParseError(f"token count {count} is negative", element=_describe(owner))
    return count


def _require_id(element: ET.Element) -> str:
    ident = element.get("id")
    if not ident:
        raise ParseError("missing id attribute", element=_local(element.tag))
    return ident


def _is_invisible(transition: ET.Element) -> bool:
    """True for transitions carrying the ProM $invisible$ marker."""
    return any(ts.get("activity") == INVISIBLE for ts in _children(transition, "toolspecific"))


def read_pnml(data: bytes) -> PetriNet:
    """Parse a PNML document into a validated PetriNet."""
    try:
        root = ET.fromstring(data)
    except ET.ParseError as e:
        line, _ = e.position
        raise ParseError(f"malformed XML: {e}", line=line)

    nets = [el for el in root.iter() if _local(el.tag) == "net"]
    if not nets:
        raise ParseError("no net element found", element=_local(root.tag))
    if len(nets) > 1:
        raise UnsupportedFeature(f"document holds {len(nets)} nets, expected one", element="net")
    net_el = nets[0]

    places: List[str] = []
    transitions: List[str] = []
    arcs: List[Tuple[str, str]] = []
    labels: Dict[str, Label] = {}
    initial: Dict[str, int] = {}
    final: Dict[str, int] = {}
    has_final = False

    for element in net_el.iter():
        tag = _local(element.tag)
        if tag == "place":
            if element.get("idref") is not None:
                continue
            place = _require_id(element)
            places.append(place)
            tokens = _token_count(_child(element, "initialMarking"), element)
            if tokens:
                initial[place] = tokens
            final_el = _child(element, "finalMarking")
            if final_el is not None:
                has_final = True
                tokens = _token_count(final_el, element)
                if tokens:
                    final[place] = tokens
        elif tag == "transition":
            transition = _require_id(element)
            transitions.append(transition)
            name = _text_of(_child(element, "name"))
            labels[transition] = TAU if _is_invisible(element) or not name else name
        elif tag == "arc":
            arc_id = _require_id(element)
            source, target = element.get("source"), element.get("target")
            if not source or not target:
                raise ParseError("arc needs source and target", element=f"arc#{arc_id}")
            type_el = _child(element, "type")
            arc_type = (
                element.get("type")
                or _text_of(_child(element, "arctype"))
                or _text_of(type_el)
                or (type_el.get("value") if type_el is not None else None)
            )
            if arc_type and arc_type.lower() not in ("normal", "regular"):
                raise UnsupportedFeature(f"{arc_type} arcs are not supported", element=f"arc#{arc_id}")
            weight = _text_of(_child(element, "inscription"))
            if weight is not None and weight != "1":
                raise UnsupportedFeature(f"arc weight {weight} is not supported", element=f"arc#{arc_id}")
            arcs.append((source, target))
        elif tag == "finalmarkings":
            has_final = True
            markings = _children(element, "marking")
            if len(markings) > 1:
                raise UnsupportedFeature("more than one final marking", element="finalmarkings")
            for ref in (markings[0] if markings else element).iter():
                if _local(ref.tag) == "place" and ref.get("idref"):
                    tokens = _token_count(ref, ref)
                    if tokens:
                        final[ref.get("idref")] = tokens

    if len(set(arcs)) != len(arcs):
        raise UnsupportedFeature("parallel arcs between the same nodes are not supported", element="arc")

    net = PetriNet(
        name=net_el.get("id") or _text_of(_child(net_el, "name")) or "net",
        places=tuple(places),
        transitions=tuple(transitions),
        arcs=frozenset(arcs),
        labels=labels,
        initial_marking=Marking(initial),
        final_marking=Marking(final) if has_final else None,
    )
    logger.debug(f"Read net {net.name!r}: {len(places)} places, {len(transitions)} transitions")
    return require_valid(net)


def _named(parent: ET.Element, tag: str, text: str) -> ET.Element:
    """Append <tag><text>text</text></tag> to parent."""
    element = ET.SubElement(parent, tag)
    ET.SubElement(element, "text").text = text
    return element


def write_pnml(net: PetriNet) -> bytes:
    """Deterministic PNML: elements in declaration order, arcs sorted, two-space indent."""
    root = ET.Element("pnml")
    net_el = ET.SubElement(root, "net", {"id": net.name, "type": PTNET_TYPE})
    _named(net_el, "name", net.name)
    page = ET.SubElement(net_el, "page", {"id": "page0"})

    for place in net.places:
        place_el = ET.SubElement(page, "place", {"id": place})
        _named(place_el, "name", place)
        if net.initial_marking[place]:
            _named(place_el, "initialMarking", str(net.initial_marking[place]))
        if net.final_marking is not None and net.final_marking[place]:
            _named(place_el, "finalMarking", str(net.final_marking[place]))

    for transition in net.transitions:
        label = net.labels[transition]
        transition_el = ET.SubElement(page, "transition", {"id": transition})
        if is_silent(label):
            _named(transition_el, "name", transition)
            ET.SubElement(
                transition_el,
                "toolspecific",
                {"tool": "ProM", "version": "6.4", "activity": INVISIBLE, "localNodeID": transition},
            )
        else:
            _named(transition_el, "name", label)

    for index, (source, target) in enumerate(sorted(net.arcs)):
        ET.SubElement(page, "arc", {"id": f"arc{index}", "source": source, "target": target})

    ET.indent(root, space="  ")
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"
