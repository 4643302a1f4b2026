"""
Tests for markings, firing semantics and net validation
"""
import pickle

import numpy as np
import pytest

from probalign.exceptions import InvalidMarking, InvalidNet, NotEnabled
from probalign.models import (
    TAU,
    DanglingArc,
    DuplicateId,
    Marking,
    MarkingOutsideNet,
    NonBipartiteArc,
    PetriNet,
    UnlabelledTransition,
    is_silent,
)
from probalign.services.noise_service import random_model
from probalign.services.petri_service import (
    enabled_transitions,
    fire,
    is_enabled,
    is_final,
    replay,
    require_valid,
    validate,
)


def _sequence_net():
    return PetriNet(
        name="seq",
        places=("p0", "p1", "p2"),
        transitions=("t1", "t2"),
        arcs=frozenset({("p0", "t1"), ("t1", "p1"), ("p1", "t2"), ("t2", "p2")}),
        labels={"t1": "x", "t2": "y"},
        initial_marking=Marking({"p0": 1}),
        final_marking=Marking({"p2": 1}),
    )


def test_marking_ignores_zero_counts():
    """Test that omitted places and explicit zeros compare equal"""
    assert Marking({"p0": 1, "p1": 0}) == Marking({"p0": 1})
    assert hash(Marking({"p0": 1, "p1": 0})) == hash(Marking({"p0": 1}))
    assert Marking()["anywhere"] == 0


def test_marking_rejects_negative_counts():
    with pytest.raises(InvalidMarking):
        Marking({"p0": -1})
    with pytest.raises(InvalidMarking):
        Marking({"p0": 1.5})


def test_marking_arithmetic_and_pickling():
    m = Marking({"a": 1}) + Marking({"a": 1, "b": 2})
    assert m == Marking({"a": 2, "b": 2})
    assert m - Marking({"b": 2}) == Marking({"a": 2})
    assert pickle.loads(pickle.dumps(m)) == m


def test_fire_moves_tokens(running_model):
    """Test that firing t_a moves the token from p0 to p1"""
    m0 = running_model.initial_marking
    assert enabled_transitions(running_model, m0) == frozenset({"t_a"})
    m1 = fire(running_model, m0, "t_a")
    assert m1 == Marking({"p1": 1})
    assert m0 == Marking({"p0": 1})
    assert enabled_transitions(running_model, m1) == frozenset({"t_b", "t_skip"})


def test_fire_not_enabled_raises(running_model):
    with pytest.raises(NotEnabled) as exc:
        fire(running_model, running_model.initial_marking, "t_c")
    assert exc.value.transition == "t_c"
    assert not is_enabled(running_model, running_model.initial_marking, "unknown")


def test_replay_reaches_final(running_model):
    end = replay(running_model, running_model.initial_marking, ["t_a", "t_skip", "t_d", "t_e"])
    assert is_final(running_model, end)
    assert not is_final(running_model, running_model.initial_marking)


def test_running_has_silent_skip(running_model):
    assert is_silent(running_model.labels["t_skip"])
    assert running_model.labels["t_skip"] is TAU
    assert running_model.visible_labels == frozenset("abcde")


def test_source_transition_always_enabled():
    net = PetriNet(
        name="src",
        places=("p",),
        transitions=("gen",),
        arcs=frozenset({("gen", "p")}),
        labels={"gen": "g"},
    )
    assert enabled_transitions(net, Marking()) == frozenset({"gen"})
    assert fire(net, Marking({"p": 1}), "gen") == Marking({"p": 2})


def test_valid_net_has_no_violations():
    assert validate(_sequence_net()) == []
    assert require_valid(_sequence_net()) == _sequence_net()


def test_validate_reports_every_violation(caplog):
    net = PetriNet(
        name="broken",
        places=("p0", "p1", "p1"),
        transitions=("t1", "t2"),
        arcs=frozenset({("p0", "t1"), ("t1", "ghost"), ("p0", "p1")}),
        labels={"t1": "x"},
        initial_marking=Marking({"p0": 1}),
        final_marking=Marking({"nowhere": 1}),
    )
    violations = validate(net)
    assert DuplicateId("p1") in violations
    assert DanglingArc("t1", "ghost", "ghost") in violations
    assert NonBipartiteArc("p0", "p1") in violations
    assert UnlabelledTransition("t2") in violations
    assert MarkingOutsideNet("final", "nowhere") in violations

    with pytest.raises(InvalidNet) as exc:
        require_valid(net)
    assert len(exc.value.violations) == len(violations)
    assert exc.value.to_dict()["error"] == "invalid_net"
    assert "Net 'broken' failed validation" in caplog.text


@pytest.mark.parametrize("seed", range(20))
def test_fire_conserves_tokens_on_random_walks(seed):
    """Test that every firing removes one token per input place and adds one per output place"""
    net = random_model(10, seed, parallel=True)
    rng = np.random.default_rng(seed)
    marking = net.initial_marking
    for _ in range(50):
        enabled = sorted(enabled_transitions(net, marking))
        if not enabled:
            break
        t = enabled[int(rng.integers(len(enabled)))]
        after = fire(net, marking, t)
        for place in net.places:
            expected = marking[place] - (place in net.preset[t]) + (place in net.postset[t])
            assert after[place] == expected
        assert sum(after.values()) == sum(marking.values()) - len(net.preset[t]) + len(net.postset[t])
        marking = after
