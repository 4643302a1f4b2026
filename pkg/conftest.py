"""Shared fixtures: the worked-example model and trace, seeded small instances and
an exhaustive enumeration oracle for optimal alignment costs."""
import math
from pathlib import Path

import numpy as np
import pytest

from probalign.models import CostFunction, MoveKind, PetriNet, ProbTrace, SyncProductNet
from probalign.services.noise_service import random_model
from probalign.services.petri_service import enabled_transitions, fire
from probalign.services.pnml_service import read_pnml
from probalign.services.problog_service import make_event, make_trace

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def running_path() -> Path:
    return FIXTURES / "running.pnml"


@pytest.fixture
def running_csv_path() -> Path:
    return FIXTURES / "running.problog.csv"


@pytest.fixture
def running_json_path() -> Path:
    return FIXTURES / "running.problog.json"


@pytest.fixture
def running_model() -> PetriNet:
    return read_pnml((FIXTURES / "running.pnml").read_bytes())


@pytest.fixture
def running_trace() -> ProbTrace:
    return make_trace(
        "running",
        [
            make_event({"a": 0.3, "b": 0.7}),
            make_event({"b": 0.7, "c": 0.3}),
            make_event({"b": 0.3, "c": 0.7}),
        ],
    )


def oracle_move_cost(kind: MoveKind, weight: float, cost_function: CostFunction) -> float:
    if not cost_function.is_weighted:
        return 0.0 if kind in (MoveKind.SYNC, MoveKind.TAU) else 1.0
    if kind is MoveKind.TAU:
        return 0.0
    if kind is MoveKind.SYNC:
        return -math.log(weight)
    if kind is MoveKind.LOG:
        return -math.log(weight) - math.log(cost_function.epsilon)
    return -math.log(cost_function.epsilon)


def brute_force_cost(product: SyncProductNet, cost_function: CostFunction, depth: int = 40) -> float:
    """Cheapest of all firing sequences from the initial to the final marking.

    Meant for the acyclic products of small instances: shared suffixes are memoised
    by marking and the depth bound stops anything that would loop. Returns inf
    when no sequence reaches the final marking.
    """
    net = product.net
    final = net.final_marking
    memo = {}

    def best_from(marking, remaining):
        if marking == final:
            return 0.0
        if remaining == 0:
            return math.inf
        if marking in memo:
            return memo[marking]
        best = math.inf
        for t in enabled_transitions(net, marking):
            rest = best_from(fire(net, marking, t), remaining - 1)
            if rest < math.inf:
                best = min(best, oracle_move_cost(product.kind[t], product.weight[t], cost_function) + rest)
        memo[marking] = best
        return best

    return best_from(net.initial_marking, depth)


def random_instance(seed: int):
    """A small random model (one choice, one τ-skip) and a noisy trace of up to 4 events."""
    rng = np.random.default_rng(seed)
    model = random_model(int(rng.integers(3, 7)), seed, parallel=bool(rng.integers(2)))
    alphabet = sorted(model.visible_labels) + ["z"]
    events = []
    for _ in range(int(rng.integers(1, 5))):
        k = int(rng.integers(1, 4))
        chosen = rng.choice(len(alphabet), size=k, replace=False)
        weights = rng.dirichlet(np.ones(k))
        events.append(make_event({alphabet[int(i)]: float(w) for i, w in zip(chosen, weights)}, renormalize=True))
    return model, make_trace(f"rand-{seed}", events)


@pytest.fixture
def instance_factory():
    return random_instance
