import numpy as np
import pytest

from mccr.domains import make_game
from mccr.solver import normalize_flat
from mccr.tree import get_tree

SMALL = ["B-RPS", "IIGS(3)", "LD(1,1,3)", "GP(3,2,2,2)", "RANDOM(0)", "CHAIN"]


def random_flat(tree, rng, sharp=3.0):
    x = rng.random(tree.num_flat) ** sharp + 1e-3
    return normalize_flat(x, tree.iset_offset)


def chain_strategies():
    """Always-right and the (1/2, 1/3, 1/5, 1/7) profile of the chain game."""
    from mccr.strategy import BehavioralStrategy

    keys = ["", "R", "RR", "RRR"]
    s1 = BehavioralStrategy({k: [0.0, 1.0] for k in keys})
    s2 = BehavioralStrategy({k: [1 - p, p] for k, p in zip(keys, [1 / 2, 1 / 3, 1 / 5, 1 / 7])})
    return s1, s2


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=SMALL)
def small_game(request):
    return make_game(request.param)


@pytest.fixture
def brps():
    g = make_game("B-RPS")
    return g, get_tree(g)


ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
