"""Comparison agents: random play, IS-MCTS, OOS with infoset targeting, MCCFR from the root."""

from __future__ import annotations

import math
import time

import numpy as np

from .agent import Agent, Budget, MatchDesync
from .game import CHANCE, TERMINAL, Game
from .solver.fast import FastOutcomeSampling
from .solver.sampling import SamplingScheme
from .tree import GameTree, get_tree


class RandomAgent(Agent):
    name = "rnd"

    def act(self, key: str, num_actions: int, budget: Budget) -> int:
        return int(self.rng.integers(num_actions))

    def public_policy(self, state: int, budget: Budget) -> dict[str, np.ndarray]:
        from .resolving import get_index

        t = get_tree(self.game)
        isets = get_index(t).isets_at[self.player][state]
        return {t.iset_keys[s]: np.full(t.iset_nact[s], 1.0 / t.iset_nact[s]) for s in isets}


def _members(tree: GameTree, key: str) -> np.ndarray:
    try:
        return tree.members(tree.iset_id(key))
    except KeyError:
        raise MatchDesync(f"unknown infoset {key!r}") from None


class ISMCTSAgent(Agent):
    """Information-set MCTS with UCT or regret-matching selection.

    Statistics are kept per acting infoset. Each iteration starts from a
    history drawn uniformly from the current infoset, descends the tree
    treating it as perfect information, expands one infoset and finishes
    with a uniform playout.
    """

    name = "ismcts"

    def __init__(self, selection: str = "uct", c: float | None = None, gamma: float = 0.2):
        if selection not in ("uct", "rm"):
            raise ValueError(f"unknown selection {selection!r}")
        if not 0.0 < gamma <= 1.0:
            raise ValueError("RM exploration must lie in (0, 1]")
        self.selection = selection
        self.c = c
        self.gamma = gamma

    def init(self, game: Game, player: int, seed: int, preplay: Budget | None = None) -> None:
        super().init(game, player, seed)
        self.tree = t = get_tree(game)
        if self.c is None:
            self.c = 2.0 * game.max_utility
        self.visits = np.zeros(t.num_isets)
        self.count = np.zeros(t.num_flat)
        self.value = np.zeros(t.num_flat)
        self.regret = np.zeros(t.num_flat)
        self.avg = np.zeros(t.num_flat)
        self.in_tree = np.zeros(t.num_isets, dtype=bool)
        self.iterations = 0
        if preplay is not None:
            self._search(np.array([0]), preplay)

    def fork(self) -> "ISMCTSAgent":
        other = super().fork()
        for name in ("visits", "count", "value", "regret", "avg", "in_tree"):
            setattr(other, name, getattr(self, name).copy())
        return other

    def config(self) -> dict:
        return {"name": self.name, "selection": self.selection, "c": self.c, "gamma": self.gamma}

    def _rm_probs(self, s: int) -> np.ndarray:
        t = self.tree
        lo, hi = t.iset_offset[s], t.iset_offset[s + 1]
        r = np.maximum(self.regret[lo:hi], 0.0)
        k = hi - lo
        tot = r.sum()
        sig = r / tot if tot > 0 else np.full(k, 1.0 / k)
        return sig

    def _select(self, s: int) -> tuple[int, float]:
        t = self.tree
        lo, hi = t.iset_offset[s], t.iset_offset[s + 1]
        k = hi - lo
        if self.selection == "uct":
            n = self.count[lo:hi]
            unvisited = np.flatnonzero(n == 0)
            if len(unvisited):
                return int(self.rng.choice(unvisited)), 1.0
            q = self.value[lo:hi] / n
            ucb = q + self.c * np.sqrt(math.log(self.visits[s]) / n)
            return int(np.argmax(ucb)), 1.0
        sig = self._rm_probs(s)
        mix = (1 - self.gamma) * sig + self.gamma / k
        self.avg[lo:hi] += sig
        a = int(self.rng.choice(k, p=mix))
        return a, float(mix[a])

    def iteration(self, starts: np.ndarray) -> None:
        t = self.tree
        v = int(starts[self.rng.integers(len(starts))])
        path = []
        expanded = False
        while t.player[v] != TERMINAL:
            p = int(t.player[v])
            k = int(t.num_children[v])
            fc = int(t.first_child[v])
            if p == CHANCE:
                probs = t.chance[fc:fc + k]
                a = int(self.rng.choice(k, p=probs / probs.sum()))
            elif expanded:
                a = int(self.rng.integers(k))
            else:
                s = int(t.infoset[v])
                if not self.in_tree[s]:
                    self.in_tree[s] = True
                    expanded = True
                a, prob = self._select(s)
                path.append((s, a, p, prob))
            v = fc + a
        u0 = float(t.utility[v])
        for s, a, p, prob in path:
            u = u0 if p == 0 else -u0
            lo, hi = t.iset_offset[s], t.iset_offset[s + 1]
            self.visits[s] += 1
            self.count[lo + a] += 1
            self.value[lo + a] += u
            if self.selection == "rm":
                x = np.zeros(hi - lo)
                x[a] = u / prob
                self.regret[lo:hi] += x - u
        self.iterations += 1

    def _search(self, starts: np.ndarray, budget: Budget) -> None:
        end = None if budget.ms is None else time.perf_counter() + budget.ms / 1000.0
        n = 0
        while (budget.iterations is None or n < budget.iterations) and (
                end is None or time.perf_counter() < end):
            self.iteration(starts)
            n += 1

    def policy(self, s: int) -> np.ndarray:
        t = self.tree
        lo, hi = t.iset_offset[s], t.iset_offset[s + 1]
        k = hi - lo
        if self.selection == "uct":
            n = self.count[lo:hi]
            if n.sum() == 0:
                return np.full(k, 1.0 / k)
            out = np.zeros(k)
            out[int(np.argmax(n))] = 1.0
            return out
        a = self.avg[lo:hi]
        return a / a.sum() if a.sum() > 0 else np.full(k, 1.0 / k)

    def act(self, key: str, num_actions: int, budget: Budget) -> int:
        members = _members(self.tree, key)
        self._search(members, budget)
        return self._draw(self.policy(self.tree.iset_id(key)))


class MCCFRAgent(Agent):
    """Outcome-sampling MCCFR from the root that keeps sampling between moves.

    With ``targeting`` > 0 this is OOS with infoset targeting: a share of the
    samples is steered through the current infoset, with importance weights
    corrected for the mixture.
    """

    name = "mccfr"

    def __init__(self, epsilon: float = 0.6, targeting: float = 0.0):
        self.scheme = SamplingScheme(epsilon, targeting)
        self.targeting = targeting

    def init(self, game: Game, player: int, seed: int, preplay: Budget | None = None) -> None:
        super().init(game, player, seed)
        ss = np.random.SeedSequence(seed)
        self.rng = np.random.default_rng(ss.spawn(1)[0])
        self.solver = FastOutcomeSampling(game, SamplingScheme(self.scheme.epsilon, 0.0),
                                          int(ss.generate_state(1)[0]), track_cfv=False)
        if preplay is not None:
            preplay.run(self.solver)

    def fork(self) -> "MCCFRAgent":
        other = super().fork()
        other.solver = self.solver.copy()
        return other

    def config(self) -> dict:
        return {"name": self.name, "epsilon": self.scheme.epsilon, "targeting": self.targeting}

    def _policy(self, s: int) -> np.ndarray:
        t = self.solver.tree
        lo, hi = t.iset_offset[s], t.iset_offset[s + 1]
        a = self.solver.avg[lo:hi]
        return a / a.sum() if a.sum() > 0 else np.full(hi - lo, 1.0 / (hi - lo))

    def act(self, key: str, num_actions: int, budget: Budget) -> int:
        t = self.solver.tree
        members = _members(t, key)
        if self.targeting > 0:
            self.solver.set_target(members, self.targeting)
        budget.run(self.solver)
        return self._draw(self._policy(t.iset_id(key)))

    def public_policy(self, state: int, budget: Budget) -> dict[str, np.ndarray]:
        from .resolving import get_index

        t = self.solver.tree
        self.solver = self.solver.copy()
        self.solver.set_target(None)
        budget.run(self.solver)
        isets = get_index(t).isets_at[self.player][state]
        return {t.iset_keys[s]: self._policy(s) for s in isets.tolist()}


class OOSAgent(MCCFRAgent):
    name = "oos"

    def __init__(self, epsilon: float = 0.6, targeting: float = 0.9):
        super().__init__(epsilon, targeting)
