"""Outcome-sampling MCCFR over any Game, with an incrementally built tree."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..game import CHANCE, TERMINAL, Game
from ..strategy import BehavioralStrategy
from .cfv import NO_MASS, CrpTracker, HistoryStats, PathRecord
from .regret import regret_matching

REGRET_CLIP = 1e12


@dataclass
class SamplingScheme:
    epsilon: float = 0.6
    targeting: float = 0.0
    target: frozenset | None = None  # histories (action tuples) to steer samples through
    both_branch: bool = True
    incremental: bool = True

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError("exploration must lie in (0, 1]")
        if not 0.0 <= self.targeting < 1.0:
            raise ValueError("targeting probability must lie in [0, 1)")


@dataclass
class SolverNode:
    regret: np.ndarray
    avg: np.ndarray

    @classmethod
    def empty(cls, k: int) -> "SolverNode":
        return cls(np.zeros(k), np.zeros(k))

    def strategy(self) -> np.ndarray:
        return regret_matching(self.regret)

    def average(self) -> np.ndarray:
        tot = self.avg.sum()
        return self.avg / tot if tot > 0 else np.full(len(self.avg), 1.0 / len(self.avg))


class _Target:
    def __init__(self, histories: Iterable[tuple]):
        self.targets = set(map(tuple, histories))
        self.prefixes = {t[:k] for t in self.targets for k in range(len(t) + 1)}
        self.lengths = sorted({len(t) for t in self.targets})

    def consistent(self, hist: tuple) -> bool:
        if hist in self.prefixes:
            return True
        return any(hist[:k] in self.targets for k in self.lengths if k <= len(hist))


@dataclass
class _Step:
    h: object
    hist: tuple
    player: int
    sigma: np.ndarray
    action: int
    node: SolverNode | None
    pi: tuple  # reach (player 0, player 1, chance) before the step
    q: float  # mixture sampling probability of reaching h
    exact: dict = field(default_factory=dict)  # action -> terminal utility (player 0)


class OutcomeSampling:
    """Alternating-update outcome sampling.

    One iteration samples one terminal for each player. Infosets are stored
    lazily in ``nodes``; per-history CFV accumulators live in ``stats``.
    """

    def __init__(self, game: Game, scheme: SamplingScheme | None = None, seed: int = 0,
                 track_cfv: bool = True, track_crp: bool = False):
        self.game = game
        self.scheme = scheme or SamplingScheme()
        self.rng = np.random.default_rng(seed)
        self.nodes: dict[str, SolverNode] = {}
        self.stats: dict[tuple, HistoryStats] = {}
        self.track_cfv = track_cfv
        self.crp = CrpTracker() if track_crp else None
        self.samples = 0
        self.iterations = 0
        self.min_q = 1.0
        self._target = _Target(self.scheme.target) if self.scheme.target else None

    def set_target(self, histories: Iterable[tuple] | None, targeting: float | None = None) -> None:
        self._target = _Target(histories) if histories else None
        if targeting is not None:
            self.scheme.targeting = targeting

    # -- sampling ----------------------------------------------------------

    def iteration(self) -> None:
        for i in (0, 1):
            self.sample(i)
        self.iterations += 1

    def run(self, iterations: int | None = None, time_ms: float | None = None) -> "OutcomeSampling":
        if iterations is None and time_ms is None:
            raise ValueError("need an iteration or time budget")
        if time_ms is None:
            for _ in range(iterations):
                self.iteration()
            return self
        end = time.perf_counter() + time_ms / 1000.0
        done = 0
        while time.perf_counter() < end and (iterations is None or done < iterations):
            self.iteration()
            done += 1
        return self

    def sample(self, i: int, forced: tuple | None = None, apply: bool = True):
        """Sample one terminal for updating player ``i``.

        With ``forced`` the given terminal is used instead of a random draw;
        with ``apply=False`` nothing is written and the regret increments are
        returned as {infoset key: vector}. Returns (terminal, q(z), increments).
        """
        g, sch = self.game, self.scheme
        target = self._target
        tprob = sch.targeting if target is not None else 0.0
        targeted = forced is None and tprob > 0.0 and self.rng.random() < tprob
        h = g.root()
        steps: list[_Step] = []
        pi = (1.0, 1.0, 1.0)
        qt = qu = 1.0
        add_pos = -1
        playout = False
        hist: tuple = ()
        while g.player(h) != TERMINAL:
            p = g.player(h)
            k = g.num_actions(h)
            node = None
            if p == CHANCE:
                sigma = np.asarray(g.chance_probs(h), dtype=float)
                samp = sigma
            else:
                if playout:
                    sigma = np.full(k, 1.0 / k)
                else:
                    key = g.infoset_key(h, p)
                    node = self.nodes.get(key)
                    if node is None:
                        node = SolverNode.empty(k)
                        if apply or not sch.incremental:
                            self.nodes[key] = node
                        if sch.incremental:
                            add_pos = len(steps)
                            playout = True
                    sigma = node.strategy()
                samp = (1 - sch.epsilon) * sigma + sch.epsilon / k if p == i else sigma
            q_here = tprob * qt + (1 - tprob) * qu if target is not None else qu
            step = _Step(h, hist, p, sigma, -1, node, pi, q_here)
            children = [g.child(h, a) for a in range(k)]
            if sch.both_branch and g.both_branch(h):
                live = [a for a, c in enumerate(children) if g.player(c) != TERMINAL]
                a = live[0]
                for b, c in enumerate(children):
                    if b != a:
                        step.exact[b] = g.utility(c)
            else:
                if target is not None:
                    cons = np.array([target.consistent(hist + (b,)) for b in range(k)])
                    mass = float((samp * cons).sum())
                    if cons.any():
                        tgt = samp * cons / mass if mass > 0 else cons / cons.sum()
                    else:
                        tgt = np.zeros(k)
                else:
                    tgt = None
                if forced is not None:
                    a = forced[len(steps)]
                else:
                    dist = tgt if targeted else samp
                    a = int(self.rng.choice(k, p=dist / dist.sum()))
                qu *= samp[a]
                qt = qt * tgt[a] if tgt is not None else 0.0
            step.action = a
            steps.append(step)
            idx = p if p >= 0 else 2
            pi = tuple(x * sigma[a] if j == idx else x for j, x in enumerate(pi))
            h = children[a]
            hist = hist + (a,)
        if add_pos < 0:
            add_pos = len(steps) - 1
        u0 = g.utility(h)
        qz = tprob * qt + (1 - tprob) * qu if target is not None else qu
        if qz <= 0.0:
            raise AssertionError("sampled a terminal with zero probability")
        increments: dict[str, np.ndarray] = {}
        sign = 1.0 if i == 0 else -1.0
        value = sign * u0
        q_child = qz
        for pos in range(len(steps) - 1, -1, -1):
            st = steps[pos]
            sampled = value * st.q / q_child
            est = np.zeros(len(st.sigma))
            est[st.action] = sampled
            for b, u in st.exact.items():
                est[b] = sign * u
            uh = float(st.sigma @ est)
            if pos <= add_pos:
                if st.player == i:
                    w = st.pi[1 - i] * st.pi[2] / st.q
                    inc = w * (est - uh)
                    if apply:
                        st.node.regret = np.clip(st.node.regret + inc, -REGRET_CLIP, REGRET_CLIP)
                    else:
                        increments[self.game.infoset_key(st.h, i)] = inc
                elif st.player >= 0 and apply:
                    st.node.avg += st.pi[st.player] / st.q * st.sigma
                if apply and self.track_cfv:
                    s = self.stats.get(st.hist)
                    if s is None:
                        s = self.stats[st.hist] = HistoryStats()
                    full = st.pi[0] * st.pi[1] * st.pi[2]
                    for p in (0, 1):
                        vt = st.pi[1 - p] * st.pi[2] * (uh if p == i else -uh) / st.q
                        s.arith[p] += vt
                        s.wnum[p] += full * vt
                    s.wden += full / st.q
            value = uh
            q_child = st.q
        if apply:
            self.samples += 1
            self.min_q = min(self.min_q, qz)
            if self.crp is not None:
                self._crp_update(steps, add_pos, u0, qz)
        return h, qz, increments

    def _crp_update(self, steps, add_pos, u0, qz):
        recs = [PathRecord(s.hist, s.player, s.sigma, s.action) for s in steps]
        pc = [1.0]
        for s in steps:
            pc.append(pc[-1] * (s.sigma[s.action] if s.player == CHANCE else 1.0))
        suffix = [pc[-1] / c if c > 0 else 0.0 for c in pc[:add_pos + 1]]
        self.crp.update(recs[:add_pos + 1], recs[add_pos + 1:], u0, qz, suffix)

    # -- results -----------------------------------------------------------

    def average_strategy(self) -> BehavioralStrategy:
        return BehavioralStrategy({k: n.average() for k, n in self.nodes.items()})

    def current_strategy(self) -> BehavioralStrategy:
        return BehavioralStrategy({k: n.strategy() for k, n in self.nodes.items()})

    def history_cfv(self, hist: tuple, player: int, mode: str = "weighted") -> float:
        """Estimated v_i(h); NaN when the estimator has no mass."""
        if mode == "crp-unbiased":
            if self.crp is None:
                raise ValueError("solver was built without crp tracking")
            u = self.crp.utility(tuple(hist), player)
            if u != u:
                return NO_MASS
            from ..game import reach_probabilities

            r = reach_probabilities(self.game, self.average_strategy(), hist)
            return r[1 - player] * r[2] * u
        s = self.stats.get(tuple(hist))
        if mode == "arithmetic":
            return float(s.arith[player] / self.samples) if s is not None and self.samples else 0.0
        if mode == "weighted":
            if s is None or s.wden <= 0:
                return NO_MASS
            return float(s.wnum[player] / s.wden)
        raise ValueError(f"unknown CFV mode {mode!r}")

    def cfv_estimate(self, histories: Iterable[tuple], player: int, mode: str = "weighted") -> float:
        """Sum of history estimates (an infoset's upper frontier); no-mass terms count as 0."""
        total = 0.0
        for h in histories:
            v = self.history_cfv(h, player, mode)
            if v == v:
                total += v
        return total

    def dump_nodes(self, path) -> None:
        """CSV table of per-infoset accumulators."""
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["infoset_key", "action", "cum_regret", "avg_numerator", "cfv_arith",
                        "cfv_weighted_num", "cfv_weighted_den"])
            for key in sorted(self.nodes):
                n = self.nodes[key]
                for a in range(len(n.regret)):
                    w.writerow([key, a, n.regret[a], n.avg[a], "", "", ""])
            for hist in sorted(self.stats):
                s = self.stats[hist]
                w.writerow(["h:" + ".".join(map(str, hist)), "", "", "", s.arith[0], s.wnum[0],
                            s.wden])


def run_mccfr(game: Game, iterations: int | None = None, time_ms: float | None = None,
              scheme: SamplingScheme | None = None, seed: int = 0,
              track_crp: bool = False) -> OutcomeSampling:
    """Run outcome sampling from scratch and return the solver."""
    solver = OutcomeSampling(game, scheme, seed, track_crp=track_crp)
    return solver.run(iterations, time_ms)
