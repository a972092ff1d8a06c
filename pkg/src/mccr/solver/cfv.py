"""Counterfactual-value estimators and cumulative reach bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..game import CHANCE, TERMINAL, Game, action_probs
from ..strategy import BehavioralStrategy

NO_MASS = float("nan")


@dataclass
class HistoryStats:
    """Sampled CFV accumulators of one history."""

    arith: np.ndarray = field(default_factory=lambda: np.zeros(2))
    wnum: np.ndarray = field(default_factory=lambda: np.zeros(2))
    wden: float = 0.0


def arithmetic_cfv(stats: HistoryStats, samples: int, player: int) -> float:
    return float(stats.arith[player] / samples) if samples else 0.0


def weighted_cfv(stats: HistoryStats, player: int) -> float:
    """Self-normalized estimate; NaN marks a history that got no mass."""
    return float(stats.wnum[player] / stats.wden) if stats.wden > 0 else NO_MASS


@dataclass
class PathRecord:
    key: tuple  # history
    player: int
    sigma: np.ndarray
    action: int


class CrpTracker:
    """Lazy cumulative reach probabilities and the unbiased value estimator.

    ``crp_i(h)`` is the sum over time steps of player i's reach of h. It is
    brought up to date only when h lies on a sampled path: the increase since
    the last visit waits in the parent as ``w_i(h)``. The result is exact as
    long as the strategy at h does not change between visits of h.
    """

    def __init__(self):
        self.crp: dict[tuple, np.ndarray] = {}
        self.pending: dict[tuple, dict[int, np.ndarray]] = {}
        self.parent: dict[tuple, tuple] = {}
        self.s: dict[tuple, float] = {}
        self.steps = 0

    def update(self, records: Sequence[PathRecord], tail: Sequence[PathRecord], u0: float,
               qz: float, chance_suffix: Sequence[float]) -> None:
        """Account one sampled terminal.

        ``records`` are the stored histories on the path (root first),
        ``tail`` the remaining decisions below them (no bookkeeping, their
        strategies are the playout policy). ``chance_suffix[k]`` is the
        chance reach from ``records[k]`` to the terminal.
        """
        self.steps += 1
        inc = np.ones(2)
        prev = None
        for rec in records:
            if prev is not None:
                inc = self.pending[prev.key].pop(prev.action, np.zeros(2))
                self.parent.setdefault(rec.key, (prev.key, prev.action))
            self.crp[rec.key] = self.crp.get(rec.key, np.zeros(2)) + inc
            pend = self.pending.setdefault(rec.key, {})
            for b, p in enumerate(rec.sigma):
                f = np.array([p if rec.player == 0 else 1.0, p if rec.player == 1 else 1.0])
                pend[b] = pend.get(b, np.zeros(2)) + inc * f
            prev = rec
        last = records[-1]
        crp_z = self.pending[last.key].get(last.action, np.zeros(2)).copy()
        reach = np.ones(2)
        for rec in records:
            if rec.player >= 0:
                reach[rec.player] *= rec.sigma[rec.action]
        for rec in tail:
            if rec.player >= 0:
                f = rec.sigma[rec.action]
                reach[rec.player] *= f
                crp_z[rec.player] *= f
        term = reach[0] * crp_z[1] + crp_z[0] * reach[1] - reach[0] * reach[1]
        for k, rec in enumerate(records):
            self.s[rec.key] = self.s.get(rec.key, 0.0) + term * chance_suffix[k] * u0 / qz

    def current_crp(self, key: tuple) -> np.ndarray:
        c = self.crp.get(key, np.zeros(2)).copy()
        if key in self.parent:
            pk, a = self.parent[key]
            c += self.pending.get(pk, {}).get(a, np.zeros(2))
        return c

    def utility(self, key: tuple, player: int = 0) -> float:
        """Unbiased estimate of u_i of the reach-averaged strategy at ``key``."""
        c = self.current_crp(key)
        d = c[0] * c[1]
        if d <= 0:
            return NO_MASS
        u = self.s.get(key, 0.0) / d
        return u if player == 0 else -u


def fixed_schedule_crp_estimate(game: Game, strategies: Sequence[BehavioralStrategy],
                                history: tuple, rng: np.random.Generator,
                                epsilon: float = 0.6) -> float:
    """One sampled estimate of player 0's value at ``history`` under the
    reach-weighted average of ``strategies``.

    Step t samples a terminal z from the epsilon-mixture of the t-th profile
    (chance on policy) and adds the crp-based term for z divided by its
    sample probability. The schedule is known, so the cumulative reaches are
    computed exactly instead of lazily; the lazy tracker needs strategies
    that only change at visited histories, which a fixed schedule breaks.
    """
    from ..game import reach_probabilities

    history = tuple(history)
    crp_h = np.zeros(2)
    for sigma in strategies:
        crp_h += np.asarray(reach_probabilities(game, sigma, history)[:2])
    if crp_h[0] * crp_h[1] <= 0:
        return NO_MASS
    total = 0.0
    for t, sigma in enumerate(strategies):
        h, q = game.root(), 1.0
        while game.player(h) != TERMINAL:
            p = game.player(h)
            probs = action_probs(game, sigma, h)
            samp = probs if p == CHANCE else (1 - epsilon) * probs + epsilon / len(probs)
            a = int(rng.choice(len(probs), p=samp / samp.sum()))
            q *= samp[a]
            h = game.child(h, a)
        z = game.history(h)
        if z[:len(history)] != history:
            continue
        now = reach_probabilities(game, sigma, z)
        crp_z = np.sum([reach_probabilities(game, s, z)[:2] for s in strategies[:t + 1]], axis=0)
        chance_h = reach_probabilities(game, sigma, history)[2]
        pc = now[2] / chance_h if chance_h > 0 else 0.0
        term = now[0] * crp_z[1] + crp_z[0] * now[1] - now[0] * now[1]
        total += term * pc * game.utility(h) / q
    return total / (crp_h[0] * crp_h[1])


def exact_weighted_utilities(game: Game, strategies: Sequence[BehavioralStrategy],
                             history: tuple, player: int) -> dict[str, float]:
    """Exact per-iteration values at ``history`` combined by fixed weights.

    Returns the uniform average, the average weighted by ``player``'s own
    reach, and the average weighted by the full reach.
    """
    from ..game import expected_utility, reach_probabilities

    h = game.replay(history)
    us, own, full = [], [], []
    for sigma in strategies:
        u = expected_utility(game, sigma, h)
        r = reach_probabilities(game, sigma, history)
        us.append(u if player == 0 else -u)
        own.append(r[player])
        full.append(r[0] * r[1] * r[2])
    us, own, full = map(np.asarray, (us, own, full))
    return {"arithmetic": float(us.mean()),
            "own": float((own * us).sum() / own.sum()),
            "full": float((full * us).sum() / full.sum())}


def crp_exact_utility(game: Game, strategies: Sequence[BehavioralStrategy], history: tuple) -> float:
    """Player-0 value of the averaged strategy at ``history`` via
    u = sum_z pi_c(z|h) u(z) crp_1(z) crp_2(z) / (crp_1(h) crp_2(h))."""
    from ..game import reach_probabilities, walk

    h = game.replay(history)
    def crp(actions):
        c = np.zeros(2)
        for sigma in strategies:
            r = reach_probabilities(game, sigma, actions)
            c += r[:2]
        return c

    ch = crp(history)
    total = 0.0
    for z in walk(game, h):
        if game.player(z) != TERMINAL:
            continue
        actions = game.history(z)
        cz = crp(actions)
        pc = reach_probabilities(game, BehavioralStrategy(), actions)[2] / \
            reach_probabilities(game, BehavioralStrategy(), history)[2]
        total += pc * game.utility(z) * cz[0] * cz[1]
    return total / (ch[0] * ch[1])
