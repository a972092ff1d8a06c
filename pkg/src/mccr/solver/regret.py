"""Regret matching and reach-weighted strategy averaging."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..game import CHANCE, TERMINAL, Game
from ..strategy import BehavioralStrategy


def regret_matching(regrets) -> np.ndarray:
    """Distribution proportional to positive regrets, uniform if none is positive."""
    r = np.maximum(np.asarray(regrets, dtype=float), 0.0)
    total = r.sum()
    if total > 0.0:
        return r / total
    return np.full(len(r), 1.0 / len(r))


def average_strategies(game: Game, strategies: Sequence[BehavioralStrategy],
                       weights: Sequence[float] | None = None) -> BehavioralStrategy:
    """Reach-weighted average of behavioral strategies.

    At every infoset I of player i the result is
    sum_t w_t pi_i^t(I) sigma^t(I) / sum_t w_t pi_i^t(I), which realizes the
    mixture of the inputs. Infosets no input reaches get the plain average.
    Enumerates the whole game.
    """
    if weights is None:
        weights = [1.0] * len(strategies)
    num: dict[str, np.ndarray] = {}
    den: dict[str, float] = {}
    plain: dict[str, np.ndarray] = {}
    seen: set = set()
    for sigma, wt in zip(strategies, weights):
        stack = [(game.root(), 1.0, 1.0)]
        seen.clear()
        while stack:
            h, r0, r1 = stack.pop()
            p = game.player(h)
            if p == TERMINAL:
                continue
            k = game.num_actions(h)
            if p == CHANCE:
                for a in range(k):
                    stack.append((game.child(h, a), r0, r1))
                continue
            key = game.infoset_key(h, p)
            probs = sigma.probs(key, k)
            if key not in seen:
                seen.add(key)
                own = r0 if p == 0 else r1
                num[key] = num.get(key, 0.0) + wt * own * probs
                den[key] = den.get(key, 0.0) + wt * own
                plain[key] = plain.get(key, 0.0) + wt * probs
            for a in range(k):
                if p == 0:
                    stack.append((game.child(h, a), r0 * probs[a], r1))
                else:
                    stack.append((game.child(h, a), r0, r1 * probs[a]))
    out = BehavioralStrategy()
    total_w = float(sum(weights))
    for key in num:
        out[key] = num[key] / den[key] if den[key] > 0 else plain[key] / total_w
    return out


def average_strategy_arrays(tree, flats: Sequence[np.ndarray],
                            weights: Sequence[float] | None = None) -> np.ndarray:
    """Array form of :func:`average_strategies` over a compiled tree."""
    from .. import _kernels as K

    if weights is None:
        weights = [1.0] * len(flats)
    acting = np.flatnonzero(tree.infoset >= 0)
    # one representative node per infoset carries the own reach
    _, first = np.unique(tree.infoset[acting], return_index=True)
    rep = acting[first]
    pl = tree.player[rep]
    iset_of_flat = np.repeat(np.arange(tree.num_isets), tree.iset_nact)
    num = np.zeros(tree.num_flat)
    den = np.zeros(tree.num_isets)
    plain = np.zeros(tree.num_flat)
    for flat, w in zip(flats, weights):
        r = K.reach(tree.player, tree.parent, tree.edge, tree.chance, flat)
        own = np.zeros(tree.num_isets)
        own[tree.infoset[rep]] = r[rep, pl]
        num += w * own[iset_of_flat] * flat
        den += w * own
        plain += w * flat
    d = den[iset_of_flat]
    out = plain / float(sum(weights))
    mask = d > 0
    out[mask] = num[mask] / d[mask]
    return out
