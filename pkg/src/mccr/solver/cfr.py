"""Vanilla CFR on compiled trees (exact oracle and exact resolver)."""

from __future__ import annotations

import numpy as np

from .. import _kernels as K
from ..strategy import BehavioralStrategy
from ..tree import GameTree, get_tree


class CFRSolver:
    """Simultaneous-update vanilla CFR with uniform averaging."""

    def __init__(self, game_or_tree):
        self.tree = game_or_tree if isinstance(game_or_tree, GameTree) else get_tree(game_or_tree)
        m = self.tree.num_flat
        self.regret = np.zeros(m)
        self.avg = np.zeros(m)
        self._sigma = np.zeros(m)
        self.iterations = 0

    def iteration(self) -> None:
        self.run(1)

    def run(self, iterations: int) -> "CFRSolver":
        t = self.tree
        for _ in range(iterations):
            K.cfr_iteration(t.player, t.parent, t.first_child, t.num_children, t.edge, t.chance,
                            t.utility, t.infoset, t.iset_offset, self.regret, self.avg, self._sigma)
        self.iterations += iterations
        return self

    def current_array(self) -> np.ndarray:
        out = np.zeros(self.tree.num_flat)
        K.regret_matching_flat(self.regret, self.tree.iset_offset, out)
        return out

    def average_array(self) -> np.ndarray:
        return normalize_flat(self.avg, self.tree.iset_offset)

    def average_strategy(self) -> BehavioralStrategy:
        return self.tree.to_strategy(self.average_array())


def normalize_flat(num: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Per-infoset normalization; zero-mass infosets become uniform."""
    sizes = np.diff(offsets)
    idx = np.repeat(np.arange(len(sizes)), sizes)
    tot = np.bincount(idx, weights=num, minlength=len(sizes))[idx]
    out = np.where(tot > 0, num / np.where(tot > 0, tot, 1.0), 1.0 / sizes[idx])
    return out


def cfr_iteration(game_or_tree, solver: CFRSolver | None = None) -> CFRSolver:
    if solver is None:
        solver = CFRSolver(game_or_tree)
    return solver.run(1)
