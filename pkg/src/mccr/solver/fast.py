"""Outcome-sampling MCCFR on compiled trees, run by a numba kernel."""

from __future__ import annotations

import copy
import time
from typing import Iterable

import numpy as np

from .. import _kernels as K
from ..strategy import BehavioralStrategy
from ..tree import GameTree, get_tree
from .cfr import normalize_flat
from .sampling import SamplingScheme

_CHUNK = 256


class FastOutcomeSampling:
    """Array twin of :class:`OutcomeSampling`.

    Same sampling scheme and estimators; infosets are "in memory" through a
    flag array, so growing the tree never reallocates. Targets are node ids.
    """

    def __init__(self, game_or_tree, scheme: SamplingScheme | None = None, seed: int = 0,
                 track_cfv: bool = True):
        self.tree = game_or_tree if isinstance(game_or_tree, GameTree) else get_tree(game_or_tree)
        t = self.tree
        if t.depth.max(initial=0) >= 64:
            raise ValueError("fast sampler supports depth below 64")
        self.scheme = copy.copy(scheme) if scheme is not None else SamplingScheme()
        self.rng = np.random.default_rng(seed)
        self.regret = np.zeros(t.num_flat)
        self.avg = np.zeros(t.num_flat)
        self.in_mem = np.zeros(t.num_isets, dtype=np.bool_)
        self.track_cfv = track_cfv
        shape = (t.n, 2) if track_cfv else (1, 2)
        self.arith = np.zeros(shape)
        self.wnum = np.zeros(shape)
        self.wden = np.zeros(shape[0])
        self.consistent = np.zeros(t.n, dtype=np.bool_)
        self.stats = np.array([0.0, 1.0])
        self.iterations = 0
        if self.scheme.target:
            self.set_target(self.scheme.target)

    @property
    def samples(self) -> int:
        return int(self.stats[0])

    @property
    def min_q(self) -> float:
        return float(self.stats[1])

    def set_target(self, nodes: Iterable[int] | None, targeting: float | None = None) -> None:
        """Mark target nodes with their ancestors and descendants as consistent."""
        t = self.tree
        c = np.zeros(t.n, dtype=np.bool_)
        nodes = np.asarray(list(nodes) if nodes is not None else [], dtype=np.int64)
        if len(nodes):
            K.mark_consistent(t.parent, nodes, c)
        self.consistent = c
        if targeting is not None:
            self.scheme.targeting = targeting
        if not len(nodes):
            self.scheme.targeting = 0.0

    def _kernel(self, n: int) -> None:
        t, s = self.tree, self.scheme
        K.os_run(t.player, t.first_child, t.num_children, t.infoset, t.iset_offset, t.chance,
                 t.utility, t.both, self.regret, self.avg, self.in_mem, self.arith, self.wnum,
                 self.wden, self.consistent, self.rng, n, s.epsilon, s.targeting,
                 s.incremental, self.track_cfv, s.both_branch, self.stats)
        self.iterations += n

    def run(self, iterations: int | None = None, time_ms: float | None = None) -> "FastOutcomeSampling":
        if iterations is None and time_ms is None:
            raise ValueError("need an iteration or time budget")
        if time_ms is None:
            if iterations > 0:
                self._kernel(iterations)
            return self
        end = time.perf_counter() + time_ms / 1000.0
        left = iterations
        while time.perf_counter() < end and (left is None or left > 0):
            n = _CHUNK if left is None else min(_CHUNK, left)
            self._kernel(n)
            if left is not None:
                left -= n
        return self

    def iteration(self) -> None:
        self._kernel(1)

    def average_array(self) -> np.ndarray:
        return normalize_flat(self.avg, self.tree.iset_offset)

    def current_array(self) -> np.ndarray:
        out = np.zeros(self.tree.num_flat)
        K.regret_matching_flat(self.regret, self.tree.iset_offset, out)
        return out

    def average_strategy(self, only_memory: bool = True) -> BehavioralStrategy:
        flat = self.average_array()
        out = BehavioralStrategy()
        t = self.tree
        for s, key in enumerate(t.iset_keys):
            if only_memory and not self.in_mem[s]:
                continue
            out.table[key] = flat[t.iset_offset[s]:t.iset_offset[s + 1]].copy()
        return out

    def history_cfv(self, node: int, player: int, mode: str = "weighted") -> float:
        if not self.track_cfv:
            raise ValueError("solver was built without CFV tracking")
        if mode == "arithmetic":
            return float(self.arith[node, player] / self.samples) if self.samples else 0.0
        if mode == "weighted":
            d = self.wden[node]
            return float(self.wnum[node, player] / d) if d > 0 else float("nan")
        raise ValueError(f"mode {mode!r} needs the generic sampler")

    def node_cfvs(self, player: int, mode: str = "weighted") -> np.ndarray:
        """Estimates for all nodes; NaN where the weighted estimator has no mass."""
        if mode == "arithmetic":
            return self.arith[:, player] / max(self.samples, 1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.wden > 0, self.wnum[:, player] / self.wden, np.nan)

    def cfv_estimate(self, nodes: Iterable[int], player: int, mode: str = "weighted") -> float:
        v = self.node_cfvs(player, mode)[np.asarray(list(nodes), dtype=np.int64)]
        return float(np.nansum(v))

    def copy(self) -> "FastOutcomeSampling":
        other = copy.copy(self)
        for name in ("regret", "avg", "in_mem", "arith", "wnum", "wden", "stats"):
            setattr(other, name, getattr(self, name).copy())
        other.scheme = copy.copy(self.scheme)
        other.rng = copy.deepcopy(self.rng)
        return other
