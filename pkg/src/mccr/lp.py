"""Sequence-form linear program: equilibrium oracle for small games."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .tree import GameTree


@dataclass
class LPSolution:
    value: float  # player-0 game value
    strategy: np.ndarray  # flat behavioral profile, both players


def _sequences(tree: GameTree):
    """Parent sequence of every node for each player (0 = empty sequence)."""
    n = tree.n
    seq = np.zeros((n, 2), dtype=np.int64)
    for v in range(1, n):
        p = tree.parent[v]
        seq[v] = seq[p]
        pl = tree.player[p]
        if pl >= 0:
            seq[v, pl] = tree.edge[v] + 1
    return seq


def _constraints(tree: GameTree, player: int, seq: np.ndarray):
    """Rows: empty sequence, then one per infoset of ``player``."""
    isets = np.flatnonzero(tree.iset_player == player)
    rows, cols, vals = [0], [0], [1.0]
    first = {}
    for v in np.flatnonzero(tree.player == player).tolist():
        first.setdefault(int(tree.infoset[v]), v)
    for r, s in enumerate(isets.tolist(), start=1):
        rows.append(r)
        cols.append(int(seq[first[s], player]))
        vals.append(-1.0)
        for k in range(tree.iset_offset[s], tree.iset_offset[s + 1]):
            rows.append(r)
            cols.append(int(k) + 1)
            vals.append(1.0)
    m = tree.num_flat + 1
    return sparse.csr_matrix((vals, (rows, cols)), shape=(len(isets) + 1, m))


def _solve_player(tree: GameTree, player: int, seq, A) -> tuple[float, np.ndarray]:
    """Maximize player's guaranteed payoff over its realization plans."""
    m = tree.num_flat + 1
    E = _constraints(tree, player, seq)
    F = _constraints(tree, 1 - player, seq)
    payoff = A if player == 0 else -A.T  # rows: own sequences
    nx, nv = m, F.shape[0]
    # variables [x (nx), y (nv)]; maximize y[0]  s.t.  F^T y - payoff^T x <= 0
    c = np.zeros(nx + nv)
    c[nx] = -1.0
    A_ub = sparse.hstack([-payoff.T, F.T]).tocsr()
    b_ub = np.zeros(A_ub.shape[0])
    A_eq = sparse.hstack([E, sparse.csr_matrix((E.shape[0], nv))]).tocsr()
    b_eq = np.zeros(E.shape[0])
    b_eq[0] = 1.0
    bounds = [(0, None)] * nx + [(None, None)] * nv
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"LP failed: {res.message}")
    return -res.fun, res.x[:nx]


def solve_lp(tree: GameTree) -> LPSolution:
    seq = _sequences(tree)
    m = tree.num_flat + 1
    term = np.flatnonzero(tree.player == -2)
    r = np.ones(tree.n)
    for v in range(1, tree.n):
        r[v] = r[tree.parent[v]] * tree.chance[v]
    A = sparse.coo_matrix((r[term] * tree.utility[term], (seq[term, 0], seq[term, 1])),
                          shape=(m, m)).tocsr()
    v0, x0 = _solve_player(tree, 0, seq, A)
    v1, x1 = _solve_player(tree, 1, seq, A)
    flat = np.zeros(tree.num_flat)
    first = {}
    for v in np.flatnonzero(tree.player >= 0).tolist():
        first.setdefault(int(tree.infoset[v]), v)
    for s in range(tree.num_isets):
        pl = int(tree.iset_player[s])
        x = x0 if pl == 0 else x1
        lo, hi = tree.iset_offset[s], tree.iset_offset[s + 1]
        part = np.maximum(x[lo + 1:hi + 1], 0.0)
        tot = part.sum()
        flat[lo:hi] = part / tot if tot > 1e-12 else 1.0 / (hi - lo)
    return LPSolution(value=0.5 * (v0 - v1), strategy=flat)
