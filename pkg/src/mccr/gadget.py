"""Resolving gadget: an auxiliary game that re-solves a subgame safely.

A chance root picks one of the public state's topmost histories; at its copy
the opponent either terminates (receiving the value it was promised) or
follows into the original subgame, whose utilities are rescaled.
"""

from __future__ import annotations

import csv
from typing import Mapping, Sequence

import numpy as np

from .game import CHANCE, TERMINAL, Game, reach_probabilities
from .strategy import BehavioralStrategy
from .tree import GameTree, _finish

PREFIX = "~"
TERMINATE, FOLLOW = 0, 1


class UnreachablePublicState(ValueError):
    pass


class _GState:
    __slots__ = ("kind", "idx", "base", "actions")

    def __init__(self, kind, idx, base, actions):
        self.kind = kind  # 0 root, 1 frontier copy, 2 terminate, 3 inside the subgame
        self.idx = idx
        self.base = base
        self.actions = actions


class GadgetGame(Game):
    """Gadget over ``frontier`` (topmost histories of a public state).

    ``resolver`` is the player whose strategy is being recomputed; the other
    player chooses terminate/follow. ``root_probs`` is the chance root,
    ``terminate_utility`` holds player-0 payoffs of the terminate leaves and
    ``scale`` multiplies all subgame utilities.
    """

    def __init__(self, base: Game, frontier: Sequence[tuple], resolver: int,
                 root_probs: Sequence[float], terminate_utility: Sequence[float], scale: float,
                 plain_probs: Sequence[float] | None = None):
        self.base = base
        self.frontier = [tuple(h) for h in frontier]
        self.frontier_states = [base.replay(h) for h in self.frontier]
        self.resolver = resolver
        self.opponent = 1 - resolver
        self.root_probs = np.asarray(root_probs, dtype=float)
        self.plain_probs = self.root_probs if plain_probs is None else np.asarray(plain_probs)
        self.terminate_utility = np.asarray(terminate_utility, dtype=float)
        self.scale = float(scale)
        self.name = f"gadget[{base.name}:{base.public_key(self.frontier_states[0])}]"
        if abs(self.root_probs.sum() - 1.0) > 1e-9:
            raise ValueError("gadget root probabilities must sum to 1")

    def root(self):
        return _GState(0, -1, None, ())

    def player(self, h) -> int:
        if h.kind == 0:
            return CHANCE
        if h.kind == 1:
            return self.opponent
        if h.kind == 2:
            return TERMINAL
        return self.base.player(h.base)

    def num_actions(self, h) -> int:
        if h.kind == 0:
            return len(self.frontier)
        if h.kind == 1:
            return 2
        return self.base.num_actions(h.base)

    def chance_probs(self, h):
        if h.kind == 0:
            return self.root_probs
        return self.base.chance_probs(h.base)

    def child(self, h, a: int):
        acts = h.actions + (a,)
        if h.kind == 0:
            return _GState(1, a, None, acts)
        if h.kind == 1:
            if a == TERMINATE:
                return _GState(2, h.idx, None, acts)
            return _GState(3, h.idx, self.frontier_states[h.idx], acts)
        return _GState(3, h.idx, self.base.child(h.base, a), acts)

    def utility(self, h) -> float:
        if h.kind == 2:
            return float(self.terminate_utility[h.idx])
        return self.base.utility(h.base) * self.scale

    def infoset_key(self, h, player: int) -> str:
        if h.kind == 0:
            return PREFIX
        if h.kind == 1:
            return PREFIX + self.base.infoset_key(self.frontier_states[h.idx], player)
        return self.base.infoset_key(h.base, player)

    def public_key(self, h) -> str:
        if h.kind == 0:
            return PREFIX
        if h.kind == 1:
            return PREFIX + PREFIX
        return self.base.public_key(h.base)

    def both_branch(self, h) -> bool:
        return h.kind == 1

    @property
    def max_utility(self) -> float:
        t = float(np.abs(self.terminate_utility).max(initial=0.0))
        return max(t, self.base.max_utility * self.scale)

    def action_label(self, h, a: int) -> str:
        if h.kind == 0:
            return f"h{a}"
        if h.kind == 1:
            return "TF"[a]
        return self.base.action_label(h.base, a)

    def base_history(self, h) -> tuple | None:
        """History of the base game corresponding to a gadget history."""
        if h.kind != 3:
            return None
        return self.frontier[h.idx] + h.actions[2:]

    def dump_frontier(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["history", "opponent_key", "root_prob", "terminate_utility_p0"])
            for i, h in enumerate(self.frontier):
                key = self.base.infoset_key(self.frontier_states[i], self.opponent)
                w.writerow([".".join(map(str, h)), key, self.root_probs[i],
                            self.terminate_utility[i]])


def chance_reach(game: Game, history: tuple) -> float:
    return reach_probabilities(game, BehavioralStrategy(), history)[2]


def build_resolving_gadget(base: Game, frontier: Sequence[tuple], resolver: int,
                           resolver_range: Sequence[float], opponent_cfv: Mapping[str, float],
                           mode: str = "plain", epsilon: float = 1e-3,
                           opponent_reach: Sequence[float] | None = None,
                           chance: Sequence[float] | None = None) -> GadgetGame:
    """Gadget for the public state whose upper frontier is ``frontier``.

    ``resolver_range`` is the resolver's reach of each frontier history and
    ``opponent_cfv`` maps the opponent's augmented infoset keys to promised
    counterfactual values. ``mode`` is ``plain`` (root weights proportional
    to pi_{-o}) or ``epsilon`` (proportional to pi_{-o} (pi_o + epsilon),
    with ``opponent_reach`` defaulting to 1).
    """
    frontier = [tuple(h) for h in frontier]
    opp = 1 - resolver
    if chance is None:
        chance = [chance_reach(base, h) for h in frontier]
    pi_mo = np.asarray(resolver_range, dtype=float) * np.asarray(chance, dtype=float)
    total = pi_mo.sum()
    if not total > 0:
        raise UnreachablePublicState("public state has zero reach for the opponent's counterfactual")
    states = [base.replay(h) for h in frontier]
    keys = [base.infoset_key(s, opp) for s in states]
    group: dict[str, float] = {}
    for k, p in zip(keys, pi_mo):
        group[k] = group.get(k, 0.0) + p
    missing = [k for k in group if k not in opponent_cfv]
    if missing:
        raise ValueError(f"no value estimate for opponent infosets {missing[:3]}")
    t_opp = np.array([opponent_cfv[k] * total / group[k] if group[k] > 0 else 0.0 for k in keys])
    t_util = t_opp if opp == 0 else -t_opp
    plain = pi_mo / total
    if mode == "plain":
        probs = plain
    elif mode == "epsilon":
        r_o = np.ones(len(frontier)) if opponent_reach is None else np.asarray(opponent_reach)
        w = pi_mo * (r_o + epsilon)
        probs = w / w.sum()
    else:
        raise ValueError(f"unknown root mode {mode!r}")
    return GadgetGame(base, frontier, resolver, probs, t_util, total, plain_probs=plain)


def combine_strategy(strategy: BehavioralStrategy, gadget_keys, resolved: BehavioralStrategy,
                     base_tree: GameTree | None = None) -> BehavioralStrategy:
    """Replace ``strategy`` on the subgame infosets ``gadget_keys`` by ``resolved``.

    ``gadget_keys`` maps infoset key -> action count (e.g. from a compiled
    gadget); terminate/follow infosets are skipped.
    """
    out = strategy.copy()
    for key, n in gadget_keys.items():
        if key.startswith(PREFIX):
            continue
        if base_tree is not None:
            s = base_tree._iset_ids.get(key)
            if s is None or base_tree.iset_nact[s] != n:
                raise KeyError(f"gadget infoset {key!r} does not map onto the base game")
        out[key] = resolved.probs(key, n)
    return out


def gadget_infosets(tree: GameTree) -> dict[str, int]:
    return {k: int(n) for k, n in zip(tree.iset_keys, tree.iset_nact)}


# -- compiled gadgets ---------------------------------------------------------

def _first_rank(labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ids by order of first appearance; returns (ids, representative index per id)."""
    uniq, first, inv = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty(len(uniq), dtype=np.int64)
    rank[order] = np.arange(len(uniq))
    return rank[inv], first[order]


def compile_gadget(g: GadgetGame, base: GameTree) -> GameTree:
    """Build the gadget's GameTree by slicing ``base`` arrays.

    Produces the same tree as enumerating ``g`` directly, much faster.
    The result carries ``base_node`` (base id or -1) and ``branch``
    (frontier index, -1 at the root).
    """
    m = len(g.frontier)
    fr = np.array([base.node_of(h) for h in g.frontier], dtype=np.int64)
    o = g.opponent
    # levels: root, copies, terminate/follow pairs, then subtrees
    base_ids = [np.array([-1]), np.full(m, -1), np.empty(2 * m, dtype=np.int64)]
    base_ids[2][0::2] = -1
    base_ids[2][1::2] = fr
    parents = [np.array([-1]), np.zeros(m, dtype=np.int64), np.repeat(np.arange(1, m + 1), 2)]
    actions = [np.array([0]), np.arange(m), np.tile([TERMINATE, FOLLOW], m)]
    branch = [np.array([-1]), np.arange(m), np.repeat(np.arange(m), 2)]
    cur_base = fr
    cur_new = 1 + m + 2 * np.arange(m) + 1
    cur_branch = np.arange(m)
    next_id = 1 + 3 * m
    while len(cur_base):
        k = base.num_children[cur_base]
        keep = k > 0
        cb, cn, cbr, kk = cur_base[keep], cur_new[keep], cur_branch[keep], k[keep]
        tot = int(kk.sum())
        if tot == 0:
            break
        starts = np.cumsum(kk) - kk
        local = np.arange(tot) - np.repeat(starts, kk)
        child_base = np.repeat(base.first_child[cb], kk) + local
        child_new = next_id + np.arange(tot)
        base_ids.append(child_base)
        parents.append(np.repeat(cn, kk))
        actions.append(local)
        branch.append(np.repeat(cbr, kk))
        cur_base, cur_new, cur_branch = child_base, child_new, np.repeat(cbr, kk)
        next_id += tot
    bnode = np.concatenate(base_ids)
    parent = np.concatenate(parents)
    action = np.concatenate(actions)
    br = np.concatenate(branch)
    n = len(bnode)
    inner = bnode >= 0
    b = np.where(inner, bnode, 0)
    node_kind = np.full(n, 3)
    node_kind[0] = 0
    node_kind[1:1 + m] = 1
    node_kind[1 + m:1 + 3 * m:2] = 2

    t = GameTree(g)
    player = np.where(inner, base.player[b], 0).astype(np.int8)
    player[0] = CHANCE
    player[1:1 + m] = o
    player[node_kind == 2] = TERMINAL
    t.player = player
    t.parent = parent
    t.action = action
    num = np.where(inner, base.num_children[b], 0)
    num[0] = m
    num[1:1 + m] = 2
    t.num_children = num
    first = np.full(n, -1, dtype=np.int64)
    kids_start = np.searchsorted(parent, np.arange(n), side="left")
    has = num > 0
    first[has] = kids_start[has]
    t.first_child = first
    depth = np.zeros(n, dtype=np.int64)
    depth[1:] = np.where(inner[1:], base.depth[b[1:]] - base.depth[fr[br[1:]]] + 2, 0)
    depth[1:1 + m] = 1
    depth[1 + m:1 + 3 * m] = 2
    t.depth = depth
    chance = np.ones(n)
    chance[1:1 + m] = g.root_probs
    sub = inner.copy()
    sub[1 + m:1 + 3 * m] = False  # follow copies hang below the opponent
    chance[sub] = base.chance[b[sub]]
    t.chance = chance
    util = np.zeros(n)
    util[inner] = base.utility[b[inner]] * g.scale
    term_ids = np.flatnonzero(node_kind == 2)
    util[term_ids] = g.terminate_utility[br[term_ids]]
    t.utility = util

    # infosets: label inner ones by base id, copies by (negative) opponent key group
    opp_aug = base.aug[fr, o]
    cp_group, _ = _first_rank(opp_aug)
    acting = player >= 0
    labels = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    labels[1:1 + m] = -1 - cp_group
    act_inner = acting & inner
    labels[act_inner] = base.infoset[b[act_inner]]
    ids, rep = _first_rank(labels[acting])
    infoset = np.full(n, -1, dtype=np.int64)
    infoset[acting] = ids
    t.infoset = infoset
    rep_nodes = np.flatnonzero(acting)[rep]
    t.iset_player = player[rep_nodes].astype(np.int64)
    t.iset_nact = num[rep_nodes].astype(np.int64)
    t.iset_offset = np.concatenate([[0], np.cumsum(t.iset_nact)]).astype(np.int64)
    keys = []
    for v in rep_nodes.tolist():
        if v <= m:
            keys.append(PREFIX + base.aug_keys[o][base.aug[fr[v - 1], o]])
        else:
            keys.append(base.iset_keys[base.infoset[bnode[v]]])
    t.iset_keys = keys
    t._iset_ids = {k: i for i, k in enumerate(keys)}
    edge = np.full(n, -1, dtype=np.int64)
    pl_par = np.zeros(n, dtype=np.int64)
    pl_par[1:] = player[parent[1:]]
    mask = np.zeros(n, dtype=bool)
    mask[1:] = pl_par[1:] >= 0
    edge[mask] = t.iset_offset[infoset[parent[mask]]] + action[mask]
    t.edge = edge

    nonterm = player != TERMINAL
    aug = np.full((n, 2), -1, dtype=np.int64)
    t.aug_keys = [None, None]
    t._aug_ids = [None, None]
    for p in (0, 1):
        lab = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
        lab[0] = -1
        cp_lab, _ = _first_rank(base.aug[fr, p])
        lab[1:1 + m] = -2 - cp_lab
        inn = nonterm & inner
        lab[inn] = base.aug[b[inn], p]
        ids, rep = _first_rank(lab[nonterm])
        aug[nonterm, p] = ids
        rep_nodes = np.flatnonzero(nonterm)[rep]
        ks = []
        for v in rep_nodes.tolist():
            if v == 0:
                ks.append(PREFIX)
            elif v <= m:
                ks.append(PREFIX + base.aug_keys[p][base.aug[fr[v - 1], p]])
            else:
                ks.append(base.aug_keys[p][base.aug[bnode[v], p]])
        t.aug_keys[p] = ks
        t._aug_ids[p] = {k: i for i, k in enumerate(ks)}
    t.aug = aug
    lab = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    lab[0] = -2
    lab[1:1 + m] = -1
    inn = nonterm & inner
    lab[inn] = base.public[b[inn]]
    pub = np.full(n, -1, dtype=np.int64)
    ids, rep = _first_rank(lab[nonterm])
    pub[nonterm] = ids
    t.public = pub
    rep_nodes = np.flatnonzero(nonterm)[rep]
    t.public_keys = [PREFIX if v == 0 else PREFIX + PREFIX if v <= m
                     else base.public_keys[base.public[bnode[v]]] for v in rep_nodes.tolist()]
    both = np.zeros(n, dtype=np.bool_)
    both[1:1 + m] = True
    t.both = both
    t.base_node = bnode
    t.branch = br
    _finish(t)
    return t
