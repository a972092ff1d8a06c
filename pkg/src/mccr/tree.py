"""Compiled array representation of enumerable games and their public trees."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .game import CHANCE, TERMINAL, Game
from .strategy import BehavioralStrategy


class TreeTooLarge(RuntimeError):
    pass


class ValidationError(ValueError):
    pass


class _Interner:
    def __init__(self):
        self.ids: dict[str, int] = {}
        self.keys: list[str] = []

    def __call__(self, key: str) -> int:
        i = self.ids.get(key)
        if i is None:
            i = self.ids[key] = len(self.keys)
            self.keys.append(key)
        return i


class GameTree:
    """Breadth-first array layout of a full game tree.

    Children of a node are contiguous and appear after their parent, so a
    forward loop over node ids visits parents first. Acting infosets are
    numbered globally (both players); their action probabilities live in a
    flat vector indexed through ``iset_offset``.
    """

    def __init__(self, game: Game):
        self.game = game

    # built by build_tree
    player: np.ndarray
    parent: np.ndarray
    action: np.ndarray
    first_child: np.ndarray
    num_children: np.ndarray
    depth: np.ndarray
    chance: np.ndarray  # probability of the edge into the node when the parent is chance, else 1
    utility: np.ndarray  # player-0 utility at terminals
    infoset: np.ndarray  # acting infoset id or -1
    edge: np.ndarray  # flat strategy index of the edge into the node, -1 otherwise
    aug: np.ndarray  # (n, 2) augmented infoset ids, -1 at terminals
    public: np.ndarray  # public state id, -1 at terminals
    both: np.ndarray  # both-branch flag
    iset_keys: list
    iset_player: np.ndarray
    iset_nact: np.ndarray
    iset_offset: np.ndarray
    iset_own_depth: np.ndarray
    aug_keys: list
    public_keys: list

    @property
    def n(self) -> int:
        return len(self.player)

    @property
    def num_flat(self) -> int:
        return int(self.iset_offset[-1])

    @property
    def num_isets(self) -> int:
        return len(self.iset_keys)

    def history(self, node: int) -> tuple:
        out = []
        while node > 0:
            out.append(int(self.action[node]))
            node = int(self.parent[node])
        return tuple(reversed(out))

    def node_of(self, actions: Sequence[int]) -> int:
        node = 0
        for a in actions:
            if a < 0 or a >= self.num_children[node]:
                raise KeyError(f"no history {tuple(actions)}")
            node = int(self.first_child[node]) + a
        return node

    def state(self, node: int):
        return self.game.replay(self.history(node))

    def children(self, node: int) -> range:
        f = int(self.first_child[node])
        return range(f, f + int(self.num_children[node]))

    def iset_id(self, key: str) -> int:
        return self._iset_ids[key]

    def aug_id(self, player: int, key: str) -> int:
        return self._aug_ids[player][key]

    def is_terminal(self, node: int) -> bool:
        return self.player[node] == TERMINAL

    def strategy_array(self, strategy: BehavioralStrategy | None = None) -> np.ndarray:
        """Flat action probabilities for every acting infoset (uniform default)."""
        flat = np.repeat(1.0 / np.maximum(self.iset_nact, 1), self.iset_nact)
        if strategy is not None:
            for i, key in enumerate(self.iset_keys):
                p = strategy.table.get(key)
                if p is not None:
                    lo = self.iset_offset[i]
                    if len(p) != self.iset_nact[i]:
                        raise ValueError(f"infoset {key!r}: wrong action count")
                    flat[lo:lo + len(p)] = p
        return flat

    def to_strategy(self, flat: np.ndarray, players: Sequence[int] = (0, 1)) -> BehavioralStrategy:
        out = BehavioralStrategy()
        for i, key in enumerate(self.iset_keys):
            if self.iset_player[i] in players:
                lo, hi = self.iset_offset[i], self.iset_offset[i + 1]
                out.table[key] = np.array(flat[lo:hi], dtype=float)
        return out

    def members(self, iset: int) -> np.ndarray:
        if self._members is None:
            order = np.argsort(self.infoset, kind="stable")
            counts = np.bincount(self.infoset[self.infoset >= 0], minlength=self.num_isets)
            start = int(np.sum(self.infoset < 0))
            bounds = np.concatenate([[0], np.cumsum(counts)]) + start
            self._members = (order, bounds)
        order, bounds = self._members
        return order[bounds[iset]:bounds[iset + 1]]

    _members = None


def build_tree(game: Game, max_nodes: int | None = 5_000_000) -> GameTree:
    """Enumerate ``game`` breadth-first into a GameTree."""
    states = [game.root()]
    player, parent, action, first_child, num_children = [], [-1], [0], [], []
    depth, chance, utility, infoset, edge, both = [0], [1.0], [], [], [-1], []
    aug0, aug1, public = [], [], []
    iset = _Interner()
    augs = (_Interner(), _Interner())
    pub = _Interner()
    iset_player: list[int] = []
    iset_nact: list[int] = []
    offsets = [0]
    i = 0
    while i < len(states):
        h = states[i]
        states[i] = None
        p = game.player(h)
        player.append(p)
        if p == TERMINAL:
            first_child.append(-1)
            num_children.append(0)
            utility.append(float(game.utility(h)))
            infoset.append(-1)
            aug0.append(-1)
            aug1.append(-1)
            public.append(-1)
            both.append(False)
            i += 1
            continue
        k = game.num_actions(h)
        utility.append(0.0)
        k0, k1 = game.infoset_key(h, 0), game.infoset_key(h, 1)
        aug0.append(augs[0](k0))
        aug1.append(augs[1](k1))
        public.append(pub(game.public_key(h)))
        both.append(bool(game.both_branch(h)))
        first_child.append(len(states))
        num_children.append(k)
        if p == CHANCE:
            infoset.append(-1)
            probs = game.chance_probs(h)
            if len(probs) != k or abs(sum(probs) - 1.0) > 1e-9:
                raise ValidationError(f"bad chance distribution at {game.history(h)}")
            chance.extend(float(x) for x in probs)
            edge.extend([-1] * k)
        else:
            key = k0 if p == 0 else k1
            before = len(iset.keys)
            s = iset(key)
            if s == before:
                iset_player.append(p)
                iset_nact.append(k)
                offsets.append(offsets[-1] + k)
            elif iset_nact[s] != k or iset_player[s] != p:
                raise ValidationError(
                    f"infoset {key!r} has inconsistent actions at {game.history(h)}")
            infoset.append(s)
            chance.extend([1.0] * k)
            edge.extend(range(offsets[s], offsets[s] + k))
        d = depth[i] + 1
        for a in range(k):
            states.append(game.child(h, a))
            parent.append(i)
            action.append(a)
            depth.append(d)
        if max_nodes is not None and len(states) > max_nodes:
            raise TreeTooLarge(f"{game.name} exceeds {max_nodes} nodes")
        i += 1

    t = GameTree(game)
    t.player = np.array(player, dtype=np.int8)
    t.parent = np.array(parent, dtype=np.int64)
    t.action = np.array(action, dtype=np.int64)
    t.first_child = np.array(first_child, dtype=np.int64)
    t.num_children = np.array(num_children, dtype=np.int64)
    t.depth = np.array(depth, dtype=np.int64)
    t.chance = np.array(chance, dtype=np.float64)
    t.utility = np.array(utility, dtype=np.float64)
    t.infoset = np.array(infoset, dtype=np.int64)
    t.edge = np.array(edge, dtype=np.int64)
    t.aug = np.stack([np.array(aug0, dtype=np.int64), np.array(aug1, dtype=np.int64)], axis=1)
    t.public = np.array(public, dtype=np.int64)
    t.both = np.array(both, dtype=np.bool_)
    t.iset_keys = iset.keys
    t._iset_ids = iset.ids
    t.iset_player = np.array(iset_player, dtype=np.int64)
    t.iset_nact = np.array(iset_nact, dtype=np.int64)
    t.iset_offset = np.array(offsets, dtype=np.int64)
    t.aug_keys = [augs[0].keys, augs[1].keys]
    t._aug_ids = [augs[0].ids, augs[1].ids]
    t.public_keys = pub.keys
    _finish(t)
    return t


def _finish(t: GameTree) -> None:
    """Derived arrays shared by compiled trees from any source."""
    n = t.n
    own = np.zeros((n, 2), dtype=np.int64)
    bounds = np.flatnonzero(np.diff(t.depth)) + 1
    levels = np.split(np.arange(1, n), bounds - 1) if n > 1 else []
    for lv in levels:
        if not len(lv):
            continue
        par = t.parent[lv]
        own[lv] = own[par]
        pl = t.player[par]
        for p in (0, 1):
            own[lv[pl == p], p] += 1
    t.own_count = own
    depth = np.zeros(t.num_isets, dtype=np.int64)
    acting = t.infoset >= 0
    depth[t.infoset[acting]] = own[acting, t.player[acting]]
    t.iset_own_depth = depth
    t._members = None


_TREES: dict[int, GameTree] = {}


def get_tree(game: Game, max_nodes: int | None = 5_000_000) -> GameTree:
    """Compiled tree of ``game``, built once per game instance."""
    t = getattr(game, "_compiled_tree", None)
    if t is None:
        t = build_tree(game, max_nodes)
        try:
            object.__setattr__(game, "_compiled_tree", t)
        except AttributeError:
            pass
    return t


@dataclass
class TreeCounts:
    histories: int
    chance_nodes: int
    terminals: int
    infosets: tuple
    public_states: int


def count_tree(game: Game) -> TreeCounts:
    """Exact sizes by traversal; ``histories`` counts player decision nodes."""
    hist = chance = term = 0
    isets: tuple[set, set] = (set(), set())
    publics: set = set()
    stack = [game.root()]
    while stack:
        h = stack.pop()
        p = game.player(h)
        if p == TERMINAL:
            term += 1
            continue
        publics.add(game.public_key(h))
        if p == CHANCE:
            chance += 1
        else:
            hist += 1
            isets[p].add(game.infoset_key(h, p))
        for a in range(game.num_actions(h)):
            stack.append(game.child(h, a))
    return TreeCounts(hist, chance, term, (len(isets[0]), len(isets[1])), len(publics))


@dataclass
class PublicState:
    id: int
    key: str
    members: np.ndarray
    frontier: np.ndarray
    parent: int
    children: list = field(default_factory=list)
    actors: frozenset = frozenset()

    def top_infosets(self, tree: GameTree, player: int) -> dict[int, np.ndarray]:
        """Augmented infosets of ``player`` whose upper frontier lies in the frontier.

        Returns aug id -> frontier node ids.
        """
        fr = set(self.frontier.tolist())
        groups: dict[int, list[int]] = {}
        for v in self.members.tolist():
            a = int(tree.aug[v, player])
            p = tree.parent[v]
            if v == 0 or tree.aug[p, player] != a:
                groups.setdefault(a, []).append(v)
        return {a: np.array(vs) for a, vs in groups.items() if all(v in fr for v in vs)}


class PublicTree:
    def __init__(self, tree: GameTree):
        self.tree = tree
        pub = tree.public
        nonterm = np.flatnonzero(pub >= 0)
        order = nonterm[np.argsort(pub[nonterm], kind="stable")]
        counts = np.bincount(pub[nonterm], minlength=len(tree.public_keys))
        bounds = np.concatenate([[0], np.cumsum(counts)])
        self.states: list[PublicState] = []
        par_pub = np.where(np.arange(tree.n) > 0, pub[np.maximum(tree.parent, 0)], -1)
        for s, key in enumerate(tree.public_keys):
            members = order[bounds[s]:bounds[s + 1]]
            top = members[(members == 0) | (par_pub[members] != s)]
            parents = set(par_pub[top].tolist())
            if len(parents) > 1:
                a, b = [int(v) for v in top[:2]]
                raise ValidationError(
                    f"public state {key!r} has several parent states; histories "
                    f"{tree.history(a)} and {tree.history(b)}")
            actors = frozenset(int(x) for x in np.unique(tree.player[members]) if x >= 0)
            self.states.append(PublicState(s, key, members, np.sort(top), parents.pop(),
                                           actors=actors))
        for st in self.states:
            if st.parent >= 0:
                self.states[st.parent].children.append(st.id)
        self.root = int(pub[0])

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, s: int) -> PublicState:
        return self.states[s]

    def by_key(self, key: str) -> PublicState:
        return self.states[self.tree.public_keys.index(key)]


def build_public_tree(game_or_tree) -> PublicTree:
    tree = game_or_tree if isinstance(game_or_tree, GameTree) else get_tree(game_or_tree)
    check_public_closure(tree)
    return PublicTree(tree)


def check_public_closure(tree: GameTree) -> None:
    """Histories sharing either player's key must share the public key."""
    for p in (0, 1):
        mask = tree.aug[:, p] >= 0
        nodes = np.flatnonzero(mask)
        seen: dict[int, int] = {}
        for v, a, s in zip(nodes.tolist(), tree.aug[nodes, p].tolist(), tree.public[nodes].tolist()):
            w = seen.setdefault(a, v)
            if tree.public[w] != s:
                raise ValidationError(
                    f"public keys not closed under player {p}'s infosets: histories "
                    f"{tree.history(w)} and {tree.history(v)}")


def validate_tree(tree: GameTree) -> None:
    """Perfect recall, action consistency, chance normalization and public closure."""
    n = tree.n
    seq = np.full((n, 2), -1, dtype=np.int64)
    for v in range(1, n):
        p = tree.parent[v]
        seq[v] = seq[p]
        if tree.player[p] >= 0:
            seq[v, tree.player[p]] = tree.edge[v]
    for p in (0, 1):
        nodes = np.flatnonzero(tree.aug[:, p] >= 0)
        first: dict[int, int] = {}
        for v in nodes.tolist():
            a = int(tree.aug[v, p])
            w = first.setdefault(a, v)
            if seq[w, p] != seq[v, p] or (tree.player[w] == p) != (tree.player[v] == p):
                raise ValidationError(
                    f"perfect recall violated for player {p}: histories "
                    f"{tree.history(w)} and {tree.history(v)}")
    for v in np.flatnonzero(tree.player == CHANCE).tolist():
        s = tree.chance[tree.children(v)].sum()
        if abs(s - 1.0) > 1e-9:
            raise ValidationError(f"chance probabilities at {tree.history(v)} sum to {s}")
    check_public_closure(tree)
    PublicTree(tree)


def validate_game(game: Game, max_nodes: int | None = 5_000_000) -> GameTree:
    tree = get_tree(game, max_nodes)
    validate_tree(tree)
    return tree
