"""Continual resolving with an outcome-sampling resolver (MCCR).

The resolving player keeps a partial strategy over the public states it has
already solved (KPS) and, for each public state where it may act next
(NPS), the data needed to build a gadget there: its own range over the
state's upper frontier and estimated opponent counterfactual values.
All bookkeeping is indexed by node ids of the compiled base tree.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .agent import Agent, Budget, MatchDesync
from .evaluation import node_cfvs
from .gadget import build_resolving_gadget, compile_gadget
from .game import Game
from .solver.cfr import CFRSolver
from .solver.fast import FastOutcomeSampling
from .solver.sampling import SamplingScheme
from .tree import GameTree, PublicTree, get_tree

log = logging.getLogger(__name__)


@dataclass
class ResolveData:
    """Data for resolving at one public state, aligned with its upper frontier."""

    frontier: np.ndarray  # base node ids
    range: np.ndarray  # resolver's own reach of each frontier node
    chance: np.ndarray  # chance reach of each frontier node
    cfv: dict  # opponent aug id -> estimated counterfactual value
    opp_reach: np.ndarray  # opponent reach estimate (epsilon root mode)
    low_confidence: int = 0  # opponent infosets the estimator never reached


@dataclass
class CRConfig:
    mode: str = "reset"  # keep | reset
    epsilon: float = 0.6
    targeting: float = 0.9
    root_mode: str = "epsilon"  # plain | epsilon
    gadget_epsilon: float = 1e-3
    cfv_mode: str = "weighted"  # weighted | arithmetic
    resolver: str = "mccfr"  # mccfr | cfr (exact: vanilla CFR and exact values)

    def __post_init__(self):
        if self.mode not in ("keep", "reset"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.resolver not in ("mccfr", "cfr"):
            raise ValueError(f"unknown resolver {self.resolver!r}")
        if self.root_mode not in ("plain", "epsilon"):
            raise ValueError(f"unknown gadget root mode {self.root_mode!r}")
        if self.cfv_mode not in ("weighted", "arithmetic"):
            raise ValueError(f"unknown CFV estimator {self.cfv_mode!r}")
        SamplingScheme(self.epsilon, self.targeting)


class _Index:
    """Per-tree lookups shared by every resolving state of one game."""

    def __init__(self, tree: GameTree):
        self.tree = tree
        self.public = PublicTree(tree)
        acting = np.flatnonzero(tree.infoset >= 0)
        self.iset_public = np.full(tree.num_isets, -1, dtype=np.int64)
        self.iset_public[tree.infoset[acting]] = tree.public[acting]
        self.isets_at: list[list[np.ndarray]] = [[], []]
        for p in (0, 1):
            mine = np.flatnonzero(tree.iset_player == p)
            order = mine[np.argsort(self.iset_public[mine], kind="stable")]
            counts = np.bincount(self.iset_public[mine], minlength=len(self.public))
            self.isets_at[p] = np.split(order, np.cumsum(counts)[:-1])

    def acts_in(self, state: int, player: int) -> bool:
        return player in self.public[state].actors


def get_index(tree: GameTree) -> _Index:
    idx = getattr(tree, "_cr_index", None)
    if idx is None:
        idx = tree._cr_index = _Index(tree)
    return idx


def compute_nps(public: PublicTree, kps, player: int) -> set[int]:
    """Public states where ``player`` acts for the first time after leaving ``kps``."""
    out: set[int] = set()
    stack = [public.root]
    while stack:
        s = stack.pop()
        st = public[s]
        if s not in kps and player in st.actors:
            out.add(s)
            continue
        stack.extend(st.children)
    return out


def _first_acting_below(public: PublicTree, state: int, player: int) -> set[int]:
    out: set[int] = set()
    stack = list(public[state].children)
    while stack:
        s = stack.pop()
        if player in public[s].actors:
            out.add(s)
        else:
            stack.extend(public[s].children)
    return out


def _flat_owner(tree: GameTree) -> np.ndarray:
    return np.repeat(np.arange(tree.num_isets), tree.iset_nact)


class _Solve:
    """One solver run over either the base tree or a compiled gadget."""

    def __init__(self, tree: GameTree, cfg: CRConfig, seed: int, gadget=None):
        self.tree = tree
        self.cfg = cfg
        self.gadget = gadget
        if cfg.resolver == "cfr":
            self.solver = CFRSolver(tree)
        else:
            self.solver = FastOutcomeSampling(tree, SamplingScheme(cfg.epsilon, 0.0), seed)

    def run(self, budget: Budget, target: np.ndarray | None) -> None:
        s = self.solver
        if isinstance(s, FastOutcomeSampling):
            if target is not None and len(target) and self.cfg.targeting > 0:
                s.set_target(target, self.cfg.targeting)
            else:
                s.set_target(None)
            budget.run(s)
        else:
            if budget.iterations is None:
                raise ValueError("the exact resolver needs an iteration budget")
            s.run(budget.iterations)

    @property
    def min_q(self) -> float:
        s = self.solver
        return s.min_q if isinstance(s, FastOutcomeSampling) else 1.0

    def average(self) -> np.ndarray:
        return self.solver.average_array()

    def opponent_values(self, opp: int) -> np.ndarray:
        """Per-node opponent CFV estimates (NaN where nothing was sampled)."""
        s = self.solver
        if isinstance(s, FastOutcomeSampling):
            return s.node_cfvs(opp, self.cfg.cfv_mode)
        return node_cfvs(self.tree, s.average_array(), opp)


class CRState:
    """Continual-resolving state of one player in one match."""

    def __init__(self, game: Game, player: int, cfg: CRConfig, seed: int):
        self.game = game
        self.tree = get_tree(game)
        self.index = get_index(self.tree)
        self.player = player
        self.opp = 1 - player
        self.cfg = cfg
        self.seed_seq = np.random.SeedSequence(seed)
        self.kps: set[int] = set()
        self.nps: set[int] = set()
        self.data: dict[int, ResolveData] = {}
        self.sigma = self.tree.strategy_array()
        self.known = np.zeros(self.tree.num_isets, dtype=np.bool_)
        self.root: _Solve | None = None
        self.carry: tuple | None = None  # keep mode: base-indexed regret, avg, in_mem
        self.min_q = 1.0
        self.resolves: list[dict] = []

    def _seed(self) -> int:
        return int(self.seed_seq.spawn(1)[0].generate_state(1)[0])

    def copy(self) -> "CRState":
        other = copy.copy(self)
        other.kps = set(self.kps)
        other.nps = set(self.nps)
        other.data = dict(self.data)
        other.resolves = list(self.resolves)
        other.seed_seq = copy.deepcopy(self.seed_seq)
        # sigma, root solver and carry are replaced (never mutated) on write
        return other

    # -- data for the next resolves -----------------------------------------

    def _make_data(self, states, solve: _Solve, to_solve: np.ndarray | None,
                   opp_reach_above: np.ndarray | None, ratio: np.ndarray | None) -> None:
        """Ranges from sigma, opponent values from ``solve`` (in gadget ids via ``to_solve``)."""
        t = self.tree
        reach = K.reach(t.player, t.parent, t.edge, t.chance, self.sigma)
        est = solve.opponent_values(self.opp)
        avg = solve.average()
        st = solve.tree
        if solve.gadget is not None:
            avg = avg.copy()
            lo = st.iset_offset[st.infoset[1:1 + len(solve.gadget.frontier)]]
            avg[lo] = 0.0  # follow with certainty: reach below the copies
            avg[lo + 1] = 1.0
        sreach = K.reach(st.player, st.parent, st.edge, st.chance, avg)
        for s in states:
            fr = self.index.public[s].frontier
            nodes = fr if to_solve is None else to_solve[fr]
            v = est[nodes]
            oreach = sreach[nodes, self.opp]
            if ratio is not None:
                br = st.branch[nodes]
                v = v * ratio[br]
                oreach = oreach * opp_reach_above[br]
            aug = t.aug[fr, self.opp]
            cfv: dict[int, float] = {}
            seen: dict[int, bool] = {}
            for a, x in zip(aug.tolist(), v.tolist()):
                if x == x:
                    cfv[a] = cfv.get(a, 0.0) + x
                    seen[a] = True
                else:
                    cfv.setdefault(a, 0.0)
                    seen.setdefault(a, False)
            low = sum(1 for ok in seen.values() if not ok)
            prev = self.data.get(s)
            if low and prev is not None:
                for a, ok in seen.items():
                    if not ok and a in prev.cfv:
                        cfv[a] = prev.cfv[a]
            self.data[s] = ResolveData(fr, reach[fr, self.player].copy(), reach[fr, 2].copy(),
                                       cfv, oreach.copy(), low)

    # -- resolving ------------------------------------------------------------

    def resolve(self, state: int, budget: Budget, target: np.ndarray | None = None) -> None:
        """Compute sigma on ``state`` (which must be in NPS) and refresh NPS and D."""
        if state not in self.nps:
            raise MatchDesync(f"public state {self.index.public[state].key!r} is not resolvable "
                              "from the current match state")
        t = self.tree
        first = not self.kps
        if first:
            solve = copy.copy(self.root)
            solve.solver = self.root.solver.copy() if hasattr(self.root.solver, "copy") \
                else copy.deepcopy(self.root.solver)
            solve.run(budget, target)
            to_solve = None
            ratio = above = None
            avg_base = solve.average()
            if self.cfg.mode == "keep" and self.cfg.resolver == "mccfr":
                s = solve.solver
                self.carry = (s.regret.copy(), s.avg.copy(), s.in_mem.copy())
        else:
            d = self.data[state]
            g = build_resolving_gadget(
                self.game, [t.history(v) for v in d.frontier], self.player, d.range,
                {t.aug_keys[self.opp][a]: v for a, v in d.cfv.items()},
                mode=self.cfg.root_mode, epsilon=self.cfg.gadget_epsilon,
                opponent_reach=d.opp_reach, chance=d.chance)
            gt = compile_gadget(g, t)
            solve = _Solve(gt, self.cfg, self._seed(), gadget=g)
            g2b = self._gadget_flat_map(gt)
            inner = g2b >= 0
            if self.carry is not None and self.cfg.mode == "keep":
                s = solve.solver
                s.regret[inner] = self.carry[0][g2b[inner]]
                s.avg[inner] = self.carry[1][g2b[inner]]
                gi = _flat_owner(gt)[inner]
                s.in_mem[gi] = self.carry[2][t.iset_offset.searchsorted(g2b[inner], "right") - 1]
            if target is not None:
                b2g = np.full(t.n, -1, dtype=np.int64)
                inn = np.flatnonzero(gt.base_node >= 0)
                b2g[gt.base_node[inn]] = inn
                target = b2g[target]
            solve.run(budget, target)
            avg_g = solve.average()
            avg_base = self.sigma.copy()
            avg_base[g2b[inner]] = avg_g[inner]
            if self.cfg.mode == "keep" and self.cfg.resolver == "mccfr":
                s = solve.solver
                reg, av, mem = (x.copy() for x in self.carry) if self.carry is not None else (
                    np.zeros(t.num_flat), np.zeros(t.num_flat), np.zeros(t.num_isets, np.bool_))
                reg[g2b[inner]] = s.regret[inner]
                av[g2b[inner]] = s.avg[inner]
                gi = _flat_owner(gt)[inner]
                mem[t.iset_offset.searchsorted(g2b[inner], "right") - 1] = s.in_mem[gi]
                self.carry = (reg, av, mem)
            b2g = np.full(t.n, -1, dtype=np.int64)
            inn = np.flatnonzero(gt.base_node >= 0)
            b2g[gt.base_node[inn]] = inn
            to_solve = b2g
            ratio = np.divide(g.plain_probs, g.root_probs, out=np.zeros(len(g.root_probs)),
                              where=g.root_probs > 0)
            above = d.opp_reach
        self.min_q = min(self.min_q, solve.min_q)
        mine = self.index.isets_at[self.player][state]
        sigma = self.sigma.copy()
        for s in mine.tolist():
            lo, hi = t.iset_offset[s], t.iset_offset[s + 1]
            sigma[lo:hi] = avg_base[lo:hi]
        self.sigma = sigma
        known = self.known.copy()
        known[mine] = True
        self.known = known
        self.kps.add(state)
        self.nps.discard(state)
        self.data.pop(state, None)
        new = _first_acting_below(self.index.public, state, self.player)
        self.nps |= new
        self._make_data(new, solve, to_solve, above, ratio)
        low = sum(self.data[s].low_confidence for s in new)
        self.resolves.append({"state": self.index.public[state].key, "budget": str(budget),
                              "min_q": solve.min_q, "next_states": len(new),
                              "low_confidence": low})
        if low:
            log.debug("resolve at %s: %d opponent infosets without value samples",
                      self.index.public[state].key, low)

    def _gadget_flat_map(self, gt: GameTree) -> np.ndarray:
        """Base flat index of each gadget flat index (-1 on the terminate/follow layer)."""
        t = self.tree
        acting = np.flatnonzero((gt.infoset >= 0) & (gt.base_node >= 0))
        g2b_iset = np.full(gt.num_isets, -1, dtype=np.int64)
        g2b_iset[gt.infoset[acting]] = t.infoset[gt.base_node[acting]]
        owner = _flat_owner(gt)
        local = np.arange(gt.num_flat) - gt.iset_offset[owner]
        b = g2b_iset[owner]
        return np.where(b >= 0, t.iset_offset[np.maximum(b, 0)] + local, -1)

    # -- playing ------------------------------------------------------------

    def policy(self, iset: int) -> np.ndarray:
        t = self.tree
        return self.sigma[t.iset_offset[iset]:t.iset_offset[iset + 1]]


def cr_init(game: Game, player: int, preplay: Budget, seed: int = 0,
            config: CRConfig | None = None) -> CRState:
    """Pre-play solve from the root and data for the first resolvable states."""
    cfg = config or CRConfig()
    st = CRState(game, player, cfg, seed)
    st.root = _Solve(st.tree, cfg, st._seed())
    st.root.run(preplay, None)
    st.min_q = st.root.min_q
    st.nps = compute_nps(st.index.public, st.kps, player)
    st._make_data(st.nps, st.root, None, None, None)
    return st


def cr_play(state: CRState, key: str, budget: Budget, rng: np.random.Generator,
            targeted: bool = True) -> tuple[int, CRState]:
    """Act at the player's infoset ``key``; resolves first when its public state is new."""
    t = state.tree
    try:
        s = t.iset_id(key)
    except KeyError:
        raise MatchDesync(f"unknown infoset {key!r}") from None
    if t.iset_player[s] != state.player:
        raise MatchDesync(f"infoset {key!r} belongs to the other player")
    ps = int(state.index.iset_public[s])
    if ps not in state.kps:
        target = t.members(s) if targeted else None
        state.resolve(ps, budget, target)
    p = state.policy(s)
    return int(rng.choice(len(p), p=p / p.sum())), state


class MCCRAgent(Agent):
    """Monte Carlo continual resolving agent."""

    name = "mccr"

    def __init__(self, config: CRConfig | None = None):
        self.cfg = config or CRConfig()

    def init(self, game: Game, player: int, seed: int, preplay: Budget | None = None) -> None:
        super().init(game, player, seed)
        ss = np.random.SeedSequence(seed)
        self.rng = np.random.default_rng(ss.spawn(1)[0])
        self.state = cr_init(game, player, preplay or Budget(iterations=0),
                             int(ss.generate_state(1)[0]), self.cfg)

    def act(self, key: str, num_actions: int, budget: Budget) -> int:
        a, self.state = cr_play(self.state, key, budget, self.rng)
        return a

    def fork(self) -> "MCCRAgent":
        other = super().fork()
        other.state = self.state.copy()
        return other

    def public_policy(self, state: int, budget: Budget) -> dict[str, np.ndarray]:
        st = self.state
        if state not in st.kps:
            st.resolve(state, budget, None)
        t = st.tree
        return {t.iset_keys[s]: st.policy(s).copy()
                for s in st.index.isets_at[self.player][state].tolist()}

    def config(self) -> dict:
        c = self.cfg
        return {"name": self.name, "mode": c.mode, "epsilon": c.epsilon, "targeting": c.targeting,
                "root_mode": c.root_mode, "gadget_epsilon": c.gadget_epsilon,
                "cfv_mode": c.cfv_mode, "resolver": c.resolver}
