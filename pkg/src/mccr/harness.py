"""Experiment driver: matches, tournaments, exploitability and CFV experiments."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .agent import Agent, Budget, MatchDesync
from .baselines import ISMCTSAgent, MCCFRAgent, OOSAgent, RandomAgent
from .domains import make_game
from .evaluation import exploitability, player_exploitability, tree_values
from .game import CHANCE, TERMINAL, Game
from .resolving import CRConfig, MCCRAgent, get_index
from .solver.fast import FastOutcomeSampling
from .solver.regret import average_strategy_arrays
from .solver.sampling import SamplingScheme
from .tree import get_tree


class ConfigError(ValueError):
    pass


# -- agent specs ----------------------------------------------------------------

def _parse_opts(parts: Sequence[str]) -> tuple[list[str], dict[str, str]]:
    flags, opts = [], {}
    for p in parts:
        if "=" in p:
            k, v = p.split("=", 1)
            opts[k.strip().lower()] = v.strip()
        elif p:
            flags.append(p.strip().lower())
    return flags, opts


def _num(opts: dict, key: str, default, kind=float):
    if key not in opts:
        return default
    try:
        return kind(opts.pop(key))
    except ValueError:
        raise ConfigError(f"option {key} must be a number") from None


def make_agent(spec: str) -> Agent:
    """Agent from strings like ``mccr:keep:eps=0.6``, ``oos:delta=0.9``,
    ``ismcts:rm:gamma=0.2``, ``ismcts:uct``, ``mccfr`` or ``rnd``."""
    name, *rest = spec.strip().split(":")
    name = name.lower()
    flags, opts = _parse_opts(rest)
    try:
        if name == "mccr":
            mode = "reset"
            resolver = "mccfr"
            root_mode = "epsilon"
            for f in flags:
                if f in ("keep", "reset"):
                    mode = f
                elif f in ("exact", "cfr"):
                    resolver = "cfr"
                elif f in ("plain", "epsilon"):
                    root_mode = f
                else:
                    raise ConfigError(f"unknown mccr flag {f!r}")
            cfg = CRConfig(mode=mode, resolver=resolver, root_mode=root_mode,
                           epsilon=_num(opts, "eps", 0.6),
                           targeting=_num(opts, "target", 0.9),
                           gadget_epsilon=_num(opts, "geps", 1e-3),
                           cfv_mode=opts.pop("cfv", "weighted"))
            agent = MCCRAgent(cfg)
        elif name == "mccfr":
            agent = MCCFRAgent(epsilon=_num(opts, "eps", 0.6))
        elif name in ("oos", "oos-ist"):
            agent = OOSAgent(epsilon=_num(opts, "eps", 0.6), targeting=_num(opts, "delta", 0.9))
        elif name == "ismcts":
            sel = flags[0] if flags else "uct"
            agent = ISMCTSAgent(sel, c=_num(opts, "c", None), gamma=_num(opts, "gamma", 0.2))
        elif name in ("rnd", "random"):
            agent = RandomAgent()
        else:
            raise ConfigError(f"unknown agent {name!r}")
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{spec}: {e}") from None
    if opts:
        raise ConfigError(f"{spec}: unknown options {sorted(opts)}")
    agent.spec = spec
    return agent


# -- matches ----------------------------------------------------------------

@dataclass
class MatchRecord:
    game: str
    agents: tuple
    seeds: tuple
    preplay: str
    move: str
    actions: list = field(default_factory=list)
    utility: float = 0.0  # player 0
    move_seconds: list = field(default_factory=list)

    def replay_utility(self) -> float:
        g = make_game(self.game)
        return g.utility(g.replay(self.actions))


def play_match(game: Game, agents: Sequence[Agent], seeds: Sequence[int], preplay: Budget,
               move: Budget, rng: np.random.Generator, specs=("", "")) -> MatchRecord:
    """One match; ``agents[p]`` plays seat p, ``rng`` drives chance."""
    for p in (0, 1):
        agents[p].init(game, p, seeds[p], preplay)
    rec = MatchRecord(game.name, tuple(specs), tuple(seeds), str(preplay), str(move))
    h = game.root()
    while game.player(h) != TERMINAL:
        p = game.player(h)
        k = game.num_actions(h)
        if p == CHANCE:
            probs = np.asarray(game.chance_probs(h), dtype=float)
            a = int(rng.choice(k, p=probs / probs.sum()))
        else:
            t0 = time.perf_counter()
            a = agents[p].act(game.infoset_key(h, p), k, move)
            rec.move_seconds.append(time.perf_counter() - t0)
            if not 0 <= a < k:
                raise MatchDesync(f"illegal action {a} at {game.history(h)}")
        rec.actions.append(a)
        h = game.child(h, a)
        if game.player(h) != TERMINAL:
            for q in (0, 1):
                agents[q].observe(game.infoset_key(h, q))
    rec.utility = float(game.utility(h))
    return rec


@dataclass
class PairResult:
    agent: str
    opponent: str
    matches: int
    mean: float  # normalized payoff of ``agent``
    half_width: float  # two standard errors
    wins: int
    losses: int
    aborted: int

    @property
    def interval(self) -> tuple[float, float]:
        return self.mean - self.half_width, self.mean + self.half_width


def mean_and_2se(x: Sequence[float]) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if len(x) < 2:
        return float(x.mean()) if len(x) else 0.0, float("inf")
    return float(x.mean()), float(2.0 * x.std(ddof=1) / math.sqrt(len(x)))


def two_proportion_interval(wins_a: int, n_a: int, wins_b: int, n_b: int,
                            z: float = 1.959963984540054) -> tuple[float, float]:
    """Wald interval for the difference of two win proportions (unpooled)."""
    pa, pb = wins_a / n_a, wins_b / n_b
    se = math.sqrt(pa * (1 - pa) / n_a + pb * (1 - pb) / n_b)
    d = pa - pb
    return d - z * se, d + z * se


def head_to_head(game: Game, spec_a: str, spec_b: str, matches: int, preplay: Budget,
                 move: Budget, seed: int = 0, records: list | None = None,
                 on_abort: Callable | None = None) -> PairResult:
    """``matches`` games between two agents, alternating seats."""
    ss = np.random.SeedSequence(seed)
    vals, wins, losses, aborted = [], 0, 0, 0
    scale = game.max_utility
    for m, child in enumerate(ss.spawn(matches)):
        s_a, s_b, s_c = (int(x) for x in child.generate_state(3))
        seat = m % 2
        agents = [None, None]
        agents[seat] = make_agent(spec_a)
        agents[1 - seat] = make_agent(spec_b)
        seeds = (s_a, s_b) if seat == 0 else (s_b, s_a)
        specs = (spec_a, spec_b) if seat == 0 else (spec_b, spec_a)
        try:
            rec = play_match(game, agents, seeds, preplay, move, np.random.default_rng(s_c), specs)
        except MatchDesync as e:
            aborted += 1
            if on_abort is not None:
                on_abort(m, e)
            continue
        u = rec.utility if seat == 0 else -rec.utility
        vals.append(u / scale)
        wins += u > 0
        losses += u < 0
        if records is not None:
            records.append(rec)
    mean, hw = mean_and_2se(vals)
    return PairResult(spec_a, spec_b, len(vals), mean, hw, wins, losses, aborted)


def run_tournament(game: Game, specs: Sequence[str], matches: int, preplay: Budget, move: Budget,
                   seed: int = 0, records: list | None = None) -> list[PairResult]:
    """Every unordered pair plays ``matches`` games with alternating seats."""
    if len(specs) < 2:
        raise ConfigError("a tournament needs at least two agents")
    out = []
    for i in range(len(specs)):
        for j in range(i + 1, len(specs)):
            out.append(head_to_head(game, specs[i], specs[j], matches, preplay, move,
                                    seed=seed * 7919 + i * 131 + j, records=records))
    return out


# -- expected strategy ---------------------------------------------------------

def combined_strategy(agent: Agent, game: Game, player: int, move: Budget) -> np.ndarray:
    """Flat strategy from running ``agent`` in every public state where it acts.

    The agent is forked at each state so every branch of the public tree sees
    exactly the history of resolves a real match along it would.
    """
    t = get_tree(game)
    pub = get_index(t).public
    flat = t.strategy_array()

    stack = [(pub.root, agent)]
    while stack:
        s, ag = stack.pop()
        if player in pub[s].actors:
            ag = ag.fork()
            for key, p in ag.public_policy(s, move).items():
                i = t.iset_id(key)
                flat[t.iset_offset[i]:t.iset_offset[i + 1]] = p
        for c in reversed(pub[s].children):
            stack.append((c, ag))
    return flat


def expected_strategy(game: Game, spec: str, preplay: Budget, move: Budget,
                      seeds: Sequence[int]) -> np.ndarray:
    """Seed-averaged combined profile: each seat comes from the agent in that seat."""
    t = get_tree(game)
    per_seed = []
    for seed in seeds:
        flat = t.strategy_array()
        for p in (0, 1):
            ag = make_agent(spec)
            ag.init(game, p, seed * 2 + p, preplay)
            f = combined_strategy(ag, game, p, move)
            own = np.repeat(t.iset_player, t.iset_nact) == p
            flat[own] = f[own]
        per_seed.append(flat)
    return average_strategy_arrays(t, per_seed)


def expected_strategy_exploitability(game: Game, spec: str, preplay: Budget, move: Budget,
                                     seeds: Sequence[int]) -> dict:
    t = get_tree(game)
    sig = expected_strategy(game, spec, preplay, move, seeds)
    return {"exploitability": exploitability(t, sig),
            "expl0": player_exploitability(game, sig, 0),
            "expl1": player_exploitability(game, sig, 1)}


# -- CFV experiments -----------------------------------------------------------

def second_action_infosets(game: Game, player: int = 0) -> np.ndarray:
    """Opponent augmented infosets in public states where ``player`` acts for the 2nd time.

    Returns opponent aug ids whose members lie in a public state containing a
    history in which ``player`` has made exactly one decision and acts again.
    """
    t = get_tree(game)
    opp = 1 - player
    second = (t.player == player) & (t.own_count[:, player] == 1)
    states = np.unique(t.public[second])
    mask = np.isin(t.public, states) & (t.aug[:, opp] >= 0)
    return np.unique(t.aug[mask, opp])


def cfv_stability_experiment(game: Game, T: int, checkpoints: Sequence[int], seeds: Sequence[int],
                             player: int = 0, epsilon: float = 0.6,
                             with_exploitability: bool = True) -> list[dict]:
    """Mean over J in Omega of |v~_t(J) - v~_T(J)| for each checkpoint, averaged over seeds."""
    t = get_tree(game)
    omega = second_action_infosets(game, player)
    opp = 1 - player
    aug = t.aug[:, opp]
    par = aug[np.maximum(t.parent, 0)]
    top = (aug >= 0) & ((np.arange(t.n) == 0) | (par != aug))
    cps = sorted(set(int(c) for c in checkpoints if c <= T) | {T})
    rows = {c: {"delta": [], "expl": []} for c in cps}
    for seed in seeds:
        s = FastOutcomeSampling(t, SamplingScheme(epsilon), seed)
        snaps = {}
        done = 0
        for c in cps:
            s.run(c - done)
            done = c
            v = np.nan_to_num(s.node_cfvs(opp, "weighted"))
            snaps[c] = np.bincount(aug[top], weights=v[top], minlength=len(t.aug_keys[opp]))[omega]
            if with_exploitability:
                rows[c]["expl"].append(exploitability(t, s.average_array()))
        final = snaps[T]
        for c in cps:
            rows[c]["delta"].append(float(np.mean(np.abs(snaps[c] - final))) if len(omega) else 0.0)
    out = []
    for c in cps:
        r = {"t": c, "delta": float(np.mean(rows[c]["delta"])), "infosets": int(len(omega))}
        if with_exploitability:
            r["exploitability"] = float(np.mean(rows[c]["expl"]))
        out.append(r)
    return out


def root_action_values(game: Game, strategy, player: int = 0) -> np.ndarray:
    """Exact v_player(root, a) under ``strategy`` for each root action."""
    t = get_tree(game)
    u = tree_values(t, strategy)
    sign = 1.0 if player == 0 else -1.0
    kids = t.children(0)
    return sign * u[kids.start:kids.stop]


def cfv_averaging_comparison(game: Game, T: int, checkpoints: Sequence[int], seeds: Sequence[int],
                             reference: np.ndarray | None = None, epsilon: float = 0.6) -> list[dict]:
    """Error of arithmetic and weighted estimates of the root action values.

    ``reference`` defaults to the equilibrium action values from the LP
    oracle. The error is the mean absolute difference over root actions.
    """
    from .lp import solve_lp

    t = get_tree(game)
    if t.player[0] != 0:
        raise ConfigError("root action values need player 0 acting at the root")
    if reference is None:
        reference = root_action_values(game, solve_lp(t).strategy, 0)
    kids = np.arange(t.first_child[0], t.first_child[0] + t.num_children[0])
    cps = sorted(set(int(c) for c in checkpoints if c <= T) | {T})
    out = []
    errs = {c: {"arithmetic": [], "weighted": []} for c in cps}
    for seed in seeds:
        s = FastOutcomeSampling(t, SamplingScheme(epsilon, incremental=False), seed)
        done = 0
        for c in cps:
            s.run(c - done)
            done = c
            for mode in ("arithmetic", "weighted"):
                v = np.nan_to_num(s.node_cfvs(0, mode)[kids])
                errs[c][mode].append(float(np.mean(np.abs(v - reference))))
    for c in cps:
        out.append({"t": c,
                    "arithmetic": float(np.median(errs[c]["arithmetic"])),
                    "weighted": float(np.median(errs[c]["weighted"])),
                    "seeds": len(seeds)})
    return out


def explore_sweep(game: Game, mode: str, epsilons: Sequence[float], preplay: Budget, move: Budget,
                  seeds: Sequence[int]) -> list[dict]:
    """Expected-strategy exploitability of MCCR across exploration rates."""
    out = []
    for eps in epsilons:
        r = expected_strategy_exploitability(game, f"mccr:{mode}:eps={eps}", preplay, move, seeds)
        out.append({"epsilon": eps, **r})
    return out


# -- interactive play ------------------------------------------------------------

def interactive_match(game: Game, human: int, spec: str, preplay: Budget, move: Budget,
                      seed: int = 0, input_fn=input, print_fn=print) -> MatchRecord | None:
    """Play against an agent on the terminal; returns None when input ends."""
    agent = make_agent(spec)
    agent.init(game, 1 - human, seed, preplay)
    rng = np.random.default_rng(seed + 1)
    rec = MatchRecord(game.name, ("human", spec) if human == 0 else (spec, "human"),
                      (seed, seed), str(preplay), str(move))
    h = game.root()
    while game.player(h) != TERMINAL:
        p = game.player(h)
        k = game.num_actions(h)
        if p == CHANCE:
            probs = np.asarray(game.chance_probs(h), dtype=float)
            a = int(rng.choice(k, p=probs / probs.sum()))
        elif p == human:
            print_fn(f"your observations: {game.infoset_key(h, human)}")
            labels = [game.action_label(h, b) for b in range(k)]
            print_fn("actions: " + "  ".join(f"[{b}] {lab}" for b, lab in enumerate(labels)))
            while True:
                try:
                    raw = input_fn("> ")
                except EOFError:
                    print_fn("input closed, match abandoned")
                    return None
                try:
                    a = int(raw.strip())
                except ValueError:
                    a = -1
                if 0 <= a < k:
                    break
                print_fn(f"enter a number between 0 and {k - 1}")
        else:
            t0 = time.perf_counter()
            a = agent.act(game.infoset_key(h, p), k, move)
            rec.move_seconds.append(time.perf_counter() - t0)
            print_fn(f"agent plays {game.action_label(h, a)}")
        rec.actions.append(a)
        h = game.child(h, a)
        if game.player(h) != TERMINAL:
            agent.observe(game.infoset_key(h, 1 - human))
    rec.utility = float(game.utility(h))
    mine = rec.utility if human == 0 else -rec.utility
    print_fn(f"game over, your payoff: {mine:g}")
    return rec


# -- output -------------------------------------------------------------------

def write_csv(path, rows: Sequence[dict], meta: dict) -> None:
    """CSV of ``rows`` plus a JSON sidecar with the resolved configuration."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fields: list[str] = []
    for r in rows:
        for k in r:
            if k not in fields:
                fields.append(k)
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow(r)
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, indent=2, default=str))
