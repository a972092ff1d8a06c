"""Exact evaluation on compiled trees: values, CFVs, best responses, exploitability."""

from __future__ import annotations

import json
import threading
from pathlib import Path

import numpy as np

from . import _kernels as K
from .game import Game
from .strategy import BehavioralStrategy
from .tree import GameTree, get_tree


def _tree(game_or_tree) -> GameTree:
    return game_or_tree if isinstance(game_or_tree, GameTree) else get_tree(game_or_tree)


def _flat(tree: GameTree, strategy) -> np.ndarray:
    if isinstance(strategy, np.ndarray):
        return strategy
    return tree.strategy_array(strategy)


def tree_reach(tree: GameTree, strategy) -> np.ndarray:
    """(n, 3) array of per-actor reach probabilities (player 0, player 1, chance)."""
    return K.reach(tree.player, tree.parent, tree.edge, tree.chance, _flat(tree, strategy))


def tree_values(tree: GameTree, strategy) -> np.ndarray:
    """Player-0 expected utility of every node."""
    return K.node_values(tree.player, tree.parent, tree.edge, tree.chance, tree.utility,
                         _flat(tree, strategy))


def game_utility(game_or_tree, strategy) -> float:
    return float(tree_values(_tree(game_or_tree), strategy)[0])


def frontier_nodes(tree: GameTree, player: int, aug: int) -> np.ndarray:
    """Upper frontier of an augmented infoset: members whose parent is outside it."""
    members = np.flatnonzero(tree.aug[:, player] == aug)
    keep = [v for v in members.tolist() if v == 0 or tree.aug[tree.parent[v], player] != aug]
    return np.array(keep, dtype=np.int64)


def node_cfvs(tree: GameTree, strategy, player: int) -> np.ndarray:
    """v_i(h) = pi_{-i}(h) u_i(h) for every node."""
    flat = _flat(tree, strategy)
    r = tree_reach(tree, flat)
    u = tree_values(tree, flat)
    sign = 1.0 if player == 0 else -1.0
    return r[:, 1 - player] * r[:, 2] * sign * u


def exact_cfv(game_or_tree, strategy, key: str, player: int) -> float:
    """Counterfactual value of an augmented infoset, summed over its upper frontier."""
    tree = _tree(game_or_tree)
    nodes = frontier_nodes(tree, player, tree.aug_id(player, key))
    return float(node_cfvs(tree, strategy, player)[nodes].sum())


def exact_cfv_action(game_or_tree, strategy, key: str, action: int, player: int) -> float:
    tree = _tree(game_or_tree)
    flat = _flat(tree, strategy)
    nodes = frontier_nodes(tree, player, tree.aug_id(player, key))
    r = tree_reach(tree, flat)
    u = tree_values(tree, flat)
    sign = 1.0 if player == 0 else -1.0
    kids = tree.first_child[nodes] + action
    return float(np.sum(r[nodes, 1 - player] * r[nodes, 2] * sign * u[kids]))


def infoset_cfvs(tree: GameTree, strategy, player: int) -> np.ndarray:
    """CFV of every augmented infoset of ``player`` (indexed by aug id)."""
    v = node_cfvs(tree, strategy, player)
    aug = tree.aug[:, player]
    par = aug[np.maximum(tree.parent, 0)]
    top = (aug >= 0) & ((np.arange(tree.n) == 0) | (par != aug))
    return np.bincount(aug[top], weights=v[top], minlength=len(tree.aug_keys[player]))


def best_response_array(tree: GameTree, strategy, responder: int) -> tuple[np.ndarray, float]:
    flat = _flat(tree, strategy)
    return K.best_response(tree.player, tree.parent, tree.first_child, tree.num_children,
                           tree.edge, tree.chance, tree.utility, tree.infoset, tree.iset_player,
                           tree.iset_offset, tree.iset_own_depth, flat, responder)


def counterfactual_best_response(game_or_tree, strategy, responder: int) -> BehavioralStrategy:
    """CBR of ``responder`` against the other player's part of ``strategy``."""
    tree = _tree(game_or_tree)
    br, _ = best_response_array(tree, strategy, responder)
    return tree.to_strategy(br, players=(responder,))


def best_response_value(game_or_tree, strategy, responder: int) -> float:
    return float(best_response_array(_tree(game_or_tree), strategy, responder)[1])


def exploitability(game_or_tree, strategy) -> float:
    """Mean of both players' best-response gaps; zero exactly at equilibrium."""
    tree = _tree(game_or_tree)
    flat = _flat(tree, strategy)
    return 0.5 * (best_response_value(tree, flat, 0) + best_response_value(tree, flat, 1))


def player_exploitability(game: Game, strategy, player: int, value: float | None = None) -> float:
    """expl_i: game value of ``player`` minus what a best-responding opponent leaves it."""
    tree = get_tree(game)
    if value is None:
        value = game_value(game)
    v0 = value if player == 0 else -value
    return float(v0 + best_response_value(tree, _flat(tree, strategy), 1 - player))


# -- game values ---------------------------------------------------------------

_CACHE_FILE = Path(__file__).with_name("game_values.json")
_lock = threading.Lock()
_values: dict[str, float] | None = None


def _load_values() -> dict[str, float]:
    global _values
    if _values is None:
        _values = json.loads(_CACHE_FILE.read_text()) if _CACHE_FILE.exists() else {}
    return _values


def game_value(game: Game, compute: bool = True) -> float:
    """Player-0 equilibrium value, from the bundled table or an LP solve."""
    with _lock:
        table = _load_values()
        if game.name in table:
            return table[game.name]
    if not compute:
        raise KeyError(game.name)
    from .lp import solve_lp

    v = solve_lp(get_tree(game)).value
    with _lock:
        _load_values()[game.name] = v
    return v
