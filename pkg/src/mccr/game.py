"""Core extensive-form game abstraction.

Games are immutable descriptions; histories are small state objects produced
by the game and never mutated. Players are indexed 0 and 1, chance and
terminal nodes use the sentinel values below. Utilities are always reported
for player 0 (the game is zero-sum, so player 1 receives the negation).
"""

from __future__ import annotations

import abc
from typing import Iterator, Sequence

import numpy as np

CHANCE = -1
TERMINAL = -2


class Game(abc.ABC):
    """Two-player zero-sum game with perfect recall.

    Subclasses describe histories through the methods below. Infoset keys are
    defined for both players at every non-terminal history (augmented
    infosets); at a history where player ``i`` acts the key identifies the
    ordinary infoset of ``i``. ``public_key`` must be a function of either
    player's key (closure under the indistinguishability relation).
    """

    name: str = "game"

    @abc.abstractmethod
    def root(self):
        ...

    @abc.abstractmethod
    def player(self, h) -> int:
        ...

    @abc.abstractmethod
    def num_actions(self, h) -> int:
        ...

    @abc.abstractmethod
    def child(self, h, a: int):
        ...

    @abc.abstractmethod
    def utility(self, h) -> float:
        """Utility of player 0 at a terminal history."""

    def chance_probs(self, h) -> Sequence[float]:
        raise NotImplementedError(f"{self.name} has no chance nodes")

    @abc.abstractmethod
    def infoset_key(self, h, player: int) -> str:
        ...

    @abc.abstractmethod
    def public_key(self, h) -> str:
        ...

    @property
    @abc.abstractmethod
    def max_utility(self) -> float:
        """Largest absolute terminal utility."""

    def action_label(self, h, a: int) -> str:
        return str(a)

    def history(self, h) -> tuple:
        return h.actions

    def both_branch(self, h) -> bool:
        """True if samplers may evaluate every child of ``h`` exactly.

        Only the resolving gadget uses this for its terminate/follow choice.
        """
        return False

    def is_terminal(self, h) -> bool:
        return self.player(h) == TERMINAL

    def replay(self, actions: Sequence[int]):
        h = self.root()
        for a in actions:
            h = self.child(h, a)
        return h

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


def utility_for(game: Game, h, player: int) -> float:
    u = game.utility(h)
    return u if player == 0 else -u


def walk(game: Game, h=None) -> Iterator:
    """Depth-first iteration over all histories below ``h`` (inclusive)."""
    stack = [game.root() if h is None else h]
    while stack:
        s = stack.pop()
        yield s
        if game.player(s) != TERMINAL:
            for a in range(game.num_actions(s) - 1, -1, -1):
                stack.append(game.child(s, a))


def action_probs(game: Game, strategy, h) -> np.ndarray:
    """Distribution over actions at a non-terminal history."""
    p = game.player(h)
    if p == CHANCE:
        return np.asarray(game.chance_probs(h), dtype=float)
    return strategy.probs(game.infoset_key(h, p), game.num_actions(h))


def reach_probabilities(game: Game, strategy, actions: Sequence[int]) -> tuple[float, float, float]:
    """Return (pi_0, pi_1, pi_chance) of the history given by ``actions``."""
    reach = [1.0, 1.0, 1.0]
    h = game.root()
    for a in actions:
        p = game.player(h)
        reach[p if p >= 0 else 2] *= float(action_probs(game, strategy, h)[a])
        h = game.child(h, a)
    return reach[0], reach[1], reach[2]


def expected_utility(game: Game, strategy, h=None) -> float:
    """Player-0 expected utility of the subtree at ``h`` by plain recursion."""
    if h is None:
        h = game.root()
    if game.player(h) == TERMINAL:
        return game.utility(h)
    probs = action_probs(game, strategy, h)
    total = 0.0
    for a, pa in enumerate(probs):
        if pa > 0.0:
            total += pa * expected_utility(game, strategy, game.child(h, a))
    return total


def sample_terminal(game: Game, strategy, rng: np.random.Generator, h=None):
    if h is None:
        h = game.root()
    while game.player(h) != TERMINAL:
        probs = action_probs(game, strategy, h)
        h = game.child(h, int(rng.choice(len(probs), p=probs / probs.sum())))
    return h
