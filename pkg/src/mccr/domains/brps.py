"""Biased rock-paper-scissors played as a two-level tree."""

from __future__ import annotations

from ..game import TERMINAL, Game

# Row player's payoff, rows/columns ordered rock, paper, scissors.
PAYOFF = (
    (0.0, -1.0, 100.0),
    (1.0, 0.0, -1.0),
    (-1.0, 1.0, 0.0),
)
LABELS = ("R", "P", "S")


class _State:
    __slots__ = ("actions",)

    def __init__(self, actions: tuple):
        self.actions = actions


class BiasedRPS(Game):
    """Player 0 picks first; player 1 picks without seeing the choice."""

    name = "B-RPS"

    def root(self):
        return _State(())

    def player(self, h) -> int:
        return (0, 1, TERMINAL)[len(h.actions)]

    def num_actions(self, h) -> int:
        return 3

    def child(self, h, a: int):
        return _State(h.actions + (a,))

    def utility(self, h) -> float:
        a, b = h.actions
        return PAYOFF[a][b]

    def infoset_key(self, h, player: int) -> str:
        depth = len(h.actions)
        own = LABELS[h.actions[0]] if player == 0 and depth == 1 else ""
        return f"{own}/{depth}"

    def public_key(self, h) -> str:
        return str(len(h.actions))

    @property
    def max_utility(self) -> float:
        return 100.0

    def action_label(self, h, a: int) -> str:
        return LABELS[a]
