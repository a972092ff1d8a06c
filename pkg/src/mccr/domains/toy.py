"""Small games used for hand-checkable examples."""

from __future__ import annotations

import numpy as np

from ..game import CHANCE, TERMINAL, Game


class _State:
    __slots__ = ("actions",)

    def __init__(self, actions: tuple):
        self.actions = actions


class ChainGame(Game):
    """Four alternating decisions; going left ends the game with payoff 0.

    Going right four times reaches the only rewarding terminal (payoff 1
    for player 0). Perfect information.
    """

    name = "CHAIN"
    depth = 4

    def root(self):
        return _State(())

    def player(self, h) -> int:
        if (h.actions and h.actions[-1] == 0) or len(h.actions) == self.depth:
            return TERMINAL
        return len(h.actions) % 2

    def num_actions(self, h) -> int:
        return 2

    def child(self, h, a: int):
        return _State(h.actions + (a,))

    def utility(self, h) -> float:
        return 1.0 if len(h.actions) == self.depth and h.actions[-1] == 1 else 0.0

    def infoset_key(self, h, player: int) -> str:
        return self.public_key(h)

    def public_key(self, h) -> str:
        return "".join("LR"[a] for a in h.actions)

    @property
    def max_utility(self) -> float:
        return 1.0

    def action_label(self, h, a: int) -> str:
        return "LR"[a]


class RandomGame(Game):
    """Chance, then player 0, then player 1, with random payoffs.

    Player 0 sees the chance outcome; player 1 sees only the parity of
    player 0's action. Payoffs and chance probabilities come from ``seed``.
    """

    def __init__(self, seed: int = 0, chance: int = 3, actions0: int = 3, actions1: int = 2):
        rng = np.random.default_rng(seed)
        self.seed = seed
        self.name = f"RANDOM({seed})"
        p = rng.random(chance) + 0.2
        self.probs = tuple(float(x) for x in p / p.sum())
        self.sizes = (chance, actions0, actions1)
        self.payoff = np.round(rng.uniform(-1, 1, size=(chance, actions0, actions1)), 3)

    def root(self):
        return _State(())

    def player(self, h) -> int:
        return (CHANCE, 0, 1, TERMINAL)[len(h.actions)]

    def num_actions(self, h) -> int:
        return self.sizes[len(h.actions)]

    def chance_probs(self, h):
        return self.probs

    def child(self, h, a: int):
        return _State(h.actions + (a,))

    def utility(self, h) -> float:
        c, a, b = h.actions
        return float(self.payoff[c, a, b])

    def infoset_key(self, h, player: int) -> str:
        acts = h.actions
        if player == 0:
            own = f"c{acts[0]}" if len(acts) > 0 else ""
            own += f"a{acts[1]}" if len(acts) > 1 else ""
        else:
            own = f"p{acts[1] % 2}" if len(acts) > 1 else ""
        return f"{own}/{len(acts)}"

    def public_key(self, h) -> str:
        return str(len(h.actions))

    @property
    def max_utility(self) -> float:
        return float(np.abs(self.payoff).max())
