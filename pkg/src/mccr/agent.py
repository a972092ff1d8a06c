"""Agent protocol shared by the resolving agent, the baselines and the harness."""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from .game import Game


class MatchDesync(RuntimeError):
    """An agent was asked to act somewhere its own bookkeeping cannot reach."""


@dataclass(frozen=True)
class Budget:
    """Thinking budget in iterations, milliseconds, or both (whichever ends first)."""

    iterations: int | None = None
    ms: float | None = None

    def __post_init__(self):
        if self.iterations is None and self.ms is None:
            raise ValueError("budget needs iterations or milliseconds")
        if (self.iterations is not None and self.iterations < 0) or (self.ms is not None and self.ms < 0):
            raise ValueError("budget must be non-negative")

    def run(self, solver) -> None:
        if self.ms is None and not self.iterations:
            return
        solver.run(self.iterations, self.ms)

    def __str__(self) -> str:
        parts = []
        if self.iterations is not None:
            parts.append(f"{self.iterations}it")
        if self.ms is not None:
            parts.append(f"{self.ms:g}ms")
        return "+".join(parts)


class Agent:
    """Base agent: ``init`` once per match, then ``observe``/``act``.

    ``act`` receives the agent's own infoset key and its action count and
    returns an action id.
    ``public_policy`` is used by the expected-strategy evaluation: it
    advances the agent as if the match had reached public state ``state``
    and returns its distribution at each of its infosets there.
    """

    name = "agent"

    def init(self, game: Game, player: int, seed: int, preplay: Budget | None = None) -> None:
        self.game = game
        self.player = player
        self.rng = np.random.default_rng(seed)

    def observe(self, key: str) -> None:
        pass

    def act(self, key: str, num_actions: int, budget: Budget) -> int:
        raise NotImplementedError

    def fork(self) -> "Agent":
        other = copy.copy(self)
        other.rng = copy.deepcopy(self.rng)
        return other

    def public_policy(self, state: int, budget: Budget) -> dict[str, np.ndarray]:
        raise NotImplementedError(f"{self.name} has no public-state policy")

    def config(self) -> dict:
        return {"name": self.name}

    def _draw(self, probs: np.ndarray) -> int:
        probs = np.asarray(probs, dtype=float)
        return int(self.rng.choice(len(probs), p=probs / probs.sum()))
