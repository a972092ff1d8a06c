"""Imperfect-information Goofspiel with a fixed increasing point stack."""

from __future__ import annotations

from ..game import TERMINAL, Game

_RESULT = "WLT"


class _State:
    __slots__ = ("actions", "hands", "pending", "results", "score", "obs")

    def __init__(self, actions, hands, pending, results, score, obs):
        self.actions = actions
        self.hands = hands  # bitmasks of cards still held
        self.pending = pending  # player 0's hidden card this round, or -1
        self.results = results  # public string, one letter per round (player 0's view)
        self.score = score  # score0 - score1
        self.obs = obs  # per-player private strings (own cards played)


def _cards(mask: int) -> list[int]:
    return [c for c in range(mask.bit_length()) if mask >> c & 1]


class Goofspiel(Game):
    """IIGS(N): in round k both players bid a card for k points.

    Player 0 bids first, player 1 bids without seeing it, then only the
    outcome of the bid (win, loss, tie) becomes public. Ties discard the
    points. The player with more points wins (+1 / -1 / 0).
    """

    def __init__(self, n: int):
        if not 1 <= n <= 13:
            raise ValueError("IIGS needs 1 <= N <= 13")
        self.n = n
        self.name = f"IIGS({n})"

    def root(self):
        full = (1 << self.n) - 1
        return _State((), (full, full), -1, "", 0, ("", ""))

    def player(self, h) -> int:
        if len(h.results) == self.n:
            return TERMINAL
        return 0 if h.pending < 0 else 1

    def num_actions(self, h) -> int:
        return bin(h.hands[0 if h.pending < 0 else 1]).count("1")

    def child(self, h, a: int):
        acts = h.actions + (a,)
        if h.pending < 0:
            card = _cards(h.hands[0])[a]
            return _State(acts, (h.hands[0] & ~(1 << card), h.hands[1]), card,
                          h.results, h.score, h.obs)
        card = _cards(h.hands[1])[a]
        mine = h.pending
        k = len(h.results)
        if mine > card:
            res, score = "W", h.score + k
        elif mine < card:
            res, score = "L", h.score - k
        else:
            res, score = "T", h.score
        obs = (h.obs[0] + str(mine), h.obs[1] + str(card))
        return _State(acts, (h.hands[0], h.hands[1] & ~(1 << card)), -1,
                      h.results + res, score, obs)

    def utility(self, h) -> float:
        return float((h.score > 0) - (h.score < 0))

    def infoset_key(self, h, player: int) -> str:
        own = h.obs[player]
        if player == 0 and h.pending >= 0:
            own += str(h.pending)
        return f"{own}/{self.public_key(h)}"

    def public_key(self, h) -> str:
        return h.results + ("b" if h.pending >= 0 else "a")

    @property
    def max_utility(self) -> float:
        return 1.0

    def action_label(self, h, a: int) -> str:
        return str(_cards(h.hands[0 if h.pending < 0 else 1])[a])
