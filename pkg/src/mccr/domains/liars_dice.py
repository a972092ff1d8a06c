"""Liar's Dice with a wild star face."""

from __future__ import annotations

import itertools

from ..game import CHANCE, TERMINAL, Game


class _State:
    __slots__ = ("actions", "dice", "last", "bids", "called", "count")

    def __init__(self, actions, dice, last, bids, called, count=0):
        self.actions = actions
        self.count = count  # bids made so far
        self.dice = dice  # tuple of per-player dice tuples rolled so far
        self.last = last  # index of the current bid, -1 before the first bid
        self.bids = bids  # public bid string
        self.called = called


class LiarsDice(Game):
    """LD(D1, D2, F): player i rolls D_i dice with faces 1..F-1 and a star.

    Bids are (quantity, face) pairs ordered lexicographically; each bid must
    exceed the previous one. Instead of bidding, a player may call the last
    bid a lie. The bid holds if at least ``quantity`` dice show the face or
    a star (a star bid counts only stars); the loser of the call gets -1.
    """

    def __init__(self, d1: int, d2: int, faces: int):
        if d1 < 1 or d2 < 1 or not 2 <= faces <= 9:
            raise ValueError("LD needs D1, D2 >= 1 and 2 <= F <= 9")
        self.d = (d1, d2)
        self.faces = faces
        self.num_bids = (d1 + d2) * faces
        self.name = f"LD({d1},{d2},{faces})"
        self._rolls = [list(itertools.product(range(1, faces + 1), repeat=k)) for k in self.d]

    def root(self):
        return _State((), (), -1, "", False)

    def player(self, h) -> int:
        if h.called:
            return TERMINAL
        if len(h.dice) < 2:
            return CHANCE
        return h.count % 2

    def num_actions(self, h) -> int:
        if len(h.dice) < 2:
            return len(self._rolls[len(h.dice)])
        n = self.num_bids - 1 - h.last
        return n + (1 if h.last >= 0 else 0)

    def chance_probs(self, h):
        n = len(self._rolls[len(h.dice)])
        return [1.0 / n] * n

    def bid(self, index: int) -> tuple[int, int]:
        return index // self.faces + 1, index % self.faces + 1

    def child(self, h, a: int):
        acts = h.actions + (a,)
        if len(h.dice) < 2:
            return _State(acts, h.dice + (self._rolls[len(h.dice)][a],), -1, "", False)
        b = h.last + 1 + a
        if b >= self.num_bids:
            return _State(acts, h.dice, h.last, h.bids + ",x", True, h.count)
        q, f = self.bid(b)
        return _State(acts, h.dice, b, f"{h.bids},{q}-{f}" if h.bids else f"{q}-{f}", False,
                      h.count + 1)

    def utility(self, h) -> float:
        q, f = self.bid(h.last)
        star = self.faces
        count = sum(1 for roll in h.dice for x in roll if x == f or (x == star and f != star))
        caller = h.count % 2
        caller_wins = count < q
        u = 1.0 if caller_wins else -1.0
        return u if caller == 0 else -u

    def infoset_key(self, h, player: int) -> str:
        own = "".join(map(str, h.dice[player])) if len(h.dice) > player else ""
        return f"{own}/{self.public_key(h)}"

    def public_key(self, h) -> str:
        return f"{len(h.dice)}|{h.bids}"

    @property
    def max_utility(self) -> float:
        return 1.0

    def action_label(self, h, a: int) -> str:
        if len(h.dice) < 2:
            return "".join(map(str, self._rolls[len(h.dice)][a]))
        b = h.last + 1 + a
        if b >= self.num_bids:
            return "liar"
        q, f = self.bid(b)
        return f"{q}x{'*' if f == self.faces else f}"
