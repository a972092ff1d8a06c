"""Generic two-round poker in the style of Leduc hold'em."""

from __future__ import annotations

from ..game import CHANCE, TERMINAL, Game


class _State:
    __slots__ = ("actions", "cards", "board", "rnd", "seq", "contrib", "to_call",
                 "raises", "actor", "opened", "over")

    def __init__(self, actions, cards, board, rnd, seq, contrib, to_call, raises,
                 actor, opened, over):
        self.actions = actions
        self.cards = cards  # private card types dealt so far
        self.board = board  # public card type or -1
        self.rnd = rnd  # betting round 0 or 1, 2 when finished
        self.seq = seq  # public token string
        self.contrib = contrib
        self.to_call = to_call  # chips the actor must add to match
        self.raises = raises
        self.actor = actor
        self.opened = opened  # someone already checked in this round
        self.over = over  # "", "fold0", "fold1" or "show"


class GenericPoker(Game):
    """GP(T, C, R, B): T card types with C copies each.

    Each player antes one chip and gets a private card. In each of the two
    betting rounds player 0 acts first and may check or bet 1..B chips;
    facing a bet a player folds, calls, or raises by 1..B chips, with at
    most R raises per round. A public card is dealt between the rounds.
    At showdown a private card pairing the board wins, otherwise the higher
    card wins; equal cards split the pot.
    """

    def __init__(self, types: int, copies: int, max_raises: int, bet_sizes: int):
        if types < 1 or copies < 1 or types * copies < 3 or max_raises < 0 or bet_sizes < 1:
            raise ValueError("GP needs T*C >= 3, R >= 0, B >= 1")
        self.types, self.copies = types, copies
        self.max_raises, self.bet_sizes = max_raises, bet_sizes
        self.name = f"GP({types},{copies},{max_raises},{bet_sizes})"

    def root(self):
        return _State((), (), -1, 0, "", (1, 1), 0, 0, 0, False, "")

    def _dealing(self, h) -> bool:
        return len(h.cards) < 2 or (h.rnd == 1 and h.board < 0)

    def player(self, h) -> int:
        if h.over:
            return TERMINAL
        if self._dealing(h):
            return CHANCE
        return h.actor

    def _deck(self, h) -> list[int]:
        """Card types still available and their remaining counts."""
        left = [self.copies] * self.types
        for c in h.cards:
            left[c] -= 1
        return left

    def _outcomes(self, h) -> list[int]:
        return [t for t, n in enumerate(self._deck(h)) if n > 0]

    def num_actions(self, h) -> int:
        if self._dealing(h):
            return len(self._outcomes(h))
        if h.to_call == 0:
            return 1 + self.bet_sizes
        return 2 + (self.bet_sizes if h.raises < self.max_raises else 0)

    def chance_probs(self, h):
        left = self._deck(h)
        total = sum(left)
        return [left[t] / total for t in self._outcomes(h)]

    def child(self, h, a: int):
        acts = h.actions + (a,)
        if self._dealing(h):
            t = self._outcomes(h)[a]
            if len(h.cards) < 2:
                return _State(acts, h.cards + (t,), -1, 0, h.seq + "d", h.contrib, 0, 0, 0,
                              False, "")
            return _State(acts, h.cards, t, 1, h.seq + f"|{t}", h.contrib, 0, 0, 0, False, "")
        me, opp = h.actor, 1 - h.actor
        contrib = list(h.contrib)
        if h.to_call == 0:
            if a == 0:  # check
                if h.opened:
                    return self._end_round(h, acts, h.seq + "k", tuple(contrib))
                return _State(acts, h.cards, h.board, h.rnd, h.seq + "k", h.contrib, 0, 0, opp,
                              True, "")
            contrib[me] += a
            return _State(acts, h.cards, h.board, h.rnd, h.seq + f"b{a}", tuple(contrib), a, 0,
                          opp, True, "")
        if a == 0:  # fold
            return _State(acts, h.cards, h.board, h.rnd, h.seq + "f", h.contrib, 0, 0, opp,
                          True, f"fold{me}")
        contrib[me] += h.to_call
        if a == 1:  # call
            return self._end_round(h, acts, h.seq + "c", tuple(contrib))
        size = a - 1
        contrib[me] += size
        return _State(acts, h.cards, h.board, h.rnd, h.seq + f"r{size}", tuple(contrib), size,
                      h.raises + 1, opp, True, "")

    def _end_round(self, h, acts, seq, contrib):
        if h.rnd == 0:
            return _State(acts, h.cards, -1, 1, seq, contrib, 0, 0, 0, False, "")
        return _State(acts, h.cards, h.board, 2, seq, contrib, 0, 0, 0, False, "show")

    def _rank(self, card: int, board: int) -> tuple[int, int]:
        return (1 if card == board else 0, card)

    def utility(self, h) -> float:
        if h.over == "fold0":
            return -float(h.contrib[0])
        if h.over == "fold1":
            return float(h.contrib[1])
        r0, r1 = self._rank(h.cards[0], h.board), self._rank(h.cards[1], h.board)
        if r0 == r1:
            return 0.0
        return float(h.contrib[1]) if r0 > r1 else -float(h.contrib[0])

    def infoset_key(self, h, player: int) -> str:
        own = str(h.cards[player]) if len(h.cards) > player else ""
        return f"{own}/{h.seq}"

    def public_key(self, h) -> str:
        return h.seq

    @property
    def max_utility(self) -> float:
        return 1.0 + 2.0 * (self.max_raises + 1) * self.bet_sizes

    def action_label(self, h, a: int) -> str:
        if self._dealing(h):
            return f"card{self._outcomes(h)[a]}"
        if h.to_call == 0:
            return "check" if a == 0 else f"bet{a}"
        return ("fold", "call")[a] if a < 2 else f"raise{a - 1}"
