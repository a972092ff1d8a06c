"""Phantom tic-tac-toe."""

from __future__ import annotations

from ..game import TERMINAL, Game

_LINES = ((0, 1, 2), (3, 4, 5), (6, 7, 8), (0, 3, 6), (1, 4, 7), (2, 5, 8),
          (0, 4, 8), (2, 4, 6))


class _State:
    __slots__ = ("actions", "board", "seen", "obs", "moves", "winner")

    def __init__(self, actions, board, seen, obs, moves, winner):
        self.actions = actions
        self.board = board  # 9-tuple of -1 (empty), 0 or 1
        self.seen = seen  # per-player bitmask of cells known to be occupied
        self.obs = obs  # per-player attempt strings
        self.moves = moves  # successful marks so far
        self.winner = winner  # -1 none, 0/1 winner, 2 draw


class PhantomTTT(Game):
    """Tic-tac-toe where players do not see the opponent's marks.

    A player picks any cell not known to be occupied. If the opponent holds
    it, the mover learns that and picks again; the opponent learns nothing.
    The public information is only the number of successful marks.
    """

    name = "PTTT"

    def root(self):
        return _State((), (-1,) * 9, (0, 0), ("", ""), 0, -1)

    def player(self, h) -> int:
        if h.winner >= 0:
            return TERMINAL
        return h.moves % 2

    def _free(self, h) -> list[int]:
        seen = h.seen[h.moves % 2]
        return [c for c in range(9) if not seen >> c & 1]

    def num_actions(self, h) -> int:
        return len(self._free(h))

    def child(self, h, a: int):
        me = h.moves % 2
        cell = self._free(h)[a]
        seen = list(h.seen)
        seen[me] |= 1 << cell
        obs = list(h.obs)
        acts = h.actions + (a,)
        if h.board[cell] >= 0:
            obs[me] += f"{cell}-"
            return _State(acts, h.board, tuple(seen), tuple(obs), h.moves, -1)
        obs[me] += f"{cell}+"
        board = h.board[:cell] + (me,) + h.board[cell + 1:]
        winner = -1
        if any(all(board[c] == me for c in line) for line in _LINES):
            winner = me
        elif h.moves + 1 == 9:
            winner = 2
        return _State(acts, board, tuple(seen), tuple(obs), h.moves + 1, winner)

    def utility(self, h) -> float:
        return {0: 1.0, 1: -1.0, 2: 0.0}[h.winner]

    def infoset_key(self, h, player: int) -> str:
        return f"{h.obs[player]}/{h.moves}"

    def public_key(self, h) -> str:
        return str(h.moves)

    @property
    def max_utility(self) -> float:
        return 1.0

    def action_label(self, h, a: int) -> str:
        return str(self._free(h)[a])
