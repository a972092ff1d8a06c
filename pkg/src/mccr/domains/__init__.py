"""Benchmark domains and the game-string factory."""

from __future__ import annotations

import re

from ..game import Game
from .brps import BiasedRPS
from .goofspiel import Goofspiel
from .liars_dice import LiarsDice
from .phantom_ttt import PhantomTTT
from .poker import GenericPoker
from .toy import ChainGame, RandomGame

__all__ = ["BiasedRPS", "Goofspiel", "LiarsDice", "GenericPoker", "PhantomTTT", "ChainGame",
           "RandomGame", "make_game", "GameSpecError"]


class GameSpecError(ValueError):
    pass


_PATTERN = re.compile(r"^\s*([A-Za-z-]+)\s*(?:\(([\d,\s]*)\))?\s*$")
_ARITY = {"IIGS": 1, "LD": 3, "GP": 4, "RANDOM": 1}
_CACHE: dict[str, Game] = {}


def make_game(spec: str) -> Game:
    """Build a game from strings like ``IIGS(5)``, ``LD(1,1,6)`` or ``B-RPS``.

    Games are immutable, so equal strings return the same instance.
    """
    m = _PATTERN.match(spec)
    if not m:
        raise GameSpecError(f"cannot parse game {spec!r}")
    name = m.group(1).upper()
    args = [int(x) for x in m.group(2).split(",")] if m.group(2) else []
    key = f"{name}{tuple(args)}"
    if key in _CACHE:
        return _CACHE[key]
    if name in ("B-RPS", "BRPS", "PTTT", "CHAIN"):
        if args:
            raise GameSpecError(f"{name} takes no parameters")
        game = {"B-RPS": BiasedRPS, "BRPS": BiasedRPS, "PTTT": PhantomTTT,
                "CHAIN": ChainGame}[name]()
    elif name in _ARITY:
        if len(args) != _ARITY[name]:
            raise GameSpecError(f"{name} expects {_ARITY[name]} parameters, got {len(args)}")
        cls = {"IIGS": Goofspiel, "LD": LiarsDice, "GP": GenericPoker, "RANDOM": RandomGame}[name]
        try:
            game = cls(*args)
        except ValueError as e:
            raise GameSpecError(str(e)) from None
    else:
        raise GameSpecError(f"unknown game {name!r}")
    _CACHE[key] = game
    return game
