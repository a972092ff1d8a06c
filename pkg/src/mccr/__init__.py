"""Monte Carlo continual resolving for two-player zero-sum imperfect-information games."""

from .agent import Agent, Budget, MatchDesync
from .baselines import ISMCTSAgent, MCCFRAgent, OOSAgent, RandomAgent
from .domains import GameSpecError, make_game
from .evaluation import exploitability, game_value, player_exploitability
from .game import CHANCE, TERMINAL, Game
from .gadget import GadgetGame, build_resolving_gadget, combine_strategy, compile_gadget
from .harness import ConfigError, make_agent
from .resolving import CRConfig, CRState, MCCRAgent, cr_init, cr_play
from .strategy import BehavioralStrategy
from .tree import GameTree, build_tree, get_tree

__all__ = [
    "Agent", "Budget", "MatchDesync", "ISMCTSAgent", "MCCFRAgent", "OOSAgent", "RandomAgent",
    "GameSpecError", "make_game", "exploitability", "game_value", "player_exploitability",
    "CHANCE", "TERMINAL", "Game", "GadgetGame", "build_resolving_gadget", "combine_strategy",
    "compile_gadget", "ConfigError", "make_agent", "CRConfig", "CRState", "MCCRAgent", "cr_init",
    "cr_play", "BehavioralStrategy", "GameTree", "build_tree", "get_tree",
]
