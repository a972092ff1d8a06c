"""A few matches of MCCR against a random player on biased rock-paper-scissors.

The second mover's move is a resolve: MCCR builds a gadget from the values it
estimated during pre-play and solves it with outcome sampling.
"""

import numpy as np

from mccr import Budget, make_agent, make_game
from mccr.harness import play_match

game = make_game("B-RPS")
rng = np.random.default_rng(7)
pre, move = Budget(iterations=20000), Budget(iterations=5000)

total = 0.0
for m in range(10):
    agents = [make_agent("mccr:reset"), make_agent("rnd")]
    if m % 2:
        agents.reverse()
    rec = play_match(game, agents, (2 * m, 2 * m + 1), pre, move, rng)
    u = rec.utility if m % 2 == 0 else -rec.utility
    total += u
    print(f"match {m}: mccr in seat {m % 2}, actions {rec.actions}, mccr gets {u:+.0f}")

print(f"mean payoff for mccr: {total / 10 / game.max_utility:+.3f} of max")

mccr = make_agent("mccr:reset")
mccr.init(game, 1, seed=3, preplay=pre)
mccr.act("/1", 3, move)
for r in mccr.state.resolves:
    print("resolve log:", r)
print("second mover plays R/P/S with", mccr.state.policy(1).round(3))
