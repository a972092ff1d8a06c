"""Expected-strategy exploitability of MCCR and root MCCFR as the per-move budget grows.

The agent is run in every public state it can reach (forking at each one),
the resulting strategies are averaged over seeds and evaluated exactly.
"""

from mccr import Budget, make_game
from mccr.harness import expected_strategy_exploitability

game = make_game("IIGS(4)")
for iters in (100, 1000, 10000):
    b = Budget(iterations=iters)
    row = [f"{iters:>6}"]
    for agent in ("mccr:reset", "mccr:keep", "mccfr"):
        r = expected_strategy_exploitability(game, agent, b, b, seeds=[0, 1])
        row.append(f"{agent}={r['exploitability']:.4f}")
    print("  ".join(row))
