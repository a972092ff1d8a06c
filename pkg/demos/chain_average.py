"""Why fixed weights cannot recover the value of an average strategy.

Two profiles on the four-step chain game: always go right, and go right
with probabilities 1/2, 1/3, 1/5, 1/7. We compare three weighted averages
of the per-profile values at history (R, R) with the exact value of the
averaged strategy, then with the sampled cumulative-reach estimator.
"""

import numpy as np

from mccr.domains import make_game
from mccr.game import expected_utility
from mccr.solver import average_strategies, exact_weighted_utilities, fixed_schedule_crp_estimate
from mccr.strategy import BehavioralStrategy

keys = ["", "R", "RR", "RRR"]
s1 = BehavioralStrategy({k: [0.0, 1.0] for k in keys})
s2 = BehavioralStrategy({k: [1 - p, p] for k, p in zip(keys, [1 / 2, 1 / 3, 1 / 5, 1 / 7])})

game = make_game("CHAIN")
h = (1, 1)
avg = average_strategies(game, [s1, s2])
print("average P(R):", [round(float(avg[k][1]), 4) for k in keys])
exact = expected_utility(game, avg, game.replay(h))
print(f"exact value at RR: {exact * 210:.1f}/210")

for name, v in exact_weighted_utilities(game, [s1, s2], h, 0).items():
    print(f"  {name:>10} weights: {v * 210:6.1f}/210")

rng = np.random.default_rng(0)
draws = np.array([fixed_schedule_crp_estimate(game, [s1, s2], h, rng) for _ in range(20000)])
se = draws.std() / np.sqrt(len(draws))
print(f"sampled crp estimator: {draws.mean() * 210:.1f}/210 (+/- {2 * se * 210:.1f})")
