import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mccr.domains import make_game
from mccr.evaluation import exact_cfv, exact_cfv_action, exploitability, game_value, tree_values
from mccr.game import TERMINAL, expected_utility, reach_probabilities
from mccr.solver import (CFRSolver, FastOutcomeSampling, OutcomeSampling, SamplingScheme,
                         average_strategies, average_strategy_arrays, exact_weighted_utilities,
                         fixed_schedule_crp_estimate, regret_matching)
from mccr.solver.cfv import crp_exact_utility
from mccr.tree import get_tree

from conftest import chain_strategies, random_flat


# -- regret matching and averaging ------------------------------------------

@pytest.mark.parametrize("regrets,expected", [([2, 0, -1], [1, 0, 0]), ([1, 1], [0.5, 0.5]),
                                              ([-1, -2], [0.5, 0.5])])
def test_regret_matching_examples(regrets, expected):
    np.testing.assert_allclose(regret_matching(regrets), expected)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=8))
def test_regret_matching_is_a_distribution(regrets):
    p = regret_matching(regrets)
    assert (p >= 0).all()
    assert p.sum() == pytest.approx(1.0)
    pos = np.maximum(regrets, 0)
    if pos.sum() > 0:
        assert np.all(p[pos == 0] == 0)


def test_chain_average_strategy():
    g = make_game("CHAIN")
    avg = average_strategies(g, chain_strategies())
    got = [avg[k][1] for k in ["", "R", "RR", "RRR"]]
    np.testing.assert_allclose(got, [3 / 4, 2 / 3, 11 / 15, 11 / 14], atol=1e-12)
    assert expected_utility(g, avg, g.replay((1, 1))) == pytest.approx(121 / 210, abs=1e-12)


def test_fixed_weight_estimators_are_wrong_on_chain():
    g = make_game("CHAIN")
    r = exact_weighted_utilities(g, chain_strategies(), (1, 1), 0)
    assert r["arithmetic"] == pytest.approx(108 / 210, abs=1e-12)
    assert r["own"] == pytest.approx(142 / 210, abs=1e-12)
    assert crp_exact_utility(g, chain_strategies(), (1, 1)) == pytest.approx(121 / 210, abs=1e-12)


def test_average_of_identical_strategies_is_idempotent(rng):
    t = get_tree(make_game("LD(1,1,3)"))
    f = random_flat(t, rng)
    np.testing.assert_allclose(average_strategy_arrays(t, [f, f, f]), f, atol=1e-12)
    np.testing.assert_allclose(average_strategy_arrays(t, [f]), f, atol=1e-12)


def test_array_average_matches_generic_average(rng):
    g = make_game("LD(1,1,3)")
    t = get_tree(g)
    flats = [random_flat(t, rng) for _ in range(3)]
    a = average_strategy_arrays(t, flats)
    b = t.strategy_array(average_strategies(g, [t.to_strategy(f) for f in flats]))
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_crp_estimate_single_draw_is_finite():
    g = make_game("CHAIN")
    rng = np.random.default_rng(0)
    est = fixed_schedule_crp_estimate(g, chain_strategies(), (1, 1), rng)
    assert est != est or np.isfinite(est)


def test_crp_matches_dense_oracle():
    """Lazily tracked cumulative reach equals the sum of stored iterates at visit time."""
    g = make_game("CHAIN")
    s = OutcomeSampling(g, SamplingScheme(0.6, incremental=False), seed=3, track_crp=True)
    snaps = []
    for step in range(60):
        i = step % 2
        snaps.append(s.current_strategy())
        h, _, _ = s.sample(i)
        hist = g.history(h)
        for k in range(len(hist)):
            prefix = hist[:k]
            dense = np.zeros(2)
            for sig in snaps:
                r = reach_probabilities(g, sig, prefix)
                dense += r[:2]
            np.testing.assert_allclose(s.crp.current_crp(prefix), dense, atol=1e-9)
    assert s.crp.current_crp(())[0] == len(snaps)


# -- exact CFR ----------------------------------------------------------------

def test_cfr_converges_on_brps():
    g = make_game("B-RPS")
    s = CFRSolver(g)
    e100 = exploitability(g, s.run(100).average_array())
    e10k = exploitability(g, s.run(9900).average_array())
    assert e10k <= e100
    assert tree_values(s.tree, s.average_array())[0] == pytest.approx(game_value(g), abs=1e-2)


def test_cfr_root_value_matches_lp():
    g = make_game("LD(1,1,3)")
    s = CFRSolver(g).run(60000)
    assert tree_values(s.tree, s.average_array())[0] == pytest.approx(game_value(g), abs=1e-4)


def test_single_action_game_has_no_regret():
    g = make_game("CHAIN")

    class OneAction(type(g)):
        def num_actions(self, h):
            return 1

        def player(self, h):
            return TERMINAL if len(h.actions) == 4 else len(h.actions) % 2

        def utility(self, h):
            return 1.0

    s = CFRSolver(OneAction()).run(10)
    assert np.all(s.regret == 0)


# -- outcome sampling ---------------------------------------------------------

def _terminals(tree):
    return [tree.history(int(v)) for v in np.flatnonzero(tree.player == TERMINAL)]


def _exhaustive_check(game, targeting=0.0, target=None, seed=0):
    t = get_tree(game)
    s = OutcomeSampling(game, SamplingScheme(0.6, incremental=False), seed=seed)
    rng = np.random.default_rng(seed)
    for key, n in zip(t.iset_keys, t.iset_nact):
        from mccr.solver.sampling import SolverNode

        # some clipped regrets, so the opponent leaves actions unplayed
        s.nodes[key] = SolverNode(rng.normal(size=n) * 3, np.zeros(n))
    if target is not None:
        s.set_target(target, targeting)
    sigma = s.current_strategy()
    worst = 0.0
    for i in (0, 1):
        expect: dict[str, np.ndarray] = {}
        total_q = 0.0
        for z in _terminals(t):
            try:
                _, q, inc = s.sample(i, forced=z, apply=False)
            except AssertionError:
                continue  # never sampled, contributes nothing
            total_q += q
            for k, v in inc.items():
                expect[k] = expect.get(k, 0.0) + q * v
        assert total_q == pytest.approx(1.0, abs=1e-12)
        for sidx in np.flatnonzero(t.iset_player == i):
            key = t.iset_keys[sidx]
            exact = np.array([exact_cfv_action(t, sigma, key, a, i)
                              for a in range(t.iset_nact[sidx])]) - exact_cfv(t, sigma, key, i)
            worst = max(worst, float(np.abs(expect.get(key, 0.0) - exact).max()))
    return worst


@pytest.mark.parametrize("spec", ["B-RPS", "RANDOM(0)", "RANDOM(7)"])
def test_sampled_regret_is_unbiased(spec):
    assert _exhaustive_check(make_game(spec)) < 1e-9


def test_sampled_regret_is_unbiased_under_targeting():
    g = make_game("B-RPS")
    assert _exhaustive_check(g, 0.9, [(1,)]) < 1e-9
    assert _exhaustive_check(make_game("RANDOM(0)"), 0.9, [(2, 1)]) < 1e-9


def test_full_exploration_samples_uniformly():
    g = make_game("B-RPS")
    s = OutcomeSampling(g, SamplingScheme(1.0), seed=0)
    from mccr.solver.sampling import SolverNode

    s.nodes["/0"] = SolverNode(np.array([5.0, 0.0, 0.0]), np.zeros(3))
    qs = {a: s.sample(0, forced=(a, 0), apply=False)[1] for a in range(3)}
    # player 1 is on policy (uniform), player 0 uniform through exploration
    assert all(q == pytest.approx(1 / 9) for q in qs.values())


def test_incremental_tree_adds_the_sampled_path_only():
    g = make_game("LD(1,1,3)")
    s = OutcomeSampling(g, SamplingScheme(0.6), seed=1)
    s.sample(0)
    assert len(s.nodes) == 1  # the first decision node below the rolls
    s.run(50)
    t = get_tree(g)
    assert len(s.nodes) < t.num_isets


def test_fast_never_updates_outside_memory():
    t = get_tree(make_game("LD(1,1,6)"))
    s = FastOutcomeSampling(t, seed=0).run(2000)
    owner = np.repeat(np.arange(t.num_isets), t.iset_nact)
    touched = (s.regret != 0) | (s.avg != 0)
    assert not touched[~s.in_mem[owner]].any()
    assert 0 < s.in_mem.sum() < t.num_isets


def test_fast_sampler_matches_reference_in_distribution():
    # both implementations converge on the same game at the same rate
    g = make_game("B-RPS")
    ref = [exploitability(g, OutcomeSampling(g, seed=k).run(3000).average_strategy())
           for k in range(6)]
    fast = [exploitability(g, FastOutcomeSampling(g, seed=k).run(3000).average_array())
            for k in range(6)]
    assert np.median(fast) < 3 * np.median(ref) and np.median(ref) < 3 * np.median(fast)


def test_same_seed_same_bits():
    t = get_tree(make_game("IIGS(4)"))
    a = FastOutcomeSampling(t, seed=9).run(3000)
    b = FastOutcomeSampling(t, seed=9).run(3000)
    assert np.array_equal(a.avg, b.avg) and np.array_equal(a.wnum, b.wnum)
    g = make_game("B-RPS")
    x = OutcomeSampling(g, seed=4).run(200).average_strategy()
    y = OutcomeSampling(g, seed=4).run(200).average_strategy()
    assert all(np.array_equal(x[k], y[k]) for k in x.keys())


def test_mccfr_trend_on_brps():
    g = make_game("B-RPS")
    s = FastOutcomeSampling(g, seed=2)
    e3 = exploitability(g, s.run(1000).average_array())
    e5 = exploitability(g, s.run(99000).average_array())
    assert e5 < e3


@pytest.mark.parametrize("seed", range(6))
def test_single_iteration_estimates_agree_at_root(seed):
    g = make_game("B-RPS")
    s = OutcomeSampling(g, SamplingScheme(0.6, incremental=False), seed=seed)
    s.sample(seed % 2)
    for p in (0, 1):
        assert s.history_cfv((), p, "arithmetic") == pytest.approx(s.history_cfv((), p, "weighted"))
    f = FastOutcomeSampling(g, SamplingScheme(0.6, incremental=False), seed).run(1)
    np.testing.assert_allclose(f.node_cfvs(1, "arithmetic")[0], f.node_cfvs(1, "weighted")[0])


def test_no_mass_sentinel():
    g = make_game("B-RPS")
    s = OutcomeSampling(g, seed=0)
    assert np.isnan(s.history_cfv((0,), 0, "weighted"))
    assert s.cfv_estimate([(0,), (1,)], 0) == 0.0


def test_node_dump(tmp_path):
    g = make_game("B-RPS")
    s = OutcomeSampling(g, seed=0).run(10)
    p = tmp_path / "nodes.csv"
    s.dump_nodes(p)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["infoset_key", "action", "cum_regret", "avg_numerator", "cfv_arith",
                       "cfv_weighted_num", "cfv_weighted_den"]
    assert len(rows) > 1


def test_bad_scheme_rejected():
    with pytest.raises(ValueError):
        SamplingScheme(0.0)
    with pytest.raises(ValueError):
        SamplingScheme(0.5, targeting=1.0)


def test_zero_targeting_matches_plain_sampling():
    g = make_game("RANDOM(0)")
    t = get_tree(g)
    a = FastOutcomeSampling(t, SamplingScheme(0.6), seed=3).run(500)
    b = FastOutcomeSampling(t, SamplingScheme(0.6), seed=3)
    b.set_target([t.node_of((0, 1))], 0.0)
    b.run(500)
    assert np.array_equal(a.regret, b.regret)
