import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mccr.domains import make_game
from mccr.evaluation import (best_response_value, counterfactual_best_response, exact_cfv,
                             exact_cfv_action, exploitability, game_utility, game_value,
                             infoset_cfvs, tree_reach, tree_values)
from mccr.game import TERMINAL, expected_utility, reach_probabilities, walk
from mccr.lp import solve_lp
from mccr.strategy import BehavioralStrategy, uniform_strategy
from mccr.tree import (PublicTree, ValidationError, build_public_tree, build_tree,
                       check_public_closure, get_tree, validate_tree)

from conftest import SMALL, chain_strategies, random_flat


def test_reach_of_root_and_brps_history():
    g = make_game("B-RPS")
    assert reach_probabilities(g, uniform_strategy(), ()) == (1.0, 1.0, 1.0)
    assert reach_probabilities(g, uniform_strategy(), (0, 1)) == pytest.approx((1 / 3, 1 / 3, 1))


def test_chain_reach_conditional():
    g = make_game("CHAIN")
    _, s2 = chain_strategies()
    r = reach_probabilities(g, s2, (1, 1))
    assert r[0] == pytest.approx(1 / 2)
    assert r[1] == pytest.approx(1 / 3)


def test_brps_uniform_value_is_eleven():
    g = make_game("B-RPS")
    assert expected_utility(g, uniform_strategy()) == pytest.approx(11.0)
    assert game_utility(g, get_tree(g).strategy_array()) == pytest.approx(11.0)


def test_terminal_utility_is_itself():
    g = make_game("B-RPS")
    z = g.replay((0, 2))
    assert g.player(z) == TERMINAL
    assert expected_utility(g, uniform_strategy(), z) == 100.0


@pytest.mark.parametrize("spec", SMALL)
def test_terminal_reach_sums_to_one(spec, rng):
    g = make_game(spec)
    t = get_tree(g)
    r = tree_reach(t, random_flat(t, rng))
    z = t.player == TERMINAL
    assert np.prod(r[z], axis=1).sum() == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("spec", ["B-RPS", "LD(1,1,3)", "GP(3,2,2,2)"])
def test_tree_values_match_recursion(spec, rng):
    g = make_game(spec)
    t = get_tree(g)
    flat = random_flat(t, rng)
    sig = t.to_strategy(flat)
    u = tree_values(t, flat)
    for v in rng.choice(t.n, size=min(25, t.n), replace=False):
        h = g.replay(t.history(int(v)))
        assert u[v] == pytest.approx(expected_utility(g, sig, h), abs=1e-9)


def test_root_cfv_equals_expected_utility(rng):
    g = make_game("LD(1,1,3)")
    t = get_tree(g)
    flat = random_flat(t, rng)
    key = g.infoset_key(g.root(), 0)
    assert exact_cfv(g, flat, key, 0) == pytest.approx(game_utility(t, flat))


def test_brps_second_player_cfv_by_brute_force():
    g = make_game("B-RPS")
    t = get_tree(g)
    sig = BehavioralStrategy({"/0": [0.5, 0.3, 0.2], "/1": [0.1, 0.6, 0.3]})
    manual = 0.0
    for a, pa in enumerate([0.5, 0.3, 0.2]):
        for b, pb in enumerate([0.1, 0.6, 0.3]):
            manual += pa * pb * -g.utility(g.replay((a, b)))
    assert exact_cfv(t, sig, "/1", 1) == pytest.approx(manual)
    act = exact_cfv_action(t, sig, "/1", 2, 1)
    assert act == pytest.approx(sum(pa * -g.utility(g.replay((a, 2)))
                                    for a, pa in enumerate([0.5, 0.3, 0.2])))


def test_best_response_against_pure_rock():
    g = make_game("B-RPS")
    sig = BehavioralStrategy({"/0": [1.0, 0.0, 0.0]})
    br = counterfactual_best_response(g, sig, 1)
    np.testing.assert_allclose(br["/1"], [0.0, 1.0, 0.0])


def test_best_response_value_matches_pure_enumeration(rng):
    g = make_game("IIGS(3)")
    t = get_tree(g)
    flat = random_flat(t, rng)
    # the responder's best pure reply, enumerated through each root action
    br = best_response_value(t, flat, 1)
    beta = counterfactual_best_response(t, flat, 1)
    sig = t.to_strategy(flat, players=(0,))
    sig.update(beta)
    assert -expected_utility(g, sig) == pytest.approx(br, abs=1e-9)
    # no single-infoset deviation improves on it
    cf = infoset_cfvs(t, t.strategy_array(sig), 1)
    for s in np.flatnonzero(t.iset_player == 1)[:20]:
        key = t.iset_keys[s]
        for a in range(t.iset_nact[s]):
            dev = sig.copy()
            dev[key] = np.eye(t.iset_nact[s])[a]
            cf2 = infoset_cfvs(t, t.strategy_array(dev), 1)
            assert cf2[t.aug_id(1, key)] <= cf[t.aug_id(1, key)] + 1e-9


def test_thin_infoset_cfv_is_member_value():
    g = make_game("CHAIN")
    t = get_tree(g)
    flat = t.strategy_array()
    # perfect information: infoset value is that of the single member
    key = "RR"
    v = t.node_of((1, 1))
    r = tree_reach(t, flat)
    assert exact_cfv(t, flat, key, 0) == pytest.approx(r[v, 1] * r[v, 2] * tree_values(t, flat)[v])


def test_exploitability_of_equilibrium_is_zero():
    for spec in ["B-RPS", "LD(1,1,3)", "IIGS(3)"]:
        t = get_tree(make_game(spec))
        sol = solve_lp(t)
        assert exploitability(t, sol.strategy) == pytest.approx(0.0, abs=1e-6)


def test_exploitability_of_uniform_brps_matches_matrix():
    from mccr.domains.brps import PAYOFF

    m = np.array(PAYOFF)
    # best replies against the uniform opponent in the matrix game
    br0 = m.mean(axis=1).max()
    br1 = (-m).mean(axis=0).max()
    assert exploitability(make_game("B-RPS"), uniform_strategy()) == pytest.approx(0.5 * (br0 + br1))


def test_game_value_table_agrees_with_lp():
    for spec in ["B-RPS", "LD(1,1,3)", "IIGS(3)"]:
        g = make_game(spec)
        assert game_value(g) == pytest.approx(solve_lp(get_tree(g)).value, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), spec=st.sampled_from(["B-RPS", "LD(1,1,3)", "RANDOM(1)"]))
def test_exploitability_nonnegative_and_zero_sum(seed, spec):
    rng = np.random.default_rng(seed)
    t = get_tree(make_game(spec))
    flat = random_flat(t, rng)
    assert exploitability(t, flat) >= -1e-9
    u = tree_values(t, flat)
    r = tree_reach(t, flat)
    assert np.allclose(r[:, 0] * r[:, 1] * r[:, 2], np.prod(r, axis=1))
    assert np.isfinite(u).all()


def test_public_tree_of_brps():
    pt = build_public_tree(make_game("B-RPS"))
    assert len(pt) == 2
    assert len(pt[pt.root].members) == 1
    child = pt[pt[pt.root].children[0]]
    assert len(child.members) == 3


def test_perfect_information_public_states_are_singletons():
    pt = build_public_tree(make_game("CHAIN"))
    assert all(len(s.members) == 1 for s in pt.states)


@pytest.mark.parametrize("spec", SMALL)
def test_domains_validate(spec):
    t = get_tree(make_game(spec))
    validate_tree(t)
    pt = PublicTree(t)
    for s in pt.states:
        for v in s.members:
            u = v
            while t.public[u] == s.id and u != 0 and t.public[t.parent[u]] == s.id:
                u = t.parent[u]
            assert u in set(s.frontier.tolist())


def test_closure_violation_is_reported():
    from mccr.domains.brps import BiasedRPS

    class Leaky(BiasedRPS):
        name = "LEAKY"

        def public_key(self, h):
            return ".".join(map(str, h.actions))  # reveals the hidden move

    with pytest.raises(ValidationError, match="closed"):
        check_public_closure(build_tree(Leaky()))


def test_strategy_text_roundtrip(tmp_path, rng):
    t = get_tree(make_game("LD(1,1,3)"))
    sig = t.to_strategy(random_flat(t, rng))
    p = tmp_path / "s.tsv"
    sig.save(p)
    back = BehavioralStrategy.load(p)
    assert set(back.keys()) == set(sig.keys())
    for k, v in sig.items():
        np.testing.assert_allclose(back[k], v, rtol=1e-12)
    line = p.read_text().splitlines()[0]
    assert "\t" in line


def test_walk_visits_every_node():
    g = make_game("B-RPS")
    assert sum(1 for _ in walk(g)) == 13
