import csv

import numpy as np
import pytest

from mccr.domains import make_game
from mccr.domains.toy import _State
from mccr.evaluation import (best_response_value, counterfactual_best_response, infoset_cfvs,
                             player_exploitability, tree_reach)
from mccr.gadget import (FOLLOW, PREFIX, TERMINATE, GadgetGame, UnreachablePublicState,
                         build_resolving_gadget, combine_strategy, compile_gadget,
                         gadget_infosets)
from mccr.game import CHANCE, TERMINAL, Game
from mccr.lp import solve_lp
from mccr.solver import CFRSolver
from mccr.tree import PublicTree, build_tree, get_tree, validate_tree

from conftest import random_flat


class ThreeWay(Game):
    """Chance picks one of three histories; player 1 only learns whether it was the third."""

    name = "THREEWAY"

    def root(self):
        return _State(())

    def player(self, h):
        return (CHANCE, 0, 1, TERMINAL)[len(h.actions)]

    def num_actions(self, h):
        return (3, 2, 2)[len(h.actions)]

    def chance_probs(self, h):
        return (0.2, 0.3, 0.5)

    def child(self, h, a):
        return _State(h.actions + (a,))

    def utility(self, h):
        c, a, b = h.actions
        return float((c + 1) * (1 if a == b else -1))

    def infoset_key(self, h, player):
        acts = h.actions
        if player == 0:
            return f"/{len(acts)}" if len(acts) < 2 else f"{acts[1]}/{len(acts)}"
        seen = "x" if acts and acts[0] == 2 else "o"
        return f"{seen if acts else ''}/{len(acts)}"

    def public_key(self, h):
        return str(len(h.actions))

    @property
    def max_utility(self):
        return 3.0


def _frontier(t, st):
    return [t.history(int(v)) for v in st.frontier]


def test_three_history_gadget_shape():
    g = ThreeWay()
    t = build_tree(g)
    pt = PublicTree(t)
    st = pt.by_key("1")
    G = build_resolving_gadget(g, _frontier(t, st), 0, [1.0, 1.0, 1.0], {"o/1": 0.1, "x/1": -0.4})
    gt = build_tree(G)
    assert (gt.player == CHANCE).sum() == 1
    copies = gt.children(0)
    assert len(copies) == 3
    assert all(gt.player[c] == 1 for c in copies)
    terminate = [gt.first_child[c] + TERMINATE for c in copies]
    assert all(gt.player[v] == TERMINAL for v in terminate)
    keys = {gt.iset_keys[gt.infoset[c]] for c in copies}
    assert keys == {PREFIX + "o/1", PREFIX + "x/1"}
    assert gt.chance[list(copies)].sum() == pytest.approx(1.0)


def test_terminate_utility_formula():
    g = ThreeWay()
    t = build_tree(g)
    st = PublicTree(t).by_key("1")
    # chance reach 0.2, 0.3, 0.5 and resolver range 0.5, 1, 0.2 -> total 0.4, group "o" 0.4 ...
    G = build_resolving_gadget(g, _frontier(t, st), 0, [1.0, 0.0, 0.4], {"o/1": 0.5, "x/1": 0.5})
    total = 0.2 + 0.5 * 0.4
    assert G.scale == pytest.approx(total)
    # history 0 is alone in its group with pi_{-o} = 0.2
    assert -G.terminate_utility[0] == pytest.approx(0.5 * total / 0.2)
    # the formula with pi_{-o}(S) = 0.4 and pi_{-o}(I) = 0.2
    assert -G.terminate_utility[0] == pytest.approx(1.0)


def test_root_public_state_gadget_is_a_relabelled_game():
    g = make_game("B-RPS")
    G = build_resolving_gadget(g, [()], 0, [1.0], {"/0": 3.0})
    gt = build_tree(G)
    assert G.scale == 1.0
    assert gt.num_children[0] == 1
    # everything below follow matches the base game
    v = gt.first_child[gt.first_child[0]] + FOLLOW
    assert gt.num_children[v] == 3


def test_plain_and_epsilon_root_probabilities():
    g = ThreeWay()
    t = build_tree(g)
    fr = _frontier(t, PublicTree(t).by_key("1"))
    r = np.array([0.5, 1.0, 0.25])
    cfv = {"o/1": 0.0, "x/1": 0.0}
    plain = build_resolving_gadget(g, fr, 0, r, cfv)
    pi = r * np.array([0.2, 0.3, 0.5])
    np.testing.assert_allclose(plain.root_probs, pi / pi.sum())
    opp = np.array([0.0, 0.5, 1.0])
    eps = build_resolving_gadget(g, fr, 0, r, cfv, mode="epsilon", epsilon=1e-3,
                                 opponent_reach=opp)
    w = pi * (opp + 1e-3)
    np.testing.assert_allclose(eps.root_probs, w / w.sum())
    assert eps.root_probs.sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        build_resolving_gadget(g, fr, 0, r, cfv, mode="bogus")


def test_construction_errors():
    g = ThreeWay()
    t = build_tree(g)
    fr = _frontier(t, PublicTree(t).by_key("1"))
    with pytest.raises(UnreachablePublicState):
        build_resolving_gadget(g, fr, 0, [0.0, 0.0, 0.0], {"o/1": 0.0, "x/1": 0.0})
    with pytest.raises(ValueError, match="no value estimate"):
        build_resolving_gadget(g, fr, 0, [1.0, 1.0, 1.0], {"o/1": 0.0})


@pytest.mark.parametrize("spec", ["LD(1,1,4)", "GP(3,2,2,2)", "IIGS(4)", "B-RPS"])
def test_compiled_gadget_equals_enumerated(spec):
    g = make_game(spec)
    t = get_tree(g)
    pt = PublicTree(t)
    rng = np.random.default_rng(0)
    done = 0
    for st in pt.states:
        if st.id == pt.root or not st.actors or (len(pt) > 10 and rng.random() > 0.4):
            continue
        res = int(min(st.actors))
        opp = 1 - res
        cfv = {t.aug_keys[opp][t.aug[v, opp]]: rng.normal() for v in st.frontier}
        G = build_resolving_gadget(g, _frontier(t, st), res, rng.random(len(st.frontier)) + 0.1, cfv)
        a, b = build_tree(G), compile_gadget(G, t)
        for f in ["player", "parent", "action", "first_child", "num_children", "depth", "chance",
                  "utility", "infoset", "edge", "aug", "public", "both", "iset_nact",
                  "iset_offset"]:
            np.testing.assert_allclose(getattr(a, f), getattr(b, f), err_msg=f)
        assert a.iset_keys == b.iset_keys and a.aug_keys == b.aug_keys
        validate_tree(b)
        done += 1
        if done >= 4:
            break
    assert done > 0


def _random_instance(g, t, states, rng):
    while True:
        st = states[rng.integers(len(states))]
        res = int(rng.integers(2))
        opp = 1 - res
        flat = random_flat(t, rng)
        r = tree_reach(t, flat)
        fr = st.frontier
        if (r[fr, res] * r[fr, 2]).sum() > 0:
            return st, res, opp, flat, r


def _preservation_error(g, t, states, rng):
    st, res, opp, flat, r = _random_instance(g, t, states, rng)
    fr = st.frontier
    cf = infoset_cfvs(t, flat, opp)
    vt = {t.aug_keys[opp][a]: cf[a] for a in set(t.aug[fr, opp].tolist())}
    G = build_resolving_gadget(g, _frontier(t, st), res, r[fr, res], vt, chance=r[fr, 2])
    gt = compile_gadget(G, t)
    sig = t.to_strategy(flat)
    gs = gt.to_strategy(random_flat(gt, rng))
    for k, v in sig.items():
        if k in gs.table and gt.iset_player[gt.iset_id(k)] == opp:
            gs[k] = v
    mine = {k: n for k, n in gadget_infosets(gt).items() if gt.iset_player[gt.iset_id(k)] == res}
    new = combine_strategy(sig, mine, gs, t)
    cb, cg = infoset_cfvs(t, new, opp), infoset_cfvs(gt, gs, opp)
    worst = 0.0
    for k, a in gt._aug_ids[opp].items():
        if not k.startswith(PREFIX):
            worst = max(worst, abs(cb[t.aug_id(opp, k)] - cg[a]))
    return worst


def test_opponent_values_preserved():
    g = make_game("LD(1,1,4)")
    t = get_tree(g)
    pt = PublicTree(t)
    states = [s for s in pt.states if s.id != pt.root and s.actors]
    rng = np.random.default_rng(7)
    assert max(_preservation_error(g, t, states, rng) for _ in range(20)) < 1e-9


def test_combine_is_idempotent_and_checks_keys(rng):
    g = make_game("LD(1,1,3)")
    t = get_tree(g)
    sig = t.to_strategy(random_flat(t, rng))
    st = PublicTree(t).states[3]
    res = int(min(st.actors)) if st.actors else 0
    opp = 1 - res
    r = tree_reach(t, t.strategy_array(sig))
    fr = st.frontier
    cf = infoset_cfvs(t, sig, opp)
    vt = {t.aug_keys[opp][a]: cf[a] for a in set(t.aug[fr, opp].tolist())}
    G = build_resolving_gadget(g, _frontier(t, st), res, r[fr, res] + 1e-3, vt)
    gt = compile_gadget(G, t)
    same = combine_strategy(sig, gadget_infosets(gt), sig, t)
    for k, v in sig.items():
        np.testing.assert_array_equal(same[k], v)
    with pytest.raises(KeyError):
        combine_strategy(sig, {"nonexistent/key": 2}, sig, t)


def test_frontier_dump(tmp_path):
    g = ThreeWay()
    t = build_tree(g)
    G = build_resolving_gadget(g, _frontier(t, PublicTree(t).by_key("1")), 0, [1, 1, 1],
                               {"o/1": 0.0, "x/1": 1.0})
    p = tmp_path / "frontier.csv"
    G.dump_frontier(p)
    rows = list(csv.reader(open(p)))
    assert len(rows) == 4


def test_resolved_strategy_bound():
    """expl(new) <= expl(old) + sum |v_cbr - v~| + gadget expl of the resolved part."""
    g = make_game("LD(1,1,3)")
    t = get_tree(g)
    pt = PublicTree(t)
    states = [s for s in pt.states if s.id != pt.root and s.actors]
    rng = np.random.default_rng(3)
    for _ in range(15):
        st, res, opp, flat, r = _random_instance(g, t, states, rng)
        fr = st.frontier
        sig = t.to_strategy(flat)
        br = counterfactual_best_response(t, flat, opp)
        cbr = sig.copy()
        cbr.update(br)
        v_cbr = infoset_cfvs(t, cbr, opp)
        noise = rng.normal(scale=0.05, size=len(v_cbr))
        top = sorted(set(t.aug[fr, opp].tolist()))
        vt = {t.aug_keys[opp][a]: v_cbr[a] + noise[a] for a in top}
        G = build_resolving_gadget(g, _frontier(t, st), res, r[fr, res], vt, chance=r[fr, 2])
        gt = compile_gadget(G, t)
        rho = random_flat(gt, rng)
        value = solve_lp(gt).value
        v_opp = value if opp == 0 else -value
        gadget_expl = best_response_value(gt, rho, opp) - v_opp
        mine = {k: n for k, n in gadget_infosets(gt).items()
                if gt.iset_player[gt.iset_id(k)] == res}
        new = combine_strategy(sig, mine, gt.to_strategy(rho), t)
        lhs = player_exploitability(g, new, res)
        rhs = player_exploitability(g, sig, res) + np.abs(noise[top]).sum() + gadget_expl
        assert lhs <= rhs + 1e-9


def test_gadget_solved_by_cfr():
    g = make_game("B-RPS")
    t = get_tree(g)
    st = PublicTree(t).by_key("1")
    G = build_resolving_gadget(g, _frontier(t, st), 1, [1.0, 1.0, 1.0], {"R/1": 0.0, "P/1": 1.0, "S/1": -2.0})
    s = CFRSolver(compile_gadget(G, t)).run(100)
    assert isinstance(G, GadgetGame)
    assert np.isfinite(s.average_array()).all()
