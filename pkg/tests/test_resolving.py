import numpy as np
import pytest

from mccr.agent import Budget, MatchDesync
from mccr.domains import make_game
from mccr.domains.toy import _State
from mccr.evaluation import player_exploitability
from mccr.game import TERMINAL, Game
from mccr.harness import combined_strategy
from mccr.resolving import CRConfig, MCCRAgent, compute_nps, cr_init, cr_play, get_index
from mccr.tree import get_tree

B = Budget(iterations=300)


class TwoStep(Game):
    """Player 0 moves twice inside one public state, then player 1 answers."""

    name = "TWOSTEP"

    def root(self):
        return _State(())

    def player(self, h):
        return (0, 0, 1, TERMINAL)[len(h.actions)]

    def num_actions(self, h):
        return 2

    def child(self, h, a):
        return _State(h.actions + (a,))

    def utility(self, h):
        a, b, c = h.actions
        return float((a + b) % 2 == c) - 0.5 * a

    def infoset_key(self, h, player):
        own = "".join(map(str, h.actions[:2])) if player == 0 else ""
        return f"{own[:len(h.actions)]}/{'p' if len(h.actions) < 2 else 'q'}"

    def public_key(self, h):
        return "p" if len(h.actions) < 2 else "q"

    @property
    def max_utility(self):
        return 1.0


def test_config_validation():
    for bad in [dict(mode="x"), dict(resolver="x"), dict(root_mode="x"), dict(cfv_mode="x"),
                dict(epsilon=0.0), dict(targeting=1.0)]:
        with pytest.raises(ValueError):
            CRConfig(**bad)


def test_nps_from_empty_and_chain():
    g = make_game("CHAIN")
    pub = get_index(get_tree(g)).public
    assert compute_nps(pub, set(), 0) == {pub.root}
    assert {pub[s].key for s in compute_nps(pub, {pub.root}, 0)} == {"RR"}
    assert {pub[s].key for s in compute_nps(pub, set(), 1)} == {"R"}


def test_brps_first_move_uses_root_solver():
    g = make_game("B-RPS")
    st = cr_init(g, 0, Budget(iterations=1000), seed=1)
    assert st.nps == {get_index(st.tree).public.root}
    a, st = cr_play(st, "/0", B, np.random.default_rng(0))
    assert 0 <= a < 3
    assert len(st.kps) == 1 and not st.nps


def test_zero_preplay_is_legal_and_flagged():
    g = make_game("LD(1,1,3)")
    st = cr_init(g, 1, Budget(iterations=0), seed=0)
    assert st.nps
    assert sum(d.low_confidence for d in st.data.values()) > 0
    h = g.replay((0, 1, 0))
    a, st = cr_play(st, g.infoset_key(h, 1), B, np.random.default_rng(0))
    assert 0 <= a < g.num_actions(h)


def test_same_seed_same_data():
    g = make_game("IIGS(4)")
    a = cr_init(g, 1, Budget(iterations=500), seed=3)
    b = cr_init(g, 1, Budget(iterations=500), seed=3)
    assert a.data.keys() == b.data.keys()
    for s in a.data:
        assert a.data[s].cfv == b.data[s].cfv
        np.testing.assert_array_equal(a.data[s].range, b.data[s].range)


def test_second_infoset_in_known_state_does_not_resolve():
    g = TwoStep()
    st = cr_init(g, 0, Budget(iterations=200), seed=0)
    rng = np.random.default_rng(0)
    a, st = cr_play(st, g.infoset_key(g.root(), 0), B, rng)
    n = len(st.resolves)
    _, st = cr_play(st, g.infoset_key(g.replay((a,)), 0), B, rng)
    assert len(st.resolves) == n


def test_desync_errors():
    g = make_game("IIGS(4)")
    st = cr_init(g, 1, Budget(iterations=100), seed=0)
    rng = np.random.default_rng(0)
    with pytest.raises(MatchDesync):
        cr_play(st, "nope", B, rng)
    with pytest.raises(MatchDesync):
        cr_play(st, g.infoset_key(g.root(), 0), B, rng)
    deep = g.replay((0, 0, 0, 0, 0))
    with pytest.raises(MatchDesync):
        cr_play(st, g.infoset_key(deep, 1), B, rng)


@pytest.mark.parametrize("mode", ["keep", "reset"])
def test_full_match_is_legal_and_kps_consistent(mode):
    g = make_game("GP(3,2,2,2)")
    rng = np.random.default_rng(5)
    for player in (0, 1):
        st = cr_init(g, player, Budget(iterations=500), seed=player, config=CRConfig(mode=mode))
        h = g.root()
        while g.player(h) != TERMINAL:
            p = g.player(h)
            k = g.num_actions(h)
            if p == player:
                a, st = cr_play(st, g.infoset_key(h, p), B, rng)
                assert 0 <= a < k
            elif p < 0:
                probs = np.asarray(g.chance_probs(h))
                a = int(rng.choice(k, p=probs))
            else:
                a = int(rng.integers(k))
            h = g.child(h, a)
        idx = st.index
        for s in st.kps:
            for i in idx.isets_at[player][s]:
                assert st.known[i]
                assert st.policy(i).sum() == pytest.approx(1.0)


def test_fork_isolates_state():
    g = make_game("IIGS(4)")
    ag = MCCRAgent()
    ag.init(g, 1, 0, Budget(iterations=300))
    other = ag.fork()
    s = next(iter(ag.state.nps))
    other.public_policy(s, B)
    assert s not in ag.state.kps and s in other.state.kps


def test_exact_resolver_is_nearly_unexploitable():
    g = make_game("IIGS(4)")
    cfg = CRConfig(resolver="cfr")
    for player in (0, 1):
        ag = MCCRAgent(cfg)
        ag.init(g, player, 0, Budget(iterations=2000))
        flat = combined_strategy(ag, g, player, Budget(iterations=2000))
        assert player_exploitability(g, flat, player) < 1e-2


def test_agent_config_echo():
    c = MCCRAgent(CRConfig(mode="keep", epsilon=0.4)).config()
    assert c["mode"] == "keep" and c["epsilon"] == 0.4 and c["targeting"] == 0.9
