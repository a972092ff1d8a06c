"""Numba kernels over GameTree arrays."""

from __future__ import annotations

import numpy as np
from numba import njit

REGRET_CLIP = 1e12


@njit(cache=True)
def edge_probs(parent, edge, chance, flat):
    n = len(parent)
    out = np.ones(n)
    for v in range(1, n):
        e = edge[v]
        out[v] = flat[e] if e >= 0 else chance[v]
    return out


@njit(cache=True)
def reach(player, parent, edge, chance, flat):
    """Per-node reach split into (player 0, player 1, chance) factors."""
    n = len(parent)
    r = np.ones((n, 3))
    for v in range(1, n):
        p = parent[v]
        e = edge[v]
        pr = flat[e] if e >= 0 else chance[v]
        r[v, 0] = r[p, 0]
        r[v, 1] = r[p, 1]
        r[v, 2] = r[p, 2]
        pl = player[p]
        r[v, pl if pl >= 0 else 2] *= pr
    return r


@njit(cache=True)
def node_values(player, parent, edge, chance, utility, flat):
    """Expected player-0 utility of every subtree."""
    n = len(parent)
    val = np.zeros(n)
    for v in range(n):
        if player[v] == -2:
            val[v] = utility[v]
    for v in range(n - 1, 0, -1):
        e = edge[v]
        pr = flat[e] if e >= 0 else chance[v]
        val[parent[v]] += pr * val[v]
    return val


@njit(cache=True)
def best_response(player, parent, first_child, num_children, edge, chance, utility, infoset,
                  iset_player, iset_offset, iset_own_depth, flat, responder):
    """Counterfactual best response of ``responder`` against ``flat``.

    Returns the profile with the responder's part replaced and the
    responder's expected utility. Infosets are decided deepest-first so every
    responder infoset, reachable or not, maximizes its counterfactual value.
    Ties go to the lowest action id.
    """
    n = len(parent)
    sign = 1.0 if responder == 0 else -1.0
    opp = np.ones(n)
    for v in range(1, n):
        p = parent[v]
        if player[p] != responder:
            e = edge[v]
            opp[v] = opp[p] * (flat[e] if e >= 0 else chance[v])
        else:
            opp[v] = opp[p]
    br = flat.copy()
    max_d = -1
    for s in range(len(iset_player)):
        if iset_player[s] == responder and iset_own_depth[s] > max_d:
            max_d = iset_own_depth[s]
    nodes = np.empty(n, dtype=np.int64)
    m = 0
    for v in range(n):
        if player[v] == responder:
            nodes[m] = v
            m += 1
    q = np.zeros(len(flat))
    for d in range(max_d, -1, -1):
        val = node_values(player, parent, edge, chance, utility, br)
        for j in range(m):
            v = nodes[j]
            s = infoset[v]
            if iset_own_depth[s] != d:
                continue
            off = iset_offset[s]
            for a in range(num_children[v]):
                q[off + a] += opp[v] * sign * val[first_child[v] + a]
        for s in range(len(iset_player)):
            if iset_player[s] != responder or iset_own_depth[s] != d:
                continue
            lo = iset_offset[s]
            hi = iset_offset[s + 1]
            best = lo
            for k in range(lo + 1, hi):
                if q[k] > q[best] + 1e-12 * (1.0 + abs(q[best])):
                    best = k
            for k in range(lo, hi):
                br[k] = 0.0
            br[best] = 1.0
    val = node_values(player, parent, edge, chance, utility, br)
    return br, sign * val[0]


@njit(cache=True)
def regret_matching_flat(regret, iset_offset, out):
    for s in range(len(iset_offset) - 1):
        lo = iset_offset[s]
        hi = iset_offset[s + 1]
        tot = 0.0
        for k in range(lo, hi):
            if regret[k] > 0.0:
                tot += regret[k]
        if tot > 0.0:
            for k in range(lo, hi):
                out[k] = regret[k] / tot if regret[k] > 0.0 else 0.0
        else:
            for k in range(lo, hi):
                out[k] = 1.0 / (hi - lo)


@njit(cache=True)
def cfr_iteration(player, parent, first_child, num_children, edge, chance, utility, infoset,
                  iset_offset, regret, avg, sigma):
    """One simultaneous vanilla CFR update of both players."""
    regret_matching_flat(regret, iset_offset, sigma)
    r = reach(player, parent, edge, chance, sigma)
    val = node_values(player, parent, edge, chance, utility, sigma)
    n = len(parent)
    delta = np.zeros(len(regret))
    for v in range(n):
        p = player[v]
        if p < 0:
            continue
        s = infoset[v]
        off = iset_offset[s]
        sign = 1.0 if p == 0 else -1.0
        cf = r[v, 1 - p] * r[v, 2]
        own = r[v, p]
        u = sign * val[v]
        for a in range(num_children[v]):
            delta[off + a] += cf * (sign * val[first_child[v] + a] - u)
            avg[off + a] += own * sigma[off + a]
    for k in range(len(regret)):
        regret[k] += delta[k]


@njit(cache=True)
def _sample(probs, k, u):
    acc = 0.0
    for a in range(k):
        acc += probs[a]
        if u < acc:
            return a
    for a in range(k - 1, -1, -1):
        if probs[a] > 0.0:
            return a
    return k - 1


@njit(cache=True)
def os_run(player, first_child, num_children, infoset, iset_offset, chance, utility, both,
           regret, avg, in_mem, arith, wnum, wden, consistent, rng, iterations, epsilon,
           targeting, incremental, track_cfv, use_both, stats):
    """Outcome-sampling MCCFR iterations (one sample per player each).

    ``stats`` accumulates [samples, min q(z)]. Infosets missing from memory
    are added one per sample; the playout below them is uniform and performs
    no updates. With ``targeting`` > 0 a sample is drawn with that
    probability from the distribution restricted to ``consistent`` nodes and
    q(z) is the exact mixture probability.
    """
    maxd = 64
    width = 1
    for v in range(len(num_children)):
        if num_children[v] > width:
            width = num_children[v]
    path = np.empty(maxd, dtype=np.int64)
    act = np.empty(maxd, dtype=np.int64)
    pi = np.ones((maxd + 1, 3))
    qt = np.ones(maxd + 1)
    qu = np.ones(maxd + 1)
    sig = np.empty((maxd, width))
    uval = np.empty(maxd + 1)
    samp = np.empty(width)
    tgt = np.empty(width)
    has_target = targeting > 0.0
    for _ in range(iterations):
        for i in range(2):
            targeted = has_target and rng.random() < targeting
            v = 0
            L = 0
            add_pos = -1
            playout = False
            while player[v] != -2:
                if L >= maxd:
                    raise ValueError("history deeper than kernel buffer")
                pl = player[v]
                k = num_children[v]
                fc = first_child[v]
                path[L] = v
                if pl == -1:
                    for a in range(k):
                        sig[L, a] = chance[fc + a]
                        samp[a] = sig[L, a]
                else:
                    s = infoset[v]
                    off = iset_offset[s]
                    use_rm = not playout
                    if use_rm and incremental and not in_mem[s]:
                        in_mem[s] = True
                        add_pos = L
                        playout = True
                        use_rm = True
                    if use_rm:
                        tot = 0.0
                        for a in range(k):
                            if regret[off + a] > 0.0:
                                tot += regret[off + a]
                        for a in range(k):
                            if tot > 0.0:
                                sig[L, a] = regret[off + a] / tot if regret[off + a] > 0.0 else 0.0
                            else:
                                sig[L, a] = 1.0 / k
                    else:
                        for a in range(k):
                            sig[L, a] = 1.0 / k
                    for a in range(k):
                        samp[a] = (1.0 - epsilon) * sig[L, a] + epsilon / k if pl == i else sig[L, a]
                pi[L + 1, 0] = pi[L, 0]
                pi[L + 1, 1] = pi[L, 1]
                pi[L + 1, 2] = pi[L, 2]
                if use_both and both[v]:
                    a = -1
                    for b in range(k):
                        if player[fc + b] != -2:
                            a = b
                    qt[L + 1] = qt[L]
                    qu[L + 1] = qu[L]
                else:
                    mass = 0.0
                    ncons = 0
                    if has_target:
                        for b in range(k):
                            if consistent[fc + b]:
                                mass += samp[b]
                                ncons += 1
                        for b in range(k):
                            if not consistent[fc + b]:
                                tgt[b] = 0.0
                            elif mass > 0.0:
                                tgt[b] = samp[b] / mass
                            else:
                                tgt[b] = 1.0 / ncons
                    u = rng.random()
                    if targeted:
                        a = _sample(tgt, k, u)
                    else:
                        a = _sample(samp, k, u)
                    qu[L + 1] = qu[L] * samp[a]
                    qt[L + 1] = qt[L] * tgt[a] if has_target else 0.0
                pi[L + 1, pl if pl >= 0 else 2] *= sig[L, a]
                act[L] = a
                v = fc + a
                L += 1
            if add_pos < 0:
                add_pos = L - 1
            uz = utility[v] if i == 0 else -utility[v]
            qz = targeting * qt[L] + (1.0 - targeting) * qu[L] if has_target else qu[L]
            if qz <= 0.0:
                raise ValueError("sampled a terminal with zero probability")
            stats[0] += 1.0
            if qz < stats[1]:
                stats[1] = qz
            uval[L] = uz
            for pos in range(L - 1, -1, -1):
                v = path[pos]
                pl = player[v]
                k = num_children[v]
                fc = first_child[v]
                a = act[pos]
                qh = targeting * qt[pos] + (1.0 - targeting) * qu[pos] if has_target else qu[pos]
                qc = targeting * qt[pos + 1] + (1.0 - targeting) * qu[pos + 1] if has_target else qu[pos + 1]
                sampled = uval[pos + 1] * qh / qc
                bb = use_both and both[v]
                uh = 0.0
                for b in range(k):
                    if b == a:
                        uh += sig[pos, b] * sampled
                    elif bb:
                        ub = utility[fc + b] if i == 0 else -utility[fc + b]
                        uh += sig[pos, b] * ub
                uval[pos] = uh
                if pos > add_pos:
                    continue
                if pl >= 0:
                    s = infoset[v]
                    off = iset_offset[s]
                    if pl == i:
                        w = pi[pos, 1 - i] * pi[pos, 2] / qh
                        for b in range(k):
                            if b == a:
                                ub = sampled
                            elif bb:
                                ub = utility[fc + b] if i == 0 else -utility[fc + b]
                            else:
                                ub = 0.0
                            r = regret[off + b] + w * (ub - uh)
                            if r > REGRET_CLIP:
                                r = REGRET_CLIP
                            elif r < -REGRET_CLIP:
                                r = -REGRET_CLIP
                            regret[off + b] = r
                    else:
                        w = pi[pos, pl] / qh
                        for b in range(k):
                            avg[off + b] += w * sig[pos, b]
                if track_cfv:
                    full = pi[pos, 0] * pi[pos, 1] * pi[pos, 2]
                    for p in range(2):
                        up = uh if p == i else -uh
                        vt = pi[pos, 1 - p] * pi[pos, 2] * up / qh
                        arith[v, p] += vt
                        wnum[v, p] += full * vt
                    wden[v] += full / qh


@njit(cache=True)
def mark_consistent(parent, nodes, out):
    """Flag ``nodes`` with all their descendants and ancestors."""
    for v in nodes:
        out[v] = True
    for v in range(1, len(parent)):
        if out[parent[v]]:
            out[v] = True
    for v in nodes:
        while v > 0:
            v = parent[v]
            out[v] = True
