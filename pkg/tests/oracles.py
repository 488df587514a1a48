"""Slow, literal reference implementations used as test oracles.

Nothing here calls into the vectorized code paths it is compared with.
"""

import math

import numpy as np


def brute_force_indexes(train):
    """The four positive indexes by scanning all triples once per key."""
    train = [tuple(int(x) for x in row) for row in train]
    head, tail, hr, rt = {}, {}, {}, {}
    for (h, r, t) in train:
        if (r, t) not in head:
            head[(r, t)] = sorted({h2 for (h2, r2, t2) in train if (r2, t2) == (r, t)})
        if (h, r) not in tail:
            tail[(h, r)] = sorted({t2 for (h2, r2, t2) in train if (h2, r2) == (h, r)})
        if t not in hr:
            hr[t] = sorted({(h2, r2) for (h2, r2, t2) in train if t2 == t})
        if h not in rt:
            rt[h] = sorted({(r2, t2) for (h2, r2, t2) in train if h2 == h})
    return head, tail, hr, rt


def scalar_score(params, h, r, t):
    """Score by explicit scalar loops over the factorization."""
    d = params.dim
    total = 0.0
    if params.kind == "rescal":
        E, R = params.entity, params.relation
        for i in range(d):
            for j in range(d):
                total += float(E[h, i]) * float(R[r, i, j]) * float(E[t, j])
        return total
    acc = 0j
    for m in range(d):
        hm = complex(params.entity[h, m], params.entity[h, d + m])
        rm = complex(params.relation[r, m], params.relation[r, d + m])
        tm = complex(params.entity[t, m], params.entity[t, d + m])
        acc += hm * rm * tm.conjugate()
    return acc.real


def literal_cl_term(z, triples, kind, n_anchors, tau):
    """Contrastive term evaluated straight from its definition with loops."""
    shared = {"head": (1, 2), "tail": (0, 1), "hr": (2,), "rt": (0,)}[kind]
    n = len(z)

    def sim(i, j):
        return sum(float(z[i][k]) * float(z[j][k]) for k in range(len(z[i])))

    terms = []
    for i in range(n_anchors):
        P = [j for j in range(n) if j != i and all(triples[j][c] == triples[i][c] for c in shared)]
        N = [j for j in range(n) if j != i and j not in P]
        if not P:
            continue
        if not N:
            terms.append(0.0)
            continue
        denom = sum(math.exp(sim(i, k) / tau) for k in N)
        total = 0.0
        for j in P:
            total += math.log(math.exp(sim(i, j) / tau) / denom)
        terms.append(-total / len(P))
    return sum(terms) / len(terms) if terms else 0.0


def central_difference(f, arrays, step=1e-4):
    """Central-difference gradient of scalar ``f()`` w.r.t. every array entry.

    ``arrays`` are perturbed in place and restored.
    """
    out = []
    for a in arrays:
        g = np.zeros_like(a)
        flat, gflat = a.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + step
            fp = f()
            flat[i] = old - step
            fm = f()
            flat[i] = old
            gflat[i] = (fp - fm) / (2 * step)
        out.append(g)
    return out


def max_relative_error(analytic, numeric, floor=1e-6):
    """max |a - n| / max(|a|, |n|, floor) over all entries."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)) if a.size else 0.0)
    return worst


def known_triples(store):
    """All true (h, r, t) of every split, original relations only."""
    out = set()
    for name in ("train", "valid", "test"):
        for h, r, t in store.splits[name]:
            if r < store.n_base_relations:
                out.add((int(h), int(r), int(t)))
    return out


def brute_force_rank(params, store, triple, direction, score_fn, filtered=True):
    """Rank by scoring every candidate one at a time via ``score_fn``."""
    h, r, t = (int(x) for x in triple)
    known = known_triples(store) if filtered else set()
    nb = store.n_base_relations
    if direction == "tail":
        answer = t
        candidate = lambda k: (h, r, k)  # noqa: E731
        score = lambda k: score_fn(h, r, k)  # noqa: E731
    else:
        answer = h
        candidate = lambda k: (k, r, t)  # noqa: E731
        if store.reciprocal:
            score = lambda k: score_fn(t, r + nb, k)  # noqa: E731
        else:
            score = lambda k: score_fn(k, r, t)  # noqa: E731
    s_true = score(answer)
    rank = 1
    for k in range(store.n_entities):
        if k == answer or candidate(k) in known:
            continue
        if score(k) >= s_true:
            rank += 1
    return rank
