"""Pure numpy versions of the compiled kernels in ``_ext.pyx``.

Signatures and results match the compiled module: ``adagrad_rows``,
``scatter_add_rows`` and ``filtered_ranks`` bit for bit,
``contrastive_coefficients`` up to summation order (~1e-15 relative).
"""

import numpy as np


def adagrad_rows(param, acc, rows, grad, lr, eps):
    # rows must be unique; fancy assignment would drop duplicates
    a = acc[rows] + grad * grad
    acc[rows] = a
    param[rows] = param[rows] - lr * grad / (np.sqrt(a) + eps)


def scatter_add_rows(out, rows, vals):
    np.add.at(out, rows, vals)


def filtered_ranks(scores, answers, slots, fptr, fidx):
    nq, ne = scores.shape
    qi = np.arange(nq)
    true_scores = scores[qi, answers]
    counts = (scores >= true_scores[:, None]).sum(axis=1).astype(np.int64)

    has = slots >= 0
    starts = np.where(has, fptr[np.maximum(slots, 0)], 0)
    ends = np.where(has, fptr[np.maximum(slots, 0) + 1], 0)
    lengths = ends - starts
    if lengths.sum():
        owner = np.repeat(qi, lengths)
        offsets = np.arange(lengths.sum()) - np.repeat(np.cumsum(lengths) - lengths, lengths)
        cand = fidx[np.repeat(starts, lengths) + offsets]
        hit = (cand != answers[owner]) & (scores[owner, cand] >= true_scores[owner])
        counts -= np.bincount(owner[hit], minlength=nq)

    counts[np.isnan(true_scores)] = ne
    return counts


def contrastive_coefficients(sim, pos, self_col, tau):
    m, n = sim.shape
    not_self = np.ones((m, n), dtype=bool)
    not_self[np.arange(m), self_col] = False
    pos = pos.astype(bool) & not_self
    neg = ~pos & not_self

    npos = pos.sum(axis=1)
    counted = npos > 0
    live = counted & neg.any(axis=1)

    logits = sim / tau
    neg_logits = np.where(neg, logits, -np.inf)
    mx = neg_logits.max(axis=1, initial=-np.inf)
    mx = np.where(np.isfinite(mx), mx, 0.0)
    e = np.exp(neg_logits - mx[:, None])
    z = e.sum(axis=1)

    safe_z = np.where(live, z, 1.0)
    safe_npos = np.maximum(npos, 1)
    lse = mx + np.log(safe_z)
    psum = np.where(pos, logits, 0.0).sum(axis=1)
    terms = np.where(live, lse - psum / safe_npos, 0.0)

    w = e / (safe_z * tau)[:, None]
    w = np.where(pos, (-1.0 / (tau * safe_npos))[:, None], w)
    w[~live] = 0.0
    return terms, counted.astype(np.uint8), w
