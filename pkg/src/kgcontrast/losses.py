"""Fitting loss (full multiclass log-loss) and the DURA regularizer."""

import numpy as np

from .model import couple_hr, couple_hr_backward, couple_rt, couple_rt_backward


def multiclass_log_loss(scores, target):
    """``-scores[target] + logsumexp(scores)`` and its gradient.

    ``scores`` is a vector (``target`` an int) or a matrix with one target
    per row, in which case the loss comes back per row.
    """
    scores = np.asarray(scores, dtype=np.float64)
    s2 = np.atleast_2d(scores)
    tgt = np.atleast_1d(np.asarray(target, dtype=np.int64))
    rows = np.arange(len(s2))
    mx = s2.max(axis=1, keepdims=True)
    e = np.exp(s2 - mx)
    z = e.sum(axis=1, keepdims=True)
    loss = (mx[:, 0] + np.log(z[:, 0])) - s2[rows, tgt]
    grad = e / z
    grad[rows, tgt] -= 1.0
    if scores.ndim == 1:
        return float(loss[0]), grad[0]
    return loss, grad


def fitting_loss(params, triples, grads=None):
    """Mean tail-prediction log-loss of ``triples`` against all entities.

    Accumulates gradients into ``grads`` when given. The candidate side is
    dense: every entity row receives a gradient.
    """
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    h, r, t = triples.T
    c = couple_hr(params, h, r)
    scores = c @ params.entity.T
    loss, g = multiclass_log_loss(scores, t)
    n = len(triples)
    if grads is not None:
        g /= n
        grads.add_dense("entity", g.T @ c)
        couple_hr_backward(params, h, r, g @ params.entity, grads)
    return float(loss.sum() / n)


def dura(params, triples, reg_weight, grads=None, reduction="mean"):
    """``reg_weight * (|hR|^2 + |t|^2 + |h|^2 + |conj(t) R^T|^2)`` per triple.

    ``reduction`` is ``"mean"`` (the training objective) or ``"sum"``.
    """
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    if reg_weight == 0 or len(triples) == 0:
        return 0.0
    if reduction not in ("mean", "sum"):
        raise ValueError(reduction)
    h, r, t = triples.T
    chr_ = couple_hr(params, h, r)
    crt = couple_rt(params, t, r)
    eh, et = params.entity[h], params.entity[t]
    per = (chr_ * chr_).sum(1) + (et * et).sum(1) + (eh * eh).sum(1) + (crt * crt).sum(1)
    scale = reg_weight / len(triples) if reduction == "mean" else reg_weight
    if grads is not None:
        k = 2.0 * scale
        grads.add_rows("entity", t, k * et)
        grads.add_rows("entity", h, k * eh)
        couple_hr_backward(params, h, r, k * chr_, grads)
        couple_rt_backward(params, t, r, k * crt, grads)
    return float(scale * per.sum())

