"""Weighted in-batch contrastive loss over entities and entity-relation couples.

For each anchor row ``i`` of a view with in-batch positives ``P(i)`` and
negatives ``N(i)`` (every other row that is not a positive)::

    term_i = -1/|P(i)| * sum_{j in P(i)} [ s_ij / tau - logsumexp_{k in N(i)} s_ik / tau ]

with ``s_ij = z_i . z_j``. The anchor itself and its positives are not in
the denominator, so a term can be negative. A view's value is the mean of
``term_i`` over anchors with a non-empty ``P(i)``; anchors whose ``N(i)``
is empty count as zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels as _kernels
from .data import KINDS
from .errors import ConfigError
from .model import GradientSet, couple_hr, couple_hr_backward, couple_rt, couple_rt_backward

# shared (h, r, t) columns that make two rows positives, per kind
SHARED_COLUMNS = {"head": (1, 2), "tail": (0, 1), "hr": (2,), "rt": (0,)}


@dataclass(frozen=True)
class CLConfig:
    tau: float = 0.5
    alpha_h: float = 0.0
    alpha_t: float = 0.0
    alpha_hr: float = 0.0
    alpha_tr: float = 0.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ConfigError(f"tau must be > 0, got {self.tau}")
        for kind in KINDS:
            if not self.weight(kind) >= 0:
                raise ConfigError(f"alpha for {kind} must be >= 0, got {self.weight(kind)}")

    def weight(self, kind):
        return {
            "head": self.alpha_h,
            "tail": self.alpha_t,
            "hr": self.alpha_hr,
            "rt": self.alpha_tr,
        }[kind]

    def active_kinds(self):
        return tuple(k for k in KINDS if self.weight(k) != 0)


@dataclass
class View:
    """One kind's rows, positive mask and anchor flags for a batch."""

    kind: str
    triples: np.ndarray
    rows: np.ndarray
    positive: np.ndarray
    anchor: np.ndarray

    def negative(self):
        n = len(self.rows)
        return ~self.positive & ~np.eye(n, dtype=bool)


def positive_mask(triples, kind):
    """``(i, j)`` is True when rows i != j share the kind's structure."""
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    cols = SHARED_COLUMNS[kind]
    same = np.ones((len(triples), len(triples)), dtype=bool)
    for c in cols:
        same &= triples[:, c][:, None] == triples[:, c][None, :]
    np.fill_diagonal(same, False)
    return same


def representations(params, triples, kind):
    h, r, t = np.asarray(triples, dtype=np.int64).reshape(-1, 3).T
    if kind == "head":
        return params.entity[h]
    if kind == "tail":
        return params.entity[t]
    if kind == "hr":
        return couple_hr(params, h, r)
    if kind == "rt":
        return couple_rt(params, t, r)
    raise ValueError(kind)


def build_views(params, batch, kind):
    """The view of ``batch`` for ``kind``; augmented rows are never anchors."""
    triples = batch.triples
    anchor = np.zeros(len(triples), dtype=bool)
    anchor[: batch.n_anchors] = True
    return View(kind, triples, representations(params, triples, kind), positive_mask(triples, kind), anchor)


def cl_term(view, tau, backend=None):
    """Value of one contrastive term and its gradient w.r.t. ``view.rows``."""
    k = backend or _kernels
    z = np.ascontiguousarray(view.rows)
    idx = np.flatnonzero(view.anchor).astype(np.int64)
    za = z[idx]
    sim = np.ascontiguousarray(za @ z.T)
    terms, counted, w = k.contrastive_coefficients(
        sim, np.ascontiguousarray(view.positive[idx], dtype=np.uint8), idx, float(tau)
    )
    m = int(np.asarray(counted).sum())
    grad = np.zeros_like(z)
    if m == 0:
        return 0.0, grad
    w = np.asarray(w)
    # d/dz of sum_i term_i(s_i.) with s_ij = z_i . z_j
    grad += w.T @ za
    grad[idx] += w @ z
    grad /= m
    return float(np.asarray(terms).sum() / m), grad


def view_backward(params, view, grad_rows, grads):
    h, r, t = view.triples.T
    if view.kind == "head":
        grads.add_rows("entity", h, grad_rows)
    elif view.kind == "tail":
        grads.add_rows("entity", t, grad_rows)
    elif view.kind == "hr":
        couple_hr_backward(params, h, r, grad_rows, grads)
    else:
        couple_rt_backward(params, t, r, grad_rows, grads)


def weighted_cl_loss(params, batch, cfg, grads=None, backend=None):
    """``sum_kind alpha_kind * term_kind``; zero-weight kinds are skipped.

    Returns ``(value, per_kind)`` where ``per_kind`` maps every kind to its
    unweighted term (0.0 for skipped kinds).
    """
    per_kind = dict.fromkeys(KINDS, 0.0)
    total = 0.0
    for kind in cfg.active_kinds():
        alpha = cfg.weight(kind)
        view = build_views(params, batch, kind)
        value, g = cl_term(view, cfg.tau, backend)
        per_kind[kind] = value
        total += alpha * value
        if grads is not None:
            view_backward(params, view, alpha * g, grads)
    return total, per_kind


def cl_gradients(params, batch, cfg):
    grads = GradientSet(params)
    value, per_kind = weighted_cl_loss(params, batch, cfg, grads)
    return value, per_kind, grads


def analytic_grad_head_term(view, tau, row):
    """Closed-form gradient of ``term_row`` w.r.t. ``z_row`` alone.

    ``-sum_P z_j / (tau |P|) + sum_N exp(s_ik / tau) z_k / (tau sum_N exp(s_ik / tau))``.
    Used to cross-check :func:`cl_term`.
    """
    z = view.rows
    pos = view.positive[row]
    neg = view.negative()[row]
    if not pos.any() or not neg.any():
        raise ValueError(f"row {row} needs at least one positive and one negative")
    logits = z[neg] @ z[row] / tau
    e = np.exp(logits - logits.max())
    pull = z[pos].sum(axis=0) / (tau * pos.sum())
    push = (e[:, None] * z[neg]).sum(axis=0) / (tau * e.sum())
    return -pull + push
