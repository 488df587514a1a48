"""RESCAL and ComplEx parameters, scoring kernels and analytic gradients.

Entity rows live in one table shared by the head and tail roles. ComplEx
rows use a split-half layout ``[real | imag]``, so a ComplEx score is the
real dot product of a couple representation with a layout row::

    f(h, r, t) = Re(<h R, conj(t)>) = couple_hr(h, r) . t

RESCAL relation parameters are full ``d x d`` matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

RESCAL = "rescal"
COMPLEX = "complex"
MODEL_KINDS = (RESCAL, COMPLEX)


@dataclass
class ModelParams:
    kind: str
    dim: int
    entity: np.ndarray
    relation: np.ndarray

    @property
    def n_entities(self):
        return self.entity.shape[0]

    @property
    def n_relations(self):
        return self.relation.shape[0]

    @property
    def width(self):
        """Stored columns per entity row (``d`` or ``2d``)."""
        return self.entity.shape[1]

    def tables(self):
        """2-D views of every parameter table, keyed by name."""
        return {
            "entity": self.entity,
            "relation": self.relation.reshape(self.relation.shape[0], -1),
        }

    def copy(self):
        return ModelParams(self.kind, self.dim, self.entity.copy(), self.relation.copy())

    def all_finite(self):
        return bool(np.isfinite(self.entity).all() and np.isfinite(self.relation).all())


def _check_kind(kind):
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


def init_params(kind, n_entities, n_relations, dim, init_scale=1e-3, rng=None):
    """Draw every entry from ``Normal(0, 1) * init_scale``."""
    _check_kind(kind)
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = np.random.default_rng(rng)
    width = dim if kind == RESCAL else 2 * dim
    entity = rng.standard_normal((n_entities, width)) * init_scale
    if kind == RESCAL:
        relation = rng.standard_normal((n_relations, dim, dim)) * init_scale
    else:
        relation = rng.standard_normal((n_relations, width)) * init_scale
    return ModelParams(kind, dim, entity, relation)


def _split(x, d):
    return x[..., :d], x[..., d:]


def _join(re, im):
    return np.concatenate([re, im], axis=-1)


def conj(params, x):
    """Complex conjugate in storage layout (identity for RESCAL)."""
    if params.kind == RESCAL:
        return x
    re, im = _split(x, params.dim)
    return _join(re, -im)


def couple_hr(params, h, r):
    """``h R``: the representation of the (head, relation) couple."""
    e = params.entity[h]
    if params.kind == RESCAL:
        return np.einsum("...i,...ij->...j", e, params.relation[r])
    d = params.dim
    hr_, hi = _split(e, d)
    rr, ri = _split(params.relation[r], d)
    return _join(hr_ * rr - hi * ri, hr_ * ri + hi * rr)


def couple_rt(params, t, r):
    """``conj(t) R^T``: the representation of the (relation, tail) couple."""
    e = params.entity[t]
    if params.kind == RESCAL:
        return np.einsum("...ij,...j->...i", params.relation[r], e)
    d = params.dim
    tr, ti = _split(e, d)
    rr, ri = _split(params.relation[r], d)
    return _join(tr * rr + ti * ri, tr * ri - ti * rr)


def score_triple(params, h, r, t):
    """``Re(h R conj(t)^T)``; works elementwise on id arrays."""
    out = np.sum(couple_hr(params, h, r) * params.entity[t], axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def score_all_tails(params, h, r):
    """Scores of ``(h, r, k)`` for every entity ``k``.

    Scalar ids give a ``(|E|,)`` vector; id arrays give ``(len(h), |E|)``.
    """
    return couple_hr(params, h, r) @ params.entity.T


def score_all_heads(params, r, t):
    """Scores of ``(k, r, t)`` for every entity ``k``."""
    return conj(params, couple_rt(params, t, r)) @ params.entity.T


class GradientSet:
    """Row-sparse gradient accumulator keyed by (table, row).

    Contributions are summed in the order they are added. ``rows(table)``
    returns the touched rows with a nonzero gradient and their values, in
    ascending row order.
    """

    def __init__(self, params):
        self._widths = {k: v.shape[1] for k, v in params.tables().items()}
        self._heights = {k: v.shape[0] for k, v in params.tables().items()}
        self._chunks = {k: [] for k in self._widths}
        self._dense = {k: None for k in self._widths}
        self._cache = {}

    def add_rows(self, table, rows, values):
        rows = np.asarray(rows, dtype=np.int64).ravel()
        if len(rows) == 0:
            return
        values = np.asarray(values, dtype=np.float64).reshape(len(rows), self._widths[table])
        self._chunks[table].append((rows, values))
        self._cache.pop(table, None)

    def add_dense(self, table, values):
        values = np.asarray(values, dtype=np.float64).reshape(self._heights[table], self._widths[table])
        if self._dense[table] is None:
            self._dense[table] = values.copy()
        else:
            self._dense[table] += values
        self._cache.pop(table, None)

    def rows(self, table):
        if table in self._cache:
            return self._cache[table]
        chunks = self._chunks[table]
        dense = self._dense[table]
        if dense is not None:
            acc = dense.copy()
            for rows, vals in chunks:
                kernels.scatter_add_rows(acc, rows, np.ascontiguousarray(vals))
            idx = np.arange(len(acc), dtype=np.int64)
        elif chunks:
            all_rows = np.concatenate([c[0] for c in chunks])
            all_vals = np.ascontiguousarray(np.concatenate([c[1] for c in chunks]))
            idx, inverse = np.unique(all_rows, return_inverse=True)
            acc = np.zeros((len(idx), self._widths[table]))
            kernels.scatter_add_rows(acc, inverse.astype(np.int64).ravel(), all_vals)
        else:
            idx = np.zeros(0, dtype=np.int64)
            acc = np.zeros((0, self._widths[table]))
        nz = np.any(acc != 0, axis=1)
        if not nz.all():
            idx, acc = idx[nz], acc[nz]
        out = (np.ascontiguousarray(idx, dtype=np.int64), np.ascontiguousarray(acc))
        self._cache[table] = out
        return out

    def tables(self):
        return list(self._widths)

    def is_empty(self):
        return all(len(self.rows(t)[0]) == 0 for t in self._widths)

    def to_dense(self, params):
        """Full-shape gradient arrays matching ``params.tables()``."""
        out = {}
        for name, table in params.tables().items():
            g = np.zeros_like(table)
            rows, vals = self.rows(name)
            g[rows] = vals
            out[name] = g
        return out


def couple_hr_backward(params, h, r, grad_couple, grads):
    """Accumulate the gradient flowing into ``couple_hr(h, r)``."""
    h = np.asarray(h, dtype=np.int64).ravel()
    r = np.asarray(r, dtype=np.int64).ravel()
    g = np.asarray(grad_couple).reshape(len(h), -1)
    e = params.entity[h]
    if params.kind == RESCAL:
        rel = params.relation[r]
        grads.add_rows("entity", h, np.einsum("bij,bj->bi", rel, g))
        grads.add_rows("relation", r, np.einsum("bi,bj->bij", e, g))
        return
    d = params.dim
    gr, gi = _split(g, d)
    er, ei = _split(e, d)
    rr, ri = _split(params.relation[r], d)
    # d/dh = g * conj(r), d/dr = g * conj(h)
    grads.add_rows("entity", h, _join(gr * rr + gi * ri, gi * rr - gr * ri))
    grads.add_rows("relation", r, _join(gr * er + gi * ei, gi * er - gr * ei))


def couple_rt_backward(params, t, r, grad_couple, grads):
    """Accumulate the gradient flowing into ``couple_rt(t, r)``."""
    t = np.asarray(t, dtype=np.int64).ravel()
    r = np.asarray(r, dtype=np.int64).ravel()
    g = np.asarray(grad_couple).reshape(len(t), -1)
    e = params.entity[t]
    if params.kind == RESCAL:
        rel = params.relation[r]
        grads.add_rows("entity", t, np.einsum("bi,bij->bj", g, rel))
        grads.add_rows("relation", r, np.einsum("bi,bj->bij", g, e))
        return
    d = params.dim
    gr, gi = _split(g, d)
    er, ei = _split(e, d)
    rr, ri = _split(params.relation[r], d)
    # couple = conj(t) * r:  d/dt = conj(g) * r,  d/dr = g * t
    grads.add_rows("entity", t, _join(gr * rr + gi * ri, gr * ri - gi * rr))
    grads.add_rows("relation", r, _join(gr * er - gi * ei, gr * ei + gi * er))


def backward(params, triples, upstream, grads=None):
    """Gradient of ``sum_i upstream[i] * score(h_i, r_i, t_i)``.

    Returns a :class:`GradientSet` touching only the rows the triples
    reference; an all-zero upstream gives an empty set.
    """
    grads = GradientSet(params) if grads is None else grads
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    u = np.asarray(upstream, dtype=np.float64).ravel()
    keep = u != 0
    if not keep.any():
        return grads
    triples, u = triples[keep], u[keep]
    h, r, t = triples.T
    c = couple_hr(params, h, r)
    grads.add_rows("entity", t, u[:, None] * c)
    couple_hr_backward(params, h, r, u[:, None] * params.entity[t], grads)
    return grads
