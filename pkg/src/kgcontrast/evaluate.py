"""Filtered link prediction, per-relation breakdown, sparsity sweep, couple export."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels as _kernels
from .errors import DataError, VocabularyError
from .model import conj, couple_hr, couple_rt

HITS_AT = (1, 3, 10)
# upper bound on scores held in memory per chunk
CHUNK_ENTRIES = 1 << 22


@dataclass
class RelationStats:
    count: int
    mrr: float
    hits1: float
    hits10: float


@dataclass
class EvalReport:
    mrr: float
    hits: dict
    n_queries: int
    per_relation: dict = field(default_factory=dict)
    split: str = ""

    def records(self):
        """Flat machine-readable records: one per metric, one per relation."""
        out = [{"split": self.split, "metric": "mrr", "value": self.mrr}]
        out += [{"split": self.split, "metric": f"hits@{n}", "value": v} for n, v in sorted(self.hits.items())]
        out.append({"split": self.split, "metric": "n_queries", "value": self.n_queries})
        for name, s in self.per_relation.items():
            out.append({"split": self.split, "relation": name, "count": s.count,
                        "mrr": s.mrr, "hits@1": s.hits1, "hits@10": s.hits10})
        return out

    def to_json(self):
        return json.dumps(self.records(), indent=1)

    def table(self, per_relation=False):
        lines = [
            f"split={self.split or '-'}  queries={self.n_queries}",
            f"{'MRR':>8} {'H@1':>8} {'H@3':>8} {'H@10':>8}",
            f"{self.mrr:8.4f} " + " ".join(f"{self.hits[n]:8.4f}" for n in HITS_AT),
        ]
        if per_relation and self.per_relation:
            w = max(len("relation"), *(len(n) for n in self.per_relation))
            lines.append("")
            lines.append(f"{'relation':<{w}} {'#test':>6} {'MRR':>7} {'H@1':>7} {'H@10':>7}")
            for name, s in self.per_relation.items():
                lines.append(f"{name:<{w}} {s.count:>6d} {s.mrr:7.3f} {s.hits1:7.3f} {s.hits10:7.3f}")
        return "\n".join(lines)


def _check_ids(params, store, triples):
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    if len(triples) and (
        triples.min() < 0
        or triples[:, [0, 2]].max() >= min(store.n_entities, params.n_entities)
        or triples[:, 1].max() >= store.n_base_relations
    ):
        raise VocabularyError("query references an entity or relation outside the vocabulary")
    return triples


def _queries(store, triples, direction):
    """``(entity, relation, answer, tail_side)`` arrays for one direction.

    With reciprocals a head query ``(?, r, t)`` becomes the tail query
    ``(t, r^-1, ?)``.
    """
    h, r, t = triples.T
    if direction == "tail":
        return h, r, t, True
    if direction != "head":
        raise ValueError(direction)
    if store.reciprocal:
        return t, r + store.n_base_relations, h, True
    return t, r, h, False


def _chunk_ranks(params, filt, ent, rel, ans, tail_side, backend, raw):
    if tail_side:
        q = couple_hr(params, ent, rel)
    else:
        q = conj(params, couple_rt(params, ent, rel))
    scores = np.ascontiguousarray(q @ params.entity.T)
    slots = np.full(len(ent), -1, np.int64) if raw else filt.slots(ent, rel)
    return backend.filtered_ranks(scores, np.ascontiguousarray(ans), slots, filt.ptr, filt.answers)


def filtered_ranks(params, store, triples, direction="tail", threads=1, backend=None, raw=False):
    """Filtered (or, with ``raw=True``, unfiltered) ranks of the true answers.

    Known-true competitors from train, valid and test are skipped; among
    the rest, any candidate scoring at least the true score ranks above it.
    """
    backend = backend or _kernels
    triples = _check_ids(params, store, triples)
    ent, rel, ans, tail_side = _queries(store, triples, direction)
    filt = store.tail_filter if tail_side else store.head_filter
    size = max(1, CHUNK_ENTRIES // max(params.n_entities, 1))
    bounds = [(i, min(i + size, len(ent))) for i in range(0, len(ent), size)]

    def run(b):
        s = slice(*b)
        return _chunk_ranks(params, filt, ent[s], rel[s], ans[s], tail_side, backend, raw)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    return np.concatenate(parts) if parts else np.zeros(0, np.int64)


def filtered_rank(params, store, query, direction="tail", backend=None):
    return int(filtered_ranks(params, store, [query], direction, backend=backend)[0])


def _summary(ranks):
    rr = 1.0 / ranks
    return float(np.sum(rr) / len(ranks)), {n: float(np.mean(ranks <= n)) for n in HITS_AT}


def evaluate(params, store, split="test", threads=1, backend=None, triples=None):
    """Filtered MRR and Hits@{1,3,10} over head and tail queries of a split."""
    triples = store.splits[split] if triples is None else np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    if len(triples) == 0:
        raise DataError(f"cannot evaluate on an empty {split} split")
    tail = filtered_ranks(params, store, triples, "tail", threads, backend)
    head = filtered_ranks(params, store, triples, "head", threads, backend)
    ranks = np.concatenate([tail, head]).astype(np.float64)
    mrr, hits = _summary(ranks)

    rel = np.concatenate([triples[:, 1], triples[:, 1]]) % store.n_base_relations
    per_relation = {}
    for r in np.unique(rel):
        sel = ranks[rel == r]
        m, h = _summary(sel)
        per_relation[store.relations[int(r)]] = RelationStats(len(sel) // 2, m, h[1], h[10])
    return EvalReport(mrr, hits, len(ranks), per_relation, split)


def sparsify(params, keep_fraction):
    """Copy of ``params`` with the smallest-magnitude entity entries zeroed.

    Exactly ``ceil((1 - keep_fraction) * N)`` of the ``N`` entity-table
    entries become zero (one global magnitude threshold; ties broken by
    position). Relation parameters are kept as they are.
    """
    if not 0.0 <= keep_fraction <= 1.0:
        raise ValueError(f"keep_fraction must be in [0, 1], got {keep_fraction}")
    out = params.copy()
    flat = out.entity.reshape(-1)
    n = flat.size
    # the tolerance keeps e.g. (1 - 0.9) * 100 at 10, not 11
    k = min(n, max(0, math.ceil((1.0 - keep_fraction) * n - 1e-9)))
    if k:
        order = np.argsort(np.abs(flat), kind="stable")
        flat[order[:k]] = 0.0
    return out


def sparsity_sweep(params, store, keep_fractions, split="test", threads=1):
    """One record per keep fraction: zeroed entries and the filtered report."""
    results = []
    for f in keep_fractions:
        masked = sparsify(params, f)
        results.append({
            "keep_fraction": float(f),
            "masking": "proportion",
            "zeroed_entries": int(math.ceil((1.0 - f) * params.entity.size - 1e-9)),
            "report": evaluate(masked, store, split, threads),
        })
    return results


def sweep_records(results):
    out = []
    for r in results:
        rep = r["report"]
        out.append({
            "keep_fraction": r["keep_fraction"],
            "masking": r["masking"],
            "zeroed_entries": r["zeroed_entries"],
            "split": rep.split,
            "mrr": rep.mrr,
            **{f"hits@{n}": v for n, v in rep.hits.items()},
            "n_queries": rep.n_queries,
        })
    return out


def sweep_table(results):
    lines = [f"{'keep':>6} {'zeroed':>10} {'MRR':>8} {'H@1':>8} {'H@3':>8} {'H@10':>8}"]
    for r in sweep_records(results):
        lines.append(
            f"{r['keep_fraction']:6.3f} {r['zeroed_entries']:10d} {r['mrr']:8.4f} "
            f"{r['hits@1']:8.4f} {r['hits@3']:8.4f} {r['hits@10']:8.4f}"
        )
    return "\n".join(lines)


def export_couples(params, store, triples, which, path):
    """Write couple representations as CSV, one row per triple.

    Columns: anchor entity, relation, grouping entity (the shared tail for
    ``hr`` couples, the shared head for ``rt`` couples), then the values.
    """
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    h, r, t = triples.T
    if which == "hr":
        values, anchor, group = couple_hr(params, h, r), h, t
    elif which == "rt":
        values, anchor, group = couple_rt(params, t, r), t, h
    else:
        raise ValueError(f"which must be 'hr' or 'rt', got {which!r}")
    ent, rels = store.entities, store.relations
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["entity", "relation", "group"] + [f"v{i}" for i in range(values.shape[1])])
        for a, rr, g, v in zip(anchor, r, group, values):
            w.writerow([ent[int(a)], rels[int(rr)], ent[int(g)]] + [repr(float(x)) for x in v])
    return len(triples)
