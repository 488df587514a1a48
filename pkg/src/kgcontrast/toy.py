"""A small synthetic knowledge graph with known structure.

Entities are split at random into groups of ``group_size``. Each relation
``k`` maps group ``g`` to group ``pi_k(g)`` for a random permutation
``pi_k`` and links every member of ``g`` to every member of ``pi_k(g)``.
So every ``(h, r)`` query has ``group_size`` true tails, and two heads in
the same group share all of their ``(r, t)`` couples.
"""

from pathlib import Path

import numpy as np

from .data import SPLITS, TripleStore, Vocab


def grouped_graph(n_entities=200, group_size=2, n_relations=5, holdout=0.1, seed=0):
    """Build the graph and hold out ``holdout`` of it, half valid, half test."""
    if n_entities % group_size:
        raise ValueError("n_entities must be a multiple of group_size")
    rng = np.random.default_rng(seed)
    n_groups = n_entities // group_size
    perm = rng.permutation(n_entities)
    members = perm.reshape(n_groups, group_size)
    group = np.empty(n_entities, dtype=np.int64)
    group[perm] = np.arange(n_entities) // group_size

    triples = []
    for k in range(n_relations):
        target = rng.permutation(n_groups)
        for h in range(n_entities):
            for t in members[target[group[h]]]:
                triples.append((h, k, t))
    triples = np.array(triples, dtype=np.int64)[rng.permutation(len(triples))]

    n_hold = int(round(holdout * len(triples)))
    test, valid, train = triples[: n_hold // 2], triples[n_hold // 2 : n_hold], triples[n_hold:]
    entities = Vocab([f"e{i}" for i in range(n_entities)], frozen=True)
    relations = Vocab([f"r{k}" for k in range(n_relations)], frozen=True)
    return TripleStore(entities, relations, train, valid, test)


def write_dataset(store, directory):
    """Write ``train.txt``/``valid.txt``/``test.txt`` in the TSV layout."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ent, rel = store.entities, store.relations
    for split in SPLITS:
        rows = store.splits[split]
        rows = rows[rows[:, 1] < store.n_base_relations]
        with open(directory / f"{split}.txt", "w", encoding="utf-8") as f:
            for h, r, t in rows:
                f.write(f"{ent[int(h)]}\t{rel[int(r)]}\t{ent[int(t)]}\n")
    return directory
