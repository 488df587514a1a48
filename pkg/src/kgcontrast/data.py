"""Triple datasets, vocabularies, structural indexes and batch assembly."""

from __future__ import annotations

import hashlib
import logging
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, ParseError, VocabularyError

logger = logging.getLogger(__name__)

KINDS = ("head", "tail", "hr", "rt")
SPLITS = ("train", "valid", "test")
RECIPROCAL_SUFFIX = "^-1"
VOCAB_FILES = {"entities": "entities.vocab", "relations": "relations.vocab"}


class Vocab:
    """Ordered name <-> id table. Ids follow insertion order."""

    def __init__(self, names=(), frozen=False):
        self.names = []
        self._ids = {}
        for name in names:
            self._add(name)
        self.frozen = frozen

    def _add(self, name):
        if name in self._ids:
            raise VocabularyError(f"duplicate vocabulary entry {name!r}")
        self._ids[name] = len(self.names)
        self.names.append(name)

    def lookup(self, name):
        try:
            return self._ids[name]
        except KeyError:
            if self.frozen:
                raise VocabularyError(f"unknown name {name!r} in frozen vocabulary") from None
        self._ids[name] = len(self.names)
        self.names.append(name)
        return self._ids[name]

    def freeze(self):
        self.frozen = True
        return self

    def __len__(self):
        return len(self.names)

    def __contains__(self, name):
        return name in self._ids

    def __getitem__(self, idx):
        return self.names[idx]

    def save(self, path):
        Path(path).write_text("".join(n + "\n" for n in self.names), encoding="utf-8")

    @classmethod
    def load(cls, path):
        text = Path(path).read_text(encoding="utf-8")
        return cls(text.splitlines(), frozen=True)


def load_tsv(path, entities=None, relations=None):
    """Parse a tab-separated ``head<TAB>relation<TAB>tail`` file.

    Fresh vocabularies are created when none are passed; names are given
    ids in first-seen order. A frozen vocabulary rejects unknown names.
    Duplicate lines are dropped (first occurrence kept) with a warning.

    Returns ``(triples, entities, relations)`` with ``triples`` an
    ``(n, 3)`` int64 array of ``(head, relation, tail)`` ids.
    """
    entities = Vocab() if entities is None else entities
    relations = Vocab() if relations is None else relations
    rows = []
    seen = set()
    dropped = 0
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError(path, lineno, f"expected 3 tab-separated fields, got {len(fields)}")
            h, r, t = fields
            try:
                triple = (entities.lookup(h), relations.lookup(r), entities.lookup(t))
            except VocabularyError as e:
                raise VocabularyError(f"{path}:{lineno}: {e}") from None
            if triple in seen:
                dropped += 1
                continue
            seen.add(triple)
            rows.append(triple)
    if dropped:
        logger.warning("%s: dropped %d duplicate triples", path, dropped)
    triples = np.array(rows, dtype=np.int64).reshape(-1, 3)
    return triples, entities, relations


def _find_split_file(directory, split):
    for name in (split, f"{split}.txt", f"{split}.tsv"):
        p = Path(directory) / name
        if p.is_file():
            return p
    return None


class GroupIndex(Mapping):
    """Train triples grouped by a shared part; maps key -> sorted member set.

    ``key_cols`` pick the shared columns of ``(h, r, t)`` and ``member_cols``
    the varying ones. Keys and members with one column are ints, with two
    columns tuples; member sets come back as int arrays of shape ``(k,)``
    or ``(k, 2)``.
    """

    def __init__(self, train, key_cols, member_cols, sizes):
        self.key_cols = tuple(key_cols)
        self.member_cols = tuple(member_cols)
        self._sizes = sizes
        keys = self._encode(train, self.key_cols)
        members = self._encode(train, self.member_cols)
        order = np.lexsort((members, keys))
        sk = keys[order]
        starts = np.flatnonzero(np.r_[True, sk[1:] != sk[:-1]]) if len(sk) else np.zeros(0, np.int64)
        self._keys = sk[starts]
        self._ptr = np.r_[starts, len(sk)].astype(np.int64)
        self._order = order.astype(np.int64)
        self._members = members[order]
        self._train = train
        # for every train row: its group and its offset inside the group
        group_sorted = np.repeat(np.arange(len(starts)), np.diff(self._ptr))
        self.group_of = np.empty(len(train), dtype=np.int64)
        self.group_of[order] = group_sorted
        self.offset_of = np.empty(len(train), dtype=np.int64)
        self.offset_of[order] = np.arange(len(sk)) - self._ptr[group_sorted]
        for a in (self._keys, self._ptr, self._order, self._members, self.group_of, self.offset_of):
            a.setflags(write=False)

    def _encode(self, arr, cols):
        arr = np.asarray(arr, dtype=np.int64).reshape(-1, 3)
        code = arr[:, cols[0]].copy()
        for c in cols[1:]:
            code = code * self._sizes[c] + arr[:, c]
        return code

    def _encode_key(self, key):
        parts = key if isinstance(key, tuple) else (key,)
        if len(parts) != len(self.key_cols):
            raise KeyError(key)
        code = 0
        for c, v in zip(self.key_cols, parts):
            code = code * self._sizes[c] + int(v)
        return code

    def _decode(self, codes, cols):
        if len(cols) == 1:
            return codes
        out = np.empty((len(codes), len(cols)), dtype=np.int64)
        rest = codes
        for i in range(len(cols) - 1, -1, -1):
            size = self._sizes[cols[i]]
            out[:, i] = rest % size
            rest = rest // size
        return out

    def _slot(self, key):
        code = self._encode_key(key)
        i = int(np.searchsorted(self._keys, code))
        if i == len(self._keys) or self._keys[i] != code:
            raise KeyError(key)
        return i

    def __getitem__(self, key):
        i = self._slot(key)
        return self._decode(self._members[self._ptr[i]:self._ptr[i + 1]], self.member_cols)

    def __iter__(self):
        keys = self._decode(self._keys, self.key_cols)
        for k in keys:
            yield int(k) if len(self.key_cols) == 1 else tuple(int(x) for x in k)

    def __len__(self):
        return len(self._keys)

    def group_sizes(self):
        """Size of the group each train row belongs to."""
        return np.diff(self._ptr)[self.group_of]

    def sample_other(self, rows, rng):
        """For each train row, a uniformly drawn other row of its group (-1 if none)."""
        rows = np.asarray(rows, dtype=np.int64)
        g = self.group_of[rows]
        size = self._ptr[g + 1] - self._ptr[g]
        u = rng.integers(0, np.maximum(size - 1, 1))
        u = u + (u >= self.offset_of[rows])
        out = self._order[self._ptr[g] + np.minimum(u, size - 1)]
        return np.where(size > 1, out, -1)


class QueryFilter:
    """Known answers for ``(entity, relation)`` queries, in CSR form."""

    def __init__(self, queries, answers, n_entities, n_relations):
        codes = np.asarray(queries[:, 0], np.int64) * n_relations + queries[:, 1]
        order = np.lexsort((answers, codes))
        codes, answers = codes[order], np.asarray(answers, np.int64)[order]
        keep = np.r_[True, (codes[1:] != codes[:-1]) | (answers[1:] != answers[:-1])] if len(codes) else np.zeros(0, bool)
        codes, answers = codes[keep], answers[keep]
        starts = np.flatnonzero(np.r_[True, codes[1:] != codes[:-1]]) if len(codes) else np.zeros(0, np.int64)
        self.keys = codes[starts]
        self.ptr = np.r_[starts, len(codes)].astype(np.int64)
        self.answers = answers
        self.n_relations = n_relations

    def slots(self, ent, rel):
        codes = np.asarray(ent, np.int64) * self.n_relations + np.asarray(rel, np.int64)
        i = np.searchsorted(self.keys, codes)
        i_clip = np.minimum(i, max(len(self.keys) - 1, 0))
        found = (i < len(self.keys)) & (self.keys[i_clip] == codes) if len(self.keys) else np.zeros(codes.shape, bool)
        return np.where(found, i_clip, -1).astype(np.int64)

    def lookup(self, ent, rel):
        s = int(self.slots([ent], [rel])[0])
        if s < 0:
            return np.zeros(0, dtype=np.int64)
        return self.answers[self.ptr[s]:self.ptr[s + 1]]


class TripleStore:
    """Immutable triple splits with vocabularies and structural indexes.

    ``head_index[(r, t)]`` holds every train head ``h`` with ``(h, r, t)``;
    ``tail_index[(h, r)]`` the tails; ``hr_couple_index[t]`` the ``(h, r)``
    couples pointing at ``t``; ``rt_couple_index[h]`` the ``(r, t)`` couples
    leaving ``h``. ``tail_filter`` / ``head_filter`` cover all three splits.
    """

    def __init__(self, entities, relations, train, valid, test, *, n_base_relations=None):
        self.entities = entities
        self.relations = relations
        self.n_base_relations = len(relations) if n_base_relations is None else n_base_relations
        self.reciprocal = self.n_base_relations != len(relations)
        self.splits = {}
        for name, arr in zip(SPLITS, (train, valid, test)):
            arr = np.ascontiguousarray(np.asarray(arr, dtype=np.int64).reshape(-1, 3))
            self._check_range(name, arr)
            arr.setflags(write=False)
            self.splits[name] = arr
        self.head_index, self.tail_index, self.hr_couple_index, self.rt_couple_index = (
            build_positive_indexes(self)
        )
        self._build_filters()

    def _check_range(self, name, arr):
        if len(arr) == 0:
            return
        if arr.min() < 0 or arr[:, [0, 2]].max() >= len(self.entities) or arr[:, 1].max() >= len(self.relations):
            raise DataError(f"{name} split has ids outside the vocabulary")

    def _build_filters(self):
        allt = np.concatenate([self.splits[s] for s in SPLITS])
        nb = self.n_base_relations
        if self.reciprocal:
            base = allt[allt[:, 1] < nb]
            allt = np.concatenate([base, base[:, [2, 1, 0]] + np.array([0, nb, 0])])
        ne, nr = len(self.entities), len(self.relations)
        self.tail_filter = QueryFilter(allt[:, [0, 1]], allt[:, 2], ne, nr)
        self.head_filter = QueryFilter(allt[:, [2, 1]], allt[:, 0], ne, nr)

    @property
    def train(self):
        return self.splits["train"]

    @property
    def valid(self):
        return self.splits["valid"]

    @property
    def test(self):
        return self.splits["test"]

    @property
    def n_entities(self):
        return len(self.entities)

    @property
    def n_relations(self):
        return len(self.relations)

    def index(self, kind):
        return {
            "head": self.head_index,
            "tail": self.tail_index,
            "hr": self.hr_couple_index,
            "rt": self.rt_couple_index,
        }[kind]

    def base_relation(self, r):
        """Original relation id of ``r`` (reciprocals fold onto their base)."""
        return np.asarray(r) % self.n_base_relations

    def vocab_digest(self):
        h = hashlib.sha256()
        h.update(b"entities\n")
        for n in self.entities.names:
            h.update(n.encode("utf-8") + b"\n")
        h.update(b"relations\n")
        for n in self.relations.names[: self.n_base_relations]:
            h.update(n.encode("utf-8") + b"\n")
        return h.hexdigest()

    def stats(self):
        return {
            "entities": self.n_entities,
            "relations": self.n_base_relations,
            **{s: len(self.splits[s]) for s in SPLITS},
        }

    @classmethod
    def from_directory(cls, directory, *, reciprocals=False):
        """Load ``train``/``valid``/``test`` files from ``directory``.

        Vocabulary files written by :func:`save_vocab` are used (frozen) when
        present; otherwise ids are assigned in first-seen order over train,
        then valid, then test.
        """
        directory = Path(directory)
        paths = {s: _find_split_file(directory, s) for s in SPLITS}
        missing = [s for s, p in paths.items() if p is None]
        if missing:
            raise DataError(f"{directory}: missing split files: {', '.join(missing)}")
        ent_path, rel_path = (directory / VOCAB_FILES[k] for k in ("entities", "relations"))
        if ent_path.is_file() and rel_path.is_file():
            entities, relations = Vocab.load(ent_path), Vocab.load(rel_path)
        else:
            entities, relations = Vocab(), Vocab()
        arrays = {}
        for s in SPLITS:
            arrays[s], entities, relations = load_tsv(paths[s], entities, relations)
        if len(arrays["train"]) == 0:
            raise DataError(f"{paths['train']}: train split is empty")
        entities.freeze()
        relations.freeze()
        store = cls(entities, relations, arrays["train"], arrays["valid"], arrays["test"])
        return add_reciprocals(store) if reciprocals else store


def save_vocab(store, directory):
    directory = Path(directory)
    store.entities.save(directory / VOCAB_FILES["entities"])
    Vocab(store.relations.names[: store.n_base_relations]).save(directory / VOCAB_FILES["relations"])


def add_reciprocals(store):
    """Return a store whose relation vocabulary is doubled with inverses.

    Relation ``r`` gains ``r^-1`` with id ``r + |R|`` and every train triple
    ``(h, r, t)`` is joined by ``(t, r^-1, h)``. Valid and test keep their
    original triples; the filters see both directions of every split.
    """
    if store.reciprocal:
        raise DataError("store already has reciprocal relations")
    nb = store.n_relations
    names = list(store.relations.names) + [n + RECIPROCAL_SUFFIX for n in store.relations.names]
    relations = Vocab(names, frozen=True)
    train = store.train
    inverse = train[:, [2, 1, 0]] + np.array([0, nb, 0])
    return TripleStore(
        store.entities,
        relations,
        np.concatenate([train, inverse]),
        store.valid,
        store.test,
        n_base_relations=nb,
    )


def build_positive_indexes(store):
    """The four positive-instance indexes over the train split.

    Returns ``(head_index, tail_index, hr_couple_index, rt_couple_index)``.
    """
    train = store.splits["train"]
    sizes = (len(store.entities), len(store.relations), len(store.entities))
    return (
        GroupIndex(train, key_cols=(1, 2), member_cols=(0,), sizes=sizes),
        GroupIndex(train, key_cols=(0, 1), member_cols=(2,), sizes=sizes),
        GroupIndex(train, key_cols=(2,), member_cols=(0, 1), sizes=sizes),
        GroupIndex(train, key_cols=(0,), member_cols=(1, 2), sizes=sizes),
    )


@dataclass(frozen=True)
class Batch:
    """Anchor triples plus the positives appended for the contrastive loss.

    ``anchor_rows`` index into the train split. ``aug_anchor[i]`` is the
    anchor position ``aug_triples[i]`` was sampled for, ``aug_kind[i]`` the
    index into :data:`KINDS` it is a positive for.
    """

    anchors: np.ndarray
    anchor_rows: np.ndarray
    aug_anchor: np.ndarray
    aug_triples: np.ndarray
    aug_kind: np.ndarray

    @property
    def n_anchors(self):
        return len(self.anchors)

    @property
    def triples(self):
        """All rows seen by the contrastive loss: anchors first."""
        return np.concatenate([self.anchors, self.aug_triples]) if len(self.aug_triples) else self.anchors

    @property
    def augmented(self):
        return [
            (int(p), tuple(int(x) for x in tr), KINDS[k])
            for p, tr, k in zip(self.aug_anchor, self.aug_triples, self.aug_kind)
        ]


def epoch_batches(n_train, size, rng):
    """Split a fresh permutation of ``range(n_train)`` into batches of row ids."""
    if size < 1:
        raise ValueError("batch size must be >= 1")
    if n_train == 0:
        raise DataError("train split is empty")
    perm = rng.permutation(n_train)
    return [perm[i:i + size] for i in range(0, n_train, size)]


def sample_batch(store, rows):
    """Batch of anchors for the given train rows, with no augmentation yet."""
    rows = np.asarray(rows, dtype=np.int64)
    empty = np.zeros(0, dtype=np.int64)
    return Batch(store.train[rows], rows, empty, np.zeros((0, 3), np.int64), empty)


def augment_batch(store, batch, active_kinds, rng):
    """Append one sampled positive per anchor for each active kind.

    The positive is a train triple other than the anchor that shares the
    kind's structure with it; anchors without such a triple get nothing.
    """
    pos, trip, kinds = [batch.aug_anchor], [batch.aug_triples], [batch.aug_kind]
    for k, kind in enumerate(KINDS):
        if kind not in active_kinds:
            continue
        picked = store.index(kind).sample_other(batch.anchor_rows, rng)
        ok = picked >= 0
        pos.append(np.flatnonzero(ok))
        trip.append(store.train[picked[ok]])
        kinds.append(np.full(int(ok.sum()), k, dtype=np.int64))
    return Batch(
        batch.anchors,
        batch.anchor_rows,
        np.concatenate(pos).astype(np.int64),
        np.concatenate(trip).astype(np.int64).reshape(-1, 3),
        np.concatenate(kinds).astype(np.int64),
    )


def is_positive(anchor, other, kind):
    """Structural positive check for two ``(h, r, t)`` triples."""
    h, r, t = anchor
    h2, r2, t2 = other
    if kind == "head":
        return (r, t) == (r2, t2) and h != h2
    if kind == "tail":
        return (h, r) == (h2, r2) and t != t2
    if kind == "hr":
        return t == t2 and (h, r) != (h2, r2)
    if kind == "rt":
        return h == h2 and (r, t) != (r2, t2)
    raise ValueError(kind)
