"""Training loop: batches, the combined objective, Adagrad, validation, checkpoints."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import optim
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .contrastive import weighted_cl_loss
from .data import KINDS, TripleStore, augment_batch, epoch_batches, sample_batch
from .errors import DataError, NumericError
from .evaluate import evaluate
from .losses import dura, fitting_loss
from .model import GradientSet, init_params

logger = logging.getLogger(__name__)


@dataclass
class LossBreakdown:
    l_s: float
    l_r: float
    cl: dict
    alphas: dict
    total: float

    def recomputed_total(self):
        return self.l_s + self.l_r + sum(self.alphas[k] * self.cl[k] for k in KINDS)

    def as_record(self):
        return {"l_s": self.l_s, "l_r": self.l_r, **{f"cl_{k}": self.cl[k] for k in KINDS}, "total": self.total}


@dataclass
class TrainState:
    params: object
    optimizer: optim.AdagradState
    epoch: int = 0
    step: int = 0
    best_mrr: float = -math.inf
    best_epoch: int = 0


@dataclass
class FitResult:
    params: object
    last_params: object
    state: TrainState
    log: list = field(default_factory=list)


def _epoch_rngs(seed, epoch):
    # independent of history so a resumed run draws the same batches
    return np.random.default_rng([seed, epoch, 0]), np.random.default_rng([seed, epoch, 1])


def train_step(params, opt_state, batch, cfg, step_index=None):
    """One update on the combined objective ``L_s + L_r + L_c^w``.

    ``L_s`` and ``L_r`` only see the anchors; the contrastive terms see the
    anchors together with the appended positives.
    """
    grads = GradientSet(params)
    cl_cfg = cfg.cl
    # overflow shows up as a non-finite total, reported below
    with np.errstate(over="ignore", invalid="ignore"):
        l_s = fitting_loss(params, batch.anchors, grads)
        l_r = dura(params, batch.anchors, cfg.reg_weight, grads)
        l_c, per_kind = weighted_cl_loss(params, batch, cl_cfg, grads)
    alphas = {k: cl_cfg.weight(k) for k in KINDS}
    out = LossBreakdown(l_s, l_r, per_kind, alphas, l_s + l_r + l_c)
    if not math.isfinite(out.total):
        raise NumericError(f"non-finite loss at step {step_index}: {out.as_record()}")
    optim.step(params, opt_state, grads)
    return out


def new_state(cfg, store):
    params = init_params(
        cfg.model, store.n_entities, store.n_relations, cfg.dim, cfg.init_scale, np.random.default_rng(cfg.seed)
    )
    return TrainState(params, optim.AdagradState.zeros_like(params, cfg.learning_rate))


def _save(path, state, store, cfg, params=None):
    meta = {"epoch": state.epoch, "step": state.step, "best_mrr": state.best_mrr, "best_epoch": state.best_epoch,
            "reciprocals": store.reciprocal}
    save_checkpoint(path, Checkpoint(params or state.params, store.vocab_digest(), state.optimizer,
                                     cfg.to_dict(), meta))


def last_path(checkpoint):
    return str(checkpoint) + ".last"


def resume_state(path, store):
    ck = load_checkpoint(path)
    if ck.vocab_digest != store.vocab_digest():
        raise DataError(f"{path}: checkpoint vocabulary does not match the dataset")
    m = ck.meta
    best = m.get("best_mrr", -math.inf)
    return TrainState(ck.params, ck.optimizer, m["epoch"], m["step"],
                      -math.inf if best is None else best, m.get("best_epoch", 0))


def fit(cfg, store=None, resume=None, stop_after=None, on_step=None, on_epoch=None):
    """Train for ``cfg.epochs`` epochs, keeping the best-on-validation model.

    ``resume`` is a path to a ``.last`` checkpoint. ``stop_after`` ends the
    run after that many completed epochs (the saved state can be resumed).
    ``on_step(step, batch, breakdown)`` and ``on_epoch(record)`` are
    optional callbacks.
    """
    if store is None:
        store = TripleStore.from_directory(cfg.dataset, reciprocals=cfg.reciprocals)
    state = resume_state(resume, store) if resume else new_state(cfg, store)
    best_params = state.params.copy()
    if resume and cfg.checkpoint and Path(cfg.checkpoint).is_file():
        best_params = load_checkpoint(cfg.checkpoint).params
    log_records = []
    log_file = open(cfg.log, "a" if resume else "w", encoding="utf-8") if cfg.log else None

    def emit(rec):
        log_records.append(rec)
        if log_file:
            log_file.write(json.dumps(rec) + "\n")
            log_file.flush()

    if not resume:
        emit({"event": "config", **cfg.to_dict()})
    active = set(cfg.cl.active_kinds())
    has_valid = len(store.valid) > 0
    try:
        while state.epoch < cfg.epochs:
            if stop_after is not None and state.epoch >= stop_after:
                break
            epoch = state.epoch + 1
            shuffle_rng, aug_rng = _epoch_rngs(cfg.seed, epoch)
            sums = None
            batches = epoch_batches(len(store.train), cfg.batch_size, shuffle_rng)
            for rows in batches:
                batch = sample_batch(store, rows)
                if active:
                    batch = augment_batch(store, batch, active, aug_rng)
                state.step += 1
                bd = train_step(state.params, state.optimizer, batch, cfg, state.step)
                if on_step:
                    on_step(state.step, batch, bd)
                rec = bd.as_record()
                sums = rec if sums is None else {k: sums[k] + v for k, v in rec.items()}
            state.epoch = epoch
            record = {"event": "epoch", "epoch": epoch, "steps": len(batches),
                      **{k: v / len(batches) for k, v in sums.items()}}
            if has_valid and (epoch % cfg.valid_every == 0 or epoch == cfg.epochs):
                rep = evaluate(state.params, store, "valid")
                record.update({"valid_mrr": rep.mrr, **{f"valid_hits@{n}": v for n, v in rep.hits.items()}})
                if rep.mrr > state.best_mrr:
                    state.best_mrr, state.best_epoch = rep.mrr, epoch
                    best_params = state.params.copy()
                    if cfg.checkpoint:
                        _save(cfg.checkpoint, state, store, cfg)
            elif not has_valid:
                state.best_epoch = epoch
                best_params = state.params.copy()
            emit(record)
            if on_epoch:
                on_epoch(record)
            if cfg.checkpoint:
                _save(last_path(cfg.checkpoint), state, store, cfg)
        if cfg.checkpoint and not has_valid:
            _save(cfg.checkpoint, state, store, cfg)
    finally:
        if log_file:
            log_file.close()
    return FitResult(best_params, state.params, state, log_records)
