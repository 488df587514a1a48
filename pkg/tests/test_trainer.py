import json
import math

import numpy as np
import pytest

from kgcontrast.checkpoint import load_checkpoint
from kgcontrast.config import TrainConfig
from kgcontrast.contrastive import weighted_cl_loss
from kgcontrast.data import KINDS, augment_batch, sample_batch
from kgcontrast.errors import NumericError
from kgcontrast.losses import dura, fitting_loss
from kgcontrast.optim import AdagradState
from kgcontrast.trainer import fit, last_path, train_step

from conftest import random_params, random_store


def _cfg(**kw):
    base = dict(model="complex", dim=4, batch_size=16, epochs=3, tau=0.5, alpha_hr=1.0, alpha_h=0.5,
                init_scale=0.1, reg_weight=0.01, valid_every=1, seed=5)
    base.update(kw)
    return TrainConfig(**base)


@pytest.fixture
def store():
    return random_store(np.random.default_rng(0), 15, 3, 150, reciprocals=True, holdout=0.2)


def test_breakdown_composes(store):
    seen = []
    fit(_cfg(alpha_t=0.3, alpha_tr=0.7), store, on_step=lambda i, b, bd: seen.append(bd))
    assert seen
    for bd in seen:
        assert bd.total == pytest.approx(bd.recomputed_total(), rel=1e-12)


def test_step_matches_independent_terms(store):
    rng = np.random.default_rng(1)
    cfg = _cfg(alpha_tr=0.4)
    params = random_params(rng, "complex", store.n_entities, store.n_relations, 4, 0.1)
    batch = augment_batch(store, sample_batch(store, np.arange(20)), set(cfg.cl.active_kinds()), rng)
    expected = (fitting_loss(params, batch.anchors) + dura(params, batch.anchors, cfg.reg_weight)
                + weighted_cl_loss(params, batch, cfg.cl)[0])
    bd = train_step(params, AdagradState.zeros_like(params), batch, cfg)
    assert bd.total == pytest.approx(expected, rel=1e-12)


def test_zero_alphas_reduce_to_baseline(store):
    zero = dict(alpha_h=0.0, alpha_t=0.0, alpha_hr=0.0, alpha_tr=0.0)
    a = fit(_cfg(**zero), store)
    rng = np.random.default_rng(9)
    params = random_params(rng, "complex", store.n_entities, store.n_relations, 4, 0.1)
    batch = sample_batch(store, np.arange(10))
    bd = train_step(params.copy(), AdagradState.zeros_like(params), batch, _cfg(**zero))
    assert bd.total == fitting_loss(params, batch.anchors) + dura(params, batch.anchors, 0.01)
    assert all(bd.cl[k] == 0.0 for k in KINDS)
    assert a.log[-1]["cl_hr"] == 0.0


def test_same_seed_same_parameters(store):
    a = fit(_cfg(), store)
    b = fit(_cfg(), store)
    assert a.last_params.entity.tobytes() == b.last_params.entity.tobytes()
    assert a.last_params.relation.tobytes() == b.last_params.relation.tobytes()
    c = fit(_cfg(seed=6), store)
    assert not np.array_equal(a.last_params.entity, c.last_params.entity)


def test_resume_matches_uninterrupted(tmp_path, store):
    full = fit(_cfg(epochs=4), store)
    ck = str(tmp_path / "m.ckpt")
    fit(_cfg(epochs=4, checkpoint=ck), store, stop_after=2)
    resumed = fit(_cfg(epochs=4, checkpoint=ck), store, resume=last_path(ck))
    assert resumed.state.epoch == 4
    assert resumed.last_params.entity.tobytes() == full.last_params.entity.tobytes()
    assert resumed.last_params.relation.tobytes() == full.last_params.relation.tobytes()
    assert resumed.params.entity.tobytes() == full.params.entity.tobytes()


def test_log_and_best_checkpoint(tmp_path, store):
    ck, log = tmp_path / "m.ckpt", tmp_path / "log.jsonl"
    res = fit(_cfg(checkpoint=str(ck), log=str(log)), store)
    recs = [json.loads(x) for x in log.read_text().splitlines()]
    assert recs[0]["event"] == "config" and recs[0]["tau"] == 0.5
    epochs = [r for r in recs if r["event"] == "epoch"]
    assert [r["epoch"] for r in epochs] == [1, 2, 3]
    for r in epochs:
        assert {"l_s", "l_r", "cl_head", "cl_tail", "cl_hr", "cl_rt", "total", "valid_mrr"} <= set(r)
    best = max(epochs, key=lambda r: (r["valid_mrr"], -r["epoch"]))
    assert res.state.best_epoch == best["epoch"]
    saved = load_checkpoint(ck)
    assert saved.meta["best_epoch"] == best["epoch"]
    assert saved.params.entity.tobytes() == res.params.entity.tobytes()
    assert saved.config["alpha_hr"] == 1.0
    assert load_checkpoint(last_path(ck)).meta["epoch"] == 3


def test_non_finite_loss_is_reported(store):
    rng = np.random.default_rng(2)
    params = random_params(rng, "rescal", store.n_entities, store.n_relations, 2)
    params.entity[:] = 1e200
    with pytest.raises(NumericError):
        train_step(params, AdagradState.zeros_like(params), sample_batch(store, np.arange(4)),
                   _cfg(model="rescal", dim=2))


def test_training_lowers_fitting_loss(store):
    res = fit(_cfg(epochs=15, valid_every=100), store)
    epochs = [r for r in res.log if r["event"] == "epoch"]
    assert epochs[-1]["l_s"] < epochs[0]["l_s"]
    assert math.isfinite(epochs[-1]["total"])


def test_step_count_per_epoch():
    from kgcontrast.data import TripleStore, Vocab

    train = [[i, 0, (i + 1) % 11] for i in range(10)]
    store = TripleStore(Vocab([str(i) for i in range(11)]), Vocab(["r"]), train, [], [])
    calls = []
    fit(_cfg(epochs=1, batch_size=4, reciprocals=False), store, on_step=lambda *a: calls.append(a))
    assert len(calls) == 3


def test_no_alpha_no_reg_total_is_fitting_loss(store):
    params = random_params(np.random.default_rng(4), "complex", store.n_entities, store.n_relations, 4, 0.1)
    batch = sample_batch(store, np.arange(8))
    cfg = _cfg(alpha_h=0.0, alpha_hr=0.0, reg_weight=0.0)
    expected = fitting_loss(params, batch.anchors)
    assert train_step(params, AdagradState.zeros_like(params), batch, cfg).total == expected


def test_first_step_is_reproducible(store):
    first = []
    for _ in range(2):
        seen = []
        fit(_cfg(epochs=1), store, on_step=lambda i, b, bd: seen.append(bd))
        first.append(seen[0])
    assert first[0] == first[1]


def test_augmented_rows_only_feed_the_contrastive_loss(store):
    # L_s and L_r see the anchors only: adding positives must not change them
    rng = np.random.default_rng(5)
    params = random_params(rng, "complex", store.n_entities, store.n_relations, 4, 0.1)
    plain = sample_batch(store, np.arange(16))
    aug = augment_batch(store, plain, set(KINDS), rng)
    cfg = _cfg(alpha_h=0.0, alpha_hr=0.0)
    a = train_step(params.copy(), AdagradState.zeros_like(params), plain, cfg)
    b = train_step(params.copy(), AdagradState.zeros_like(params), aug, cfg)
    assert (a.l_s, a.l_r, a.total) == (b.l_s, b.l_r, b.total)
