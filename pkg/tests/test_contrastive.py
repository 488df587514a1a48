import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgcontrast import kernels
from kgcontrast.contrastive import (
    CLConfig,
    View,
    analytic_grad_head_term,
    build_views,
    cl_term,
    positive_mask,
    weighted_cl_loss,
)
from kgcontrast.data import KINDS, augment_batch, sample_batch
from kgcontrast.errors import ConfigError
from kgcontrast.model import GradientSet

from conftest import random_params, random_store
from oracles import central_difference, literal_cl_term, max_relative_error


def _batch(rng, store, size, kinds=KINDS):
    rows = rng.choice(len(store.train), size=min(size, len(store.train)), replace=False)
    return augment_batch(store, sample_batch(store, rows), set(kinds), rng)


def test_config_validation():
    with pytest.raises(ConfigError):
        CLConfig(tau=0.0)
    with pytest.raises(ConfigError):
        CLConfig(alpha_hr=-1.0)
    assert CLConfig(alpha_h=1.0, alpha_tr=0.5).active_kinds() == ("head", "rt")


def test_positive_mask_kinds():
    triples = np.array([[0, 0, 1], [2, 0, 1], [0, 0, 3], [4, 1, 1]])
    assert positive_mask(triples, "head")[0].tolist() == [False, True, False, False]
    assert positive_mask(triples, "tail")[0].tolist() == [False, False, True, False]
    assert positive_mask(triples, "hr")[0].tolist() == [False, True, False, True]
    assert positive_mask(triples, "rt")[0].tolist() == [False, False, True, False]


def test_hand_computed_term():
    # one anchor with one positive and two negatives in 1-d
    z = np.array([[1.0], [2.0], [-1.0], [0.5]])
    triples = np.array([[0, 0, 9], [1, 0, 9], [2, 1, 9], [3, 2, 8]])
    tau = 0.5
    view = View("head", triples, z, positive_mask(triples, "head"), np.array([True, False, False, False]))
    value, _ = cl_term(view, tau)
    expected = -(2.0 / tau - math.log(math.exp(-1.0 / tau) + math.exp(0.5 / tau)))
    assert value == pytest.approx(expected, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), kind=st.sampled_from(KINDS), model=st.sampled_from(["rescal", "complex"]),
       tau=st.floats(0.1, 2.0))
def test_cl_term_matches_literal(seed, kind, model, tau):
    rng = np.random.default_rng(seed)
    store = random_store(rng, 8, 3, 90, holdout=0.0)
    params = random_params(rng, model, 8, 3, 3)
    batch = _batch(rng, store, 12, [kind])
    view = build_views(params, batch, kind)
    value, _ = cl_term(view, tau)
    ref = literal_cl_term(view.rows.tolist(), batch.triples.tolist(), kind, batch.n_anchors, tau)
    assert value == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_no_positive_means_no_term(rng):
    store = random_store(rng, 30, 1, 5, holdout=0.0)
    params = random_params(rng, "rescal", 30, 1, 2)
    batch = sample_batch(store, np.arange(len(store.train)))
    for kind in ("head", "tail"):
        view = build_views(params, batch, kind)
        if not view.positive.any():
            value, grad = cl_term(view, 0.5)
            assert value == 0.0 and not grad.any()


def test_augmented_rows_are_not_anchors(rng):
    store = random_store(rng, 6, 2, 50, holdout=0.0)
    params = random_params(rng, "complex", 6, 2, 2)
    batch = _batch(rng, store, 4, ["hr"])
    view = build_views(params, batch, "hr")
    assert view.anchor.sum() == batch.n_anchors
    assert not view.anchor[batch.n_anchors:].any()


@pytest.mark.parametrize("kind", KINDS)
def test_anchor_row_gradient_matches_closed_form(rng, kind):
    store = random_store(rng, 7, 2, 70, holdout=0.0)
    params = random_params(rng, "rescal", 7, 2, 3)
    batch = _batch(rng, store, 10, [kind])
    checked = 0
    for row in range(batch.n_anchors):
        view = build_views(params, batch, kind)
        if not view.positive[row].any() or not view.negative()[row].any():
            continue
        # keep only this row's term so the gradient at z_row is its own
        view.anchor[:] = False
        view.anchor[row] = True
        _, g = cl_term(view, 0.7)
        np.testing.assert_allclose(g[row], analytic_grad_head_term(view, 0.7, row), rtol=1e-10, atol=1e-13)
        checked += 1
    assert checked > 0


@pytest.mark.parametrize("model", ["rescal", "complex"])
def test_weighted_loss_gradient(rng, model):
    store = random_store(rng, 6, 2, 60, holdout=0.0)
    params = random_params(rng, model, 6, 2, 2)
    batch = _batch(rng, store, 8)
    cfg = CLConfig(tau=0.6, alpha_h=0.5, alpha_t=1.0, alpha_hr=2.0, alpha_tr=0.3)
    grads = GradientSet(params)
    weighted_cl_loss(params, batch, cfg, grads)
    g = grads.to_dense(params)
    num = central_difference(lambda: weighted_cl_loss(params, batch, cfg)[0], [params.entity, params.relation])
    assert max_relative_error([g["entity"], g["relation"].reshape(params.relation.shape)], num) < 1e-5


def test_weighted_sum_of_terms(rng):
    store = random_store(rng, 8, 2, 80, holdout=0.0)
    params = random_params(rng, "complex", 8, 2, 3)
    batch = _batch(rng, store, 12)
    cfg = CLConfig(tau=0.9, alpha_h=0.1, alpha_t=0.2, alpha_hr=2.0, alpha_tr=0.0)
    total, per = weighted_cl_loss(params, batch, cfg)
    assert per["rt"] == 0.0
    assert total == pytest.approx(sum(cfg.weight(k) * per[k] for k in KINDS), rel=1e-14)


def test_backends_agree(rng):
    py = kernels.get_backend("python")
    store = random_store(rng, 10, 3, 120, holdout=0.0)
    params = random_params(rng, "rescal", 10, 3, 4)
    batch = _batch(rng, store, 30)
    for kind in KINDS:
        view = build_views(params, batch, kind)
        a, ga = cl_term(view, 0.5)
        b, gb = cl_term(view, 0.5, py)
        assert a == pytest.approx(b, rel=1e-12, abs=1e-14)
        np.testing.assert_allclose(ga, gb, rtol=1e-10, atol=1e-14)
