import numpy as np
import pytest

from kgcontrast import kernels
from kgcontrast.kernels import get_backend

py = get_backend("python")
try:
    ext = get_backend("compiled")
except ImportError:  # pragma: no cover
    ext = None

needs_ext = pytest.mark.skipif(ext is None, reason="compiled extension not built")


def test_backend_flag():
    assert kernels.BACKEND in ("compiled", "python")
    with pytest.raises(ValueError):
        get_backend("fortran")


def test_force_python_backend(monkeypatch):
    import importlib

    monkeypatch.setenv("KGCONTRAST_BACKEND", "python")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python" and mod.filtered_ranks is py.filtered_ranks
    finally:
        monkeypatch.delenv("KGCONTRAST_BACKEND")
        importlib.reload(kernels)


@needs_ext
def test_adagrad_bitwise(rng):
    p = rng.standard_normal((6, 4))
    a = rng.random((6, 4))
    rows = np.array([0, 3, 5], dtype=np.int64)
    g = rng.standard_normal((3, 4))
    p1, a1, p2, a2 = p.copy(), a.copy(), p.copy(), a.copy()
    py.adagrad_rows(p1, a1, rows, g, 0.1, 1e-10)
    ext.adagrad_rows(p2, a2, rows, g, 0.1, 1e-10)
    assert np.array_equal(p1, p2) and np.array_equal(a1, a2)


@needs_ext
def test_scatter_bitwise(rng):
    rows = rng.integers(0, 5, 40).astype(np.int64)
    vals = rng.standard_normal((40, 3))
    o1, o2 = np.zeros((5, 3)), np.zeros((5, 3))
    py.scatter_add_rows(o1, rows, vals)
    ext.scatter_add_rows(o2, rows, vals)
    assert np.array_equal(o1, o2)


@needs_ext
def test_ranks_equal(rng):
    scores = np.round(rng.standard_normal((50, 30)), 1)
    scores[3, 7] = np.nan
    answers = rng.integers(0, 30, 50).astype(np.int64)
    answers[3] = 7
    fptr = np.array([0, 3, 3, 8], dtype=np.int64)
    fidx = rng.integers(0, 30, 8).astype(np.int64)
    slots = rng.integers(-1, 3, 50).astype(np.int64)
    r1 = py.filtered_ranks(scores, answers, slots, fptr, fidx)
    r2 = ext.filtered_ranks(scores, answers, slots, fptr, fidx)
    assert np.array_equal(r1, r2) and r1[3] == 30


@needs_ext
@pytest.mark.parametrize("m,n", [(1, 1), (5, 9), (40, 90)])
def test_contrastive_close(rng, m, n):
    z = rng.standard_normal((n, 4))
    sim = np.ascontiguousarray(z[:m] @ z.T)
    pos = (rng.random((m, n)) < 0.2).astype(np.uint8)
    self_col = np.arange(m, dtype=np.int64)
    out1 = py.contrastive_coefficients(sim, pos, self_col, 0.5)
    out2 = ext.contrastive_coefficients(sim, pos, self_col, 0.5)
    np.testing.assert_allclose(out1[0], out2[0], rtol=1e-13, atol=1e-14)
    assert np.array_equal(out1[1], out2[1])
    np.testing.assert_allclose(out1[2], out2[2], rtol=1e-13, atol=1e-16)
