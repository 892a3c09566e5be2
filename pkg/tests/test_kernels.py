import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlocal import _backend, _fallback
from nlocal.inequalities import star_patterns
from nlocal.states import random_state

try:
    from nlocal import _kernels
except ImportError:  # extension not built
    _kernels = None

needs_ext = pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")
seeds = st.integers(0, 2**32 - 1)


def _tensors(seed, n):
    return np.array([random_state(seed + 7919 * i).T for i in range(n)])


def _vectors(rng, shape):
    v = rng.normal(size=shape + (3,))
    return v / np.linalg.norm(v, axis=-1, keepdims=True) * rng.uniform(0, 1, size=shape + (1,))


def test_backend_selection_flag():
    assert _backend.COMPILED == (_backend.kernels is not _fallback)


@needs_ext
@given(seeds, st.sampled_from([2, 4, 8]))
def test_jacobi_backends_agree(seed, dim):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    a = a + a.conj().T
    w1, _ = _kernels.jacobi_eigh(a)
    w2, _ = _fallback.jacobi_eigh(a)
    assert np.allclose(np.sort(w1), np.sort(w2), atol=1e-12)


@needs_ext
@given(seeds, st.integers(1, 6))
def test_linear_backends_agree(seed, n):
    rng = np.random.default_rng(seed)
    t = _tensors(seed % 10_000, n)
    a0, a1, b0, b1 = (_vectors(rng, (5,)) for _ in range(4))
    got = _kernels.linear_lhs_batch(t, a0, a1, b0, b1)
    want = _fallback.linear_lhs_batch(t, a0, a1, b0, b1)
    for g, w in zip(got, want):
        assert np.allclose(g, w, atol=1e-13)


@needs_ext
@given(seeds, st.integers(2, 6))
def test_star_backends_agree(seed, n):
    rng = np.random.default_rng(seed)
    t = _tensors(seed % 10_000, n)
    m0, m1 = _vectors(rng, (4, n)), _vectors(rng, (4, n))
    pats = np.array(star_patterns(n), dtype=np.intc) - 1
    got = _kernels.star_lhs_batch(t, m0, m1, pats)
    want = _fallback.star_lhs_batch(t, m0, m1, pats)
    for g, w in zip(got, want):
        assert np.allclose(g, w, atol=1e-13)


def test_fallback_forced_by_environment(monkeypatch):
    import importlib

    monkeypatch.setenv("NLOCAL_PURE_PYTHON", "1")
    mod = importlib.reload(_backend)
    try:
        assert mod.COMPILED is False
        assert mod.kernels is _fallback
    finally:
        monkeypatch.delenv("NLOCAL_PURE_PYTHON")
        importlib.reload(_backend)
