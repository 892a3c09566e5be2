import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlocal.states import (
    InvalidStateError,
    bell_state,
    bloch_decompose,
    diagonal_state,
    from_bloch,
    from_matrix,
    is_aligned,
    local_unitary_diagonalize,
    random_diagonal_state,
    random_state,
    sample_seed,
    werner,
)
from oracles import correlation_tensor, singular_values

seeds = st.integers(0, 2**63 - 1)


@given(st.floats(0, 1))
def test_werner_spectrum(v):
    s = werner(v)
    assert np.allclose(s.spectrum, (v, v, v), atol=1e-12)
    assert np.allclose(s.T, -v * np.eye(3), atol=1e-12)
    assert np.allclose(s.bloch_u, 0) and np.allclose(s.bloch_v, 0)


@pytest.mark.parametrize("v", [-0.1, 1.2])
def test_werner_rejects_out_of_range(v):
    with pytest.raises(InvalidStateError):
        werner(v)


def test_invalid_matrices():
    with pytest.raises(InvalidStateError):
        from_matrix(np.eye(4))  # trace 4
    with pytest.raises(InvalidStateError):
        from_matrix(np.diag([1.2, -0.2, 0, 0]))  # not PSD
    bad = np.eye(4) / 4
    bad = bad.astype(complex)
    bad[0, 1] = 0.1j
    with pytest.raises(InvalidStateError):
        from_matrix(bad)  # not Hermitian
    with pytest.raises(InvalidStateError):
        from_matrix(np.eye(2) / 2)


@given(seeds)
def test_random_state_valid_and_deterministic(seed):
    a, b = random_state(seed), random_state(seed)
    assert np.array_equal(a.rho, b.rho)
    assert abs(np.trace(a.rho).real - 1) <= 1e-12
    assert np.linalg.eigvalsh(a.rho).min() >= -1e-12


@given(seeds)
def test_bloch_round_trip(seed):
    s = random_state(seed)
    u, v, t = bloch_decompose(s)
    back = from_bloch(u, v, t)
    assert np.max(np.abs(back.rho - s.rho)) <= 1e-12
    assert np.allclose(t, correlation_tensor(s.rho), atol=1e-12)


@given(seeds)
def test_spectrum_matches_svd(seed):
    s = random_state(seed)
    assert np.allclose(s.spectrum, singular_values(s.T), atol=1e-12)


def test_spectrum_sweep_in_unit_cube():
    for k in range(1000):
        e = random_state(sample_seed(2024, k)).spectrum
        assert all(0.0 <= x <= 1.0 + 1e-12 for x in e)


def test_bell_states_are_maximally_correlated():
    for name in ("phi+", "phi-", "psi+", "psi-"):
        assert np.allclose(bell_state(name).spectrum, (1, 1, 1), atol=1e-12)


@pytest.mark.parametrize("order", ["xyz", "zxy", "yzx", "xzy"])
@given(seed=seeds)
def test_diagonalize_aligns_and_keeps_spectrum(order, seed):
    s = random_state(seed)
    d = local_unitary_diagonalize(s, order)
    assert is_aligned(d, order, tol=1e-10)
    assert np.allclose(d.spectrum, s.spectrum, atol=1e-12)
    # purity and local spectra are local-unitary invariants
    assert np.trace(d.rho @ d.rho).real == pytest.approx(np.trace(s.rho @ s.rho).real, abs=1e-12)
    assert np.linalg.norm(d.bloch_u) == pytest.approx(np.linalg.norm(s.bloch_u), abs=1e-12)


def test_diagonalize_returns_aligned_state_unchanged():
    s = diagonal_state([0.6, -0.3, 0.1], "zxy")
    assert local_unitary_diagonalize(s, "zxy") is s
    with pytest.raises(ValueError):
        local_unitary_diagonalize(s, "xxy")


def test_diagonal_state_places_entries():
    s = diagonal_state([0.1, -0.6, 0.25], "zxy")
    assert s.T[2, 2] == pytest.approx(-0.6)
    assert s.T[0, 0] == pytest.approx(0.25)
    assert s.T[1, 1] == pytest.approx(0.1)


@given(seeds)
def test_random_diagonal_state(seed):
    s = random_diagonal_state(seed)
    assert s.is_diagonal()
    assert is_aligned(s, "xyz")


def test_sample_seed_streams_differ():
    a = random_state(sample_seed(1, 0, 0))
    b = random_state(sample_seed(1, 0, 1))
    assert not np.allclose(a.rho, b.rho)
