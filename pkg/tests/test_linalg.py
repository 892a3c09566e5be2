import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nlocal.linalg import (
    PAULI,
    eigh,
    eigenvalues_hermitian,
    expectation,
    is_psd,
    kron,
    num_qubits,
    pauli_string,
    permute_qubits,
    singular_values_3x3,
)
from oracles import embed, singular_values

finite = st.floats(-2, 2, allow_nan=False, allow_infinity=False)


def hermitian(seed, dim):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return a + a.conj().T


def test_kron_is_msb_first():
    a = np.diag([1.0, 2.0])
    b = np.diag([1.0, 10.0])
    assert np.allclose(np.diag(kron(a, b)), [1, 10, 2, 20])


def test_kron_needs_operands():
    with pytest.raises(ValueError):
        kron()


def test_pauli_string():
    assert np.allclose(pauli_string("XZ"), np.kron(PAULI["X"], PAULI["Z"]))
    assert np.allclose(pauli_string("YY") @ pauli_string("YY"), np.eye(4))


def test_num_qubits_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        num_qubits(np.eye(3))


@given(st.integers(0, 2**32 - 1), st.permutations(range(4)))
def test_permute_matches_index_embedding(seed, perm):
    # Product operator on 4 qubits: permuting factors == placing each on its new qubit.
    rng = np.random.default_rng(seed)
    ops = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4)]
    got = permute_qubits(kron(*ops), perm)
    want = np.eye(16, dtype=complex)
    for src, dst in enumerate(perm):
        want = want @ embed(ops[src], [dst], 4)
    assert np.allclose(got, want, atol=1e-12)


def test_permute_rejects_bad_permutation():
    with pytest.raises(ValueError):
        permute_qubits(np.eye(4), [0, 0])


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 4, 8, 16]))
def test_eigh_reconstructs(seed, dim):
    a = hermitian(seed, dim)
    w, v = eigh(a)
    assert np.all(np.diff(w) >= -1e-12)
    assert np.max(np.abs(v @ np.diag(w) @ v.conj().T - a)) <= 1e-12 * max(1.0, np.abs(a).max()) * dim
    assert np.max(np.abs(v.conj().T @ v - np.eye(dim))) <= 1e-12
    assert np.allclose(w, np.linalg.eigvalsh(a), atol=1e-10)


def test_eigh_rejects_non_hermitian():
    with pytest.raises(ValueError):
        eigh(np.array([[0, 1], [0, 0]], dtype=complex))


def test_eigenvalues_and_psd():
    assert np.allclose(eigenvalues_hermitian(np.diag([3.0, -1.0])), [-1, 3])
    assert is_psd(np.eye(4) / 4)
    assert not is_psd(np.diag([1.0, -0.1]))


@given(arrays(np.float64, (3, 3), elements=finite))
def test_singular_values_match_svd(t):
    got = singular_values_3x3(t)
    assert np.allclose(got, singular_values(t), atol=1e-9)
    assert got[0] >= got[1] >= got[2] >= 0


def test_singular_values_shape_check():
    with pytest.raises(ValueError):
        singular_values_3x3(np.eye(2))


def test_expectation_real_part():
    rho = np.diag([0.75, 0.25]).astype(complex)
    assert expectation(PAULI["Z"], rho) == pytest.approx(0.5)
