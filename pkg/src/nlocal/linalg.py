"""Dense linear algebra for small multi-qubit operators.

Qubit 0 is the leftmost (most significant) tensor factor everywhere in the
package: basis index bits are read MSB-first, so ``|q0 q1 ... q_{m-1}>``.
"""
from __future__ import annotations

import math
from functools import reduce
from typing import Sequence

import numpy as np

from ._backend import jacobi_eigh

STRUCT_TOL = 1e-10
RECON_TOL = 1e-12
REPORT_TOL = 1e-9

I2 = np.eye(2, dtype=np.complex128)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
SIGMAS = (SIGMA_X, SIGMA_Y, SIGMA_Z)
PAULI = {"I": I2, "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}


def bloch_operator(vec) -> np.ndarray:
    """``vec . sigma`` for a real 3-vector."""
    x, y, z = (float(c) for c in vec)
    return x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z


def kron(*ops) -> np.ndarray:
    """Kronecker product of one or more matrices, left factor most significant."""
    if not ops:
        raise ValueError("kron needs at least one operand")
    return reduce(np.kron, (np.asarray(o) for o in ops))


def pauli_string(labels: Sequence[str] | str) -> np.ndarray:
    return kron(*(PAULI[c] for c in labels))


def num_qubits(a: np.ndarray) -> int:
    dim = a.shape[0]
    m = dim.bit_length() - 1
    if a.ndim != 2 or a.shape[1] != dim or (1 << m) != dim:
        raise ValueError(f"expected a square 2^m matrix, got shape {a.shape}")
    return m


def permute_qubits(a: np.ndarray, perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors so input qubit ``p`` becomes output qubit ``perm[p]``."""
    a = np.asarray(a)
    m = num_qubits(a)
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(m)):
        raise ValueError(f"{perm} is not a permutation of range({m})")
    inv = [0] * m
    for src, dst in enumerate(perm):
        inv[dst] = src
    t = a.reshape((2,) * (2 * m))
    t = t.transpose(inv + [m + i for i in inv])
    return t.reshape(a.shape).copy()


def hermiticity_error(a: np.ndarray) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def eigh(a: np.ndarray, tol: float = STRUCT_TOL):
    """Ascending eigenvalues and eigenvectors of a Hermitian matrix (cyclic Jacobi)."""
    a = np.asarray(a, dtype=np.complex128)
    err = hermiticity_error(a)
    if err > tol:
        raise ValueError(f"matrix is not Hermitian (max asymmetry {err:.3e})")
    w, v = jacobi_eigh(0.5 * (a + a.conj().T))
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def eigenvalues_hermitian(a: np.ndarray, tol: float = STRUCT_TOL) -> np.ndarray:
    return eigh(a, tol)[0]


def min_eigenvalue(a: np.ndarray) -> float:
    return float(eigenvalues_hermitian(a)[0])


def is_psd(a: np.ndarray, tol: float = STRUCT_TOL) -> bool:
    return min_eigenvalue(a) >= -tol


def singular_values_3x3(t) -> tuple[float, float, float]:
    """Descending singular values of a real 3x3 matrix.

    One-sided Jacobi on the columns of T itself (not T^T T), so small singular
    values keep full absolute accuracy.
    """
    u = np.array(t, dtype=np.float64)
    if u.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got {u.shape}")
    eps = np.finfo(np.float64).eps
    for _ in range(60):
        rotated = False
        for p, q in ((0, 1), (0, 2), (1, 2)):
            alpha = float(u[:, p] @ u[:, p])
            beta = float(u[:, q] @ u[:, q])
            gamma = float(u[:, p] @ u[:, q])
            if gamma == 0.0 or abs(gamma) <= eps * math.sqrt(alpha * beta):
                continue
            rotated = True
            zeta = (beta - alpha) / (2.0 * gamma)
            tan = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
            c = 1.0 / math.sqrt(1.0 + tan * tan)
            s = c * tan
            up, uq = u[:, p].copy(), u[:, q].copy()
            u[:, p] = c * up - s * uq
            u[:, q] = s * up + c * uq
        if not rotated:
            break
    sv = sorted((float(np.linalg.norm(u[:, k])) for k in range(3)), reverse=True)
    return sv[0], sv[1], sv[2]


def expectation(op: np.ndarray, rho: np.ndarray) -> float:
    """Real part of Tr[op rho]."""
    return float(np.real(np.einsum("ij,ji->", op, rho)))
