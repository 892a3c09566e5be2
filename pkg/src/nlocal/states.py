"""Two-qubit source states and their correlation data."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .linalg import (
    I2,
    RECON_TOL,
    SIGMAS,
    STRUCT_TOL,
    bloch_operator,
    expectation,
    hermiticity_error,
    kron,
    min_eigenvalue,
    singular_values_3x3,
)

_AXES = {"x": 0, "y": 1, "z": 2}

PSI_MINUS = np.array([0, 1, -1, 0], dtype=np.complex128) / np.sqrt(2)
SINGLET = np.outer(PSI_MINUS, PSI_MINUS.conj())


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """A validated two-qubit density matrix.

    The first tensor factor is the qubit the source sends to the lower-indexed
    party (the central party in a star).
    """

    rho: np.ndarray
    label: str = ""

    def __post_init__(self):
        rho = np.array(self.rho, dtype=np.complex128)
        if rho.shape != (4, 4):
            raise InvalidStateError(f"expected a 4x4 matrix, got {rho.shape}")
        herm = hermiticity_error(rho)
        if herm > STRUCT_TOL:
            raise InvalidStateError(f"density matrix not Hermitian (asymmetry {herm:.3e})")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > STRUCT_TOL:
            raise InvalidStateError(f"trace is {tr!r}, expected 1")
        lo = min_eigenvalue(rho)
        if lo < -STRUCT_TOL:
            raise InvalidStateError(f"not positive semidefinite (min eigenvalue {lo:.3e})")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @cached_property
    def bloch_u(self) -> np.ndarray:
        return np.array([expectation(kron(s, I2), self.rho) for s in SIGMAS])

    @cached_property
    def bloch_v(self) -> np.ndarray:
        return np.array([expectation(kron(I2, s), self.rho) for s in SIGMAS])

    @cached_property
    def T(self) -> np.ndarray:
        return np.array([[expectation(kron(a, b), self.rho) for b in SIGMAS] for a in SIGMAS])

    @cached_property
    def spectrum(self) -> tuple[float, float, float]:
        return singular_values_3x3(self.T)

    def is_diagonal(self, tol: float = RECON_TOL) -> bool:
        t = self.T
        return bool(np.max(np.abs(t - np.diag(np.diag(t)))) <= tol)

    def __repr__(self):
        tag = f" {self.label}" if self.label else ""
        e = ", ".join(f"{x:.5g}" for x in self.spectrum)
        return f"<TwoQubitState{tag} spectrum=({e})>"


def werner(v: float) -> TwoQubitState:
    """``v |psi-><psi-| + (1 - v) I/4``."""
    v = float(v)
    if not 0.0 <= v <= 1.0:
        raise InvalidStateError(f"Werner visibility must lie in [0, 1], got {v}")
    return TwoQubitState(v * SINGLET + (1 - v) * np.eye(4) / 4, label=f"werner({v:g})")


def from_bloch(u, v, T) -> TwoQubitState:
    u = np.asarray(u, dtype=np.float64).reshape(3)
    v = np.asarray(v, dtype=np.float64).reshape(3)
    T = np.asarray(T, dtype=np.float64).reshape(3, 3)
    rho = kron(I2, I2) + kron(bloch_operator(u), I2) + kron(I2, bloch_operator(v))
    for j in range(3):
        for k in range(3):
            if T[j, k]:
                rho = rho + T[j, k] * kron(SIGMAS[j], SIGMAS[k])
    return TwoQubitState(rho / 4)


def from_matrix(entries) -> TwoQubitState:
    a = np.asarray(entries, dtype=np.complex128)
    if a.size != 16:
        raise InvalidStateError(f"expected 16 entries, got {a.size}")
    return TwoQubitState(a.reshape(4, 4))


def bloch_decompose(s: TwoQubitState):
    return s.bloch_u.copy(), s.bloch_v.copy(), s.T.copy()


def correlation_spectrum(s: TwoQubitState) -> tuple[float, float, float]:
    return s.spectrum


def bell_state(name: str = "psi-") -> TwoQubitState:
    vecs = {
        "phi+": [1, 0, 0, 1],
        "phi-": [1, 0, 0, -1],
        "psi+": [0, 1, 1, 0],
        "psi-": [0, 1, -1, 0],
    }
    psi = np.asarray(vecs[name], dtype=np.complex128) / np.sqrt(2)
    return TwoQubitState(np.outer(psi, psi.conj()), label=name)


def _generator(seed) -> np.random.Generator:
    """PCG64 stream from an integer seed or a ``SeedSequence`` (used for per-sample seeds)."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(int(seed)))


def sample_seed(seed: int, *path: int) -> np.random.SeedSequence:
    """Deterministic child seed for sample ``path`` of a run seeded with ``seed``."""
    return np.random.SeedSequence([int(seed), *(int(p) for p in path)])


def random_state(seed) -> TwoQubitState:
    """Ginibre (Hilbert-Schmidt) random state from a PCG64 stream.

    ``G = (X + iY)/sqrt(2)`` with X, Y drawn as ``standard_normal((4, 4))`` in
    that order; ``rho = G G^dag / Tr``.
    """
    rng = _generator(seed)
    g = (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))) / np.sqrt(2)
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return TwoQubitState(rho / np.trace(rho).real, label="ginibre")


def diagonal_state(diag, order: str = "xyz") -> TwoQubitState:
    """State with ``u = v = 0`` and correlation tensor diagonal.

    ``diag`` is placed on the axes named by ``order`` (largest magnitude first
    once sorted), e.g. ``order="zxy"`` puts the largest entry on sigma_3.
    """
    d = np.asarray(diag, dtype=np.float64)
    d = d[np.argsort(-np.abs(d), kind="stable")]
    t = np.zeros((3, 3))
    for k, axis in enumerate(order):
        t[_AXES[axis], _AXES[axis]] = d[k]
    return from_bloch(np.zeros(3), np.zeros(3), t)


def random_diagonal_state(seed, order: str = "xyz") -> TwoQubitState:
    """Uniform sample from the tetrahedron of valid diagonal tensors."""
    rng = _generator(seed)
    while True:
        d = rng.uniform(-1.0, 1.0, size=3)
        x, y, z = d
        eig = [1 - x - y - z, 1 - x + y + z, 1 + x - y + z, 1 + x + y - z]
        if min(eig) >= 0.0:
            return diagonal_state(d, order)


def is_aligned(s: TwoQubitState, order: str = "xyz", tol: float = RECON_TOL) -> bool:
    """True if T is diagonal with |T| entries E1, E2, E3 on the axes named by ``order``."""
    t = s.T
    if np.max(np.abs(t - np.diag(np.diag(t)))) > tol:
        return False
    return all(abs(abs(t[_AXES[a], _AXES[a]]) - e) <= tol for a, e in zip(order, s.spectrum))


def _su2(rot: np.ndarray) -> np.ndarray:
    """SU(2) element U with ``U (n.sigma) U^dag = (rot n).sigma``."""
    from scipy.spatial.transform import Rotation

    x, y, z, w = Rotation.from_matrix(rot).as_quat()
    return w * I2 - 1j * (x * SIGMAS[0] + y * SIGMAS[1] + z * SIGMAS[2])


def local_unitary_diagonalize(s: TwoQubitState, order: str = "xyz") -> TwoQubitState:
    """Locally rotate ``s`` so its correlation tensor is diagonal.

    The singular values E1 >= E2 >= E3 land on the axes named by ``order``.
    Returns ``s`` itself when it is already in that form.
    """
    if sorted(order) != ["x", "y", "z"]:
        raise ValueError(f"order must be a permutation of 'xyz', got {order!r}")
    if is_aligned(s, order):
        return s
    t = s.T
    axes = [_AXES[a] for a in order]
    u, sv, vt = np.linalg.svd(t)
    v = vt.T
    if np.linalg.det(u) < 0:
        u[:, 2] *= -1
    if np.linalg.det(v) < 0:
        v[:, 2] *= -1
    perm = np.zeros((3, 3))
    for k, a in enumerate(axes):
        perm[a, k] = 1.0
    if np.linalg.det(perm) < 0:
        perm = -perm
    rot_a = perm @ u.T
    rot_b = perm @ v.T
    uu = kron(_su2(rot_a), _su2(rot_b))
    rho = uu @ s.rho @ uu.conj().T
    label = f"{s.label}|diag-{order}" if s.label else f"diag-{order}"
    return TwoQubitState(0.5 * (rho + rho.conj().T), label=label)
