"""Noisy dichotomic qubit observables, joint measurability, entangled bases."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .linalg import I2, STRUCT_TOL, bloch_operator, min_eigenvalue, pauli_string

# Slack on the Busch inequality so boundary-exact settings (eta = threshold) count as compatible.
COMPAT_TOL = 1e-12

PLANES = ("xz", "xy")


class IncompatibleError(ValueError):
    """Raised when a construction needs a jointly measurable pair and gets one that is not."""


@dataclass(frozen=True, eq=False)
class DichotomicObservable:
    """``M = eta * (direction . sigma)``; outcome bit 0 is the +1 eigenvalue."""

    eta: float
    direction: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64).reshape(3)
        if not 0.0 <= self.eta <= 1.0 + STRUCT_TOL:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if np.linalg.norm(d) > 1.0 + STRUCT_TOL:
            raise ValueError(f"direction norm {np.linalg.norm(d):.6g} exceeds 1")
        d.setflags(write=False)
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "eta", float(self.eta))

    @classmethod
    def from_vector(cls, m) -> "DichotomicObservable":
        """Fold the length of an unnormalised Bloch vector into eta."""
        m = np.asarray(m, dtype=np.float64).reshape(3)
        norm = float(np.linalg.norm(m))
        if norm == 0.0:
            return cls(0.0, np.array([0.0, 0.0, 1.0]))
        return cls(norm, m / norm)

    @property
    def vector(self) -> np.ndarray:
        return self.eta * self.direction

    @property
    def operator(self) -> np.ndarray:
        return bloch_operator(self.vector)


def povm_elements(obs: DichotomicObservable) -> tuple[np.ndarray, np.ndarray]:
    m = obs.operator
    return (I2 + m) / 2, (I2 - m) / 2


def plane_directions(plane: str, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Unit directions of the two settings of an equatorial family.

    ``xz``: cos t sigma_3 + (-1)^j sin t sigma_1.
    ``xy``: cos t sigma_1 + (-1)^j sin t sigma_2.
    """
    c, s = math.cos(t), math.sin(t)
    if plane == "xz":
        return np.array([s, 0.0, c]), np.array([-s, 0.0, c])
    if plane == "xy":
        return np.array([c, s, 0.0]), np.array([c, -s, 0.0])
    raise ValueError(f"unknown plane {plane!r}; expected one of {PLANES}")


@dataclass(frozen=True, eq=False)
class MeasurementPair:
    """The two settings of an edge party. ``plane``/``t`` are kept when known."""

    m0: DichotomicObservable
    m1: DichotomicObservable
    plane: str | None = None
    t: float | None = None

    @classmethod
    def family(cls, plane: str, t: float, eta: float) -> "MeasurementPair":
        n0, n1 = plane_directions(plane, t)
        return cls(DichotomicObservable(eta, n0), DichotomicObservable(eta, n1), plane, float(t))

    @classmethod
    def from_vectors(cls, v0, v1) -> "MeasurementPair":
        return cls(DichotomicObservable.from_vector(v0), DichotomicObservable.from_vector(v1))

    @classmethod
    def from_directions(cls, n0, n1, eta: float) -> "MeasurementPair":
        return cls(DichotomicObservable(eta, n0), DichotomicObservable(eta, n1))

    @property
    def settings(self) -> tuple[DichotomicObservable, DichotomicObservable]:
        return self.m0, self.m1

    @property
    def eta(self) -> float:
        """Common sharpness; the larger one if the two settings differ."""
        return max(self.m0.eta, self.m1.eta)

    @cached_property
    def margin(self) -> float:
        a, b = self.m0.vector, self.m1.vector
        return 1.0 - 0.5 * (np.linalg.norm(a + b) + np.linalg.norm(a - b))

    def povms(self) -> np.ndarray:
        """Array (setting, outcome, 2, 2)."""
        return np.array([povm_elements(self.m0), povm_elements(self.m1)])

    def family_params(self, tol: float = 1e-12) -> tuple[str, float, float] | None:
        """(plane, t, eta) if the pair is a member of an equatorial family.

        Recovered from the vectors when the pair was not built with
        :meth:`family`, so settings written as ``c (sigma_3 +- sigma_1)`` count.
        """
        if self.plane is not None and self.t is not None:
            return self.plane, self.t, self.eta
        a, b = self.m0.vector, self.m1.vector
        eta = float(np.linalg.norm(a))
        if abs(eta - np.linalg.norm(b)) > tol:
            return None
        x0, y0, z0 = a
        x1, y1, z1 = b
        if max(abs(y0), abs(y1), abs(z0 - z1), abs(x0 + x1)) <= tol:
            return "xz", math.atan2(x0, z0), eta
        if max(abs(z0), abs(z1), abs(x0 - x1), abs(y0 + y1)) <= tol:
            return "xy", math.atan2(y0, x0), eta
        return None


def is_compatible(pair: MeasurementPair) -> tuple[bool, float]:
    """Busch criterion ``||m0 + m1|| + ||m0 - m1|| <= 2``.

    The margin is ``1 - (||m0 + m1|| + ||m0 - m1||)/2``; nonnegative iff the
    pair is jointly measurable.
    """
    return bool(pair.margin >= -COMPAT_TOL), float(pair.margin)


def compatibility_threshold(plane: str, t: float) -> float:
    if plane not in PLANES:
        raise ValueError(f"unknown plane {plane!r}; expected one of {PLANES}")
    return 1.0 / (abs(math.cos(t)) + abs(math.sin(t)))


@dataclass(frozen=True, eq=False)
class ParentPOVM:
    """Joint measurement ``G[l0][l1]``; setting j reads out ``a = l_j``."""

    elements: np.ndarray  # (2, 2, 2, 2): l0, l1, row, col
    pair: MeasurementPair

    def flat(self) -> np.ndarray:
        """Elements indexed by ``lam = 2*l0 + l1``."""
        return self.elements.reshape(4, 2, 2)

    @staticmethod
    def response(setting: int, lam: int) -> int:
        return (lam >> (1 - setting)) & 1

    def marginal_error(self) -> float:
        target = self.pair.povms()
        err0 = np.max(np.abs(self.elements.sum(axis=1) - target[0]))
        err1 = np.max(np.abs(self.elements.sum(axis=0) - target[1]))
        return float(max(err0, err1))

    def min_eigenvalue(self) -> float:
        return min(min_eigenvalue(g) for g in self.flat())


def parent_povm(pair: MeasurementPair) -> ParentPOVM:
    ok, margin = is_compatible(pair)
    if not ok:
        raise IncompatibleError(f"pair is not jointly measurable (margin {margin:.6g})")
    a, b = pair.m0.vector, pair.m1.vector
    c = 0.5 * (np.linalg.norm(a + b) - np.linalg.norm(a - b))
    g = np.empty((2, 2, 2, 2), dtype=np.complex128)
    for l0, l1 in itertools.product((0, 1), repeat=2):
        s0, s1 = 1 - 2 * l0, 1 - 2 * l1
        g[l0, l1] = ((1 + s0 * s1 * c) * I2 + bloch_operator(s0 * a + s1 * b)) / 4
    return ParentPOVM(g, pair)


@dataclass(frozen=True, eq=False)
class EntangledBasisMeasurement:
    """Orthonormal basis on ``n_qubits``; row ``k`` of ``vectors`` has label ``labels[k]``.

    Rows are ordered so that the label bits, read MSB-first, equal ``k``.
    """

    n_qubits: int
    vectors: np.ndarray
    labels: tuple[tuple[int, ...], ...]
    kind: str = ""

    @cached_property
    def projectors(self) -> np.ndarray:
        return np.einsum("ki,kj->kij", self.vectors, self.vectors.conj())

    @property
    def n_bits(self) -> int:
        return len(self.labels[0])

    def completeness_error(self) -> float:
        d = 1 << self.n_qubits
        gram = self.vectors.conj() @ self.vectors.T
        return float(max(np.max(np.abs(self.projectors.sum(axis=0) - np.eye(d))),
                         np.max(np.abs(gram - np.eye(d)))))


def _bits(k: int, width: int) -> tuple[int, ...]:
    return tuple((k >> (width - 1 - i)) & 1 for i in range(width))


def bell_basis() -> EntangledBasisMeasurement:
    """Bell basis labelled (ZZ-parity bit, XX-parity bit).

    (0,0) phi+, (0,1) phi-, (1,0) psi+, (1,1) psi-.
    """
    s = 1 / np.sqrt(2)
    vecs = np.array(
        [[s, 0, 0, s], [s, 0, 0, -s], [0, s, s, 0], [0, s, -s, 0]], dtype=np.complex128
    )
    return EntangledBasisMeasurement(2, vecs, tuple(_bits(k, 2) for k in range(4)), "bell")


def ghz_basis(n: int) -> EntangledBasisMeasurement:
    """``(|0,b> + (-1)^b0 |1,~b>)/sqrt 2`` labelled ``(b0, b_1, ..., b_{n-1})``."""
    if n < 2:
        raise ValueError(f"GHZ basis needs n >= 2, got {n}")
    d = 1 << n
    half = 1 << (n - 1)
    vecs = np.zeros((d, d), dtype=np.complex128)
    labels = []
    for k in range(d):
        label = _bits(k, n)
        b0, rest = label[0], k & (half - 1)
        vecs[k, rest] = 1 / np.sqrt(2)
        vecs[k, half + (~rest & (half - 1))] = (-1) ** b0 / np.sqrt(2)
        labels.append(label)
    return EntangledBasisMeasurement(n, vecs, tuple(labels), "ghz")


def parity_readout(basis: EntangledBasisMeasurement, paulis: Sequence[str] | str) -> np.ndarray:
    """Eigenvalue (+1/-1) of a Pauli string on each basis vector, indexed like ``labels``.

    Raises if the string is not diagonal in the basis.
    """
    if len(paulis) != basis.n_qubits:
        raise ValueError(f"Pauli string {paulis!r} has wrong length for {basis.n_qubits} qubits")
    p = pauli_string(paulis)
    m = basis.vectors.conj() @ p @ basis.vectors.T
    off = m - np.diag(np.diag(m))
    if np.max(np.abs(off)) > STRUCT_TOL:
        raise ValueError(f"Pauli string {''.join(paulis)!r} is not diagonal in the {basis.kind or 'given'} basis")
    diag = np.real(np.diag(m))
    if np.max(np.abs(np.abs(diag) - 1.0)) > STRUCT_TOL:
        raise ValueError(f"Pauli string {''.join(paulis)!r} has non-unit eigenvalues in this basis")
    return np.sign(diag)


def orthonormality_error(basis: EntangledBasisMeasurement) -> float:
    return basis.completeness_error()


__all__ = [
    "COMPAT_TOL",
    "DichotomicObservable",
    "EntangledBasisMeasurement",
    "IncompatibleError",
    "MeasurementPair",
    "ParentPOVM",
    "bell_basis",
    "compatibility_threshold",
    "ghz_basis",
    "is_compatible",
    "parent_povm",
    "parity_readout",
    "plane_directions",
    "povm_elements",
]
