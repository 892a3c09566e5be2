"""Linear-chain and star networks: wiring and exact behaviors.

Source ``i`` contributes global qubits ``2i`` (first factor) and ``2i + 1``.
Chain: party A1 holds qubit 0, central A_k holds (2k-3, 2k-2), A_{n+1} holds
2n-1, which is already party-contiguous. Star: central A1 holds the first
qubit of every source, edge A_{i+2} holds the second qubit of source i.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import RECON_TOL, STRUCT_TOL, kron, permute_qubits
from .measurements import EntangledBasisMeasurement, MeasurementPair, bell_basis, ghz_basis
from .states import TwoQubitState

LINEAR = "linear"
STAR = "star"
TOPOLOGIES = (LINEAR, STAR)

MAX_N = 6


class ScenarioError(ValueError):
    pass


@dataclass(eq=False)
class Party:
    name: str
    pair: MeasurementPair | None = None
    basis: EntangledBasisMeasurement | None = None
    # Generic POVM stack (setting, outcome, d, d); overrides pair/basis when set.
    povm_override: np.ndarray | None = None
    n_bits_override: int | None = None

    @property
    def role(self) -> str:
        return "central" if self.basis is not None else "edge"

    def povm_stack(self) -> np.ndarray:
        if self.povm_override is not None:
            return self.povm_override
        if self.pair is not None:
            return self.pair.povms()
        if self.basis is not None:
            return self.basis.projectors[None]
        raise ScenarioError(f"party {self.name} has no measurement")

    @property
    def n_inputs(self) -> int:
        return self.povm_stack().shape[0]

    @property
    def n_bits(self) -> int:
        if self.n_bits_override is not None:
            return self.n_bits_override
        if self.basis is not None:
            return self.basis.n_bits
        return 1


@dataclass(eq=False)
class NetworkScenario:
    topology: str
    sources: list[TwoQubitState]
    parties: list[Party]
    max_n: int = MAX_N
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.sources)

    def party(self, key) -> Party:
        if isinstance(key, int):
            return self.parties[key]
        for p in self.parties:
            if p.name == key:
                return p
        raise KeyError(f"no party named {key!r}")

    def party_index(self, key) -> int:
        if isinstance(key, int):
            return key
        return [p.name for p in self.parties].index(self.party(key).name)

    def edge_parties(self) -> list[Party]:
        return [p for p in self.parties if p.role == "edge"]

    def validate(self) -> None:
        n = self.n
        if self.topology not in TOPOLOGIES:
            raise ScenarioError(f"unknown topology {self.topology!r}")
        if n < 1:
            raise ScenarioError("a network needs at least one source")
        if n > self.max_n:
            raise ScenarioError(f"n = {n} exceeds the supported maximum {self.max_n}")
        if len(self.parties) != n + 1:
            raise ScenarioError(f"{self.topology} network with n={n} needs {n + 1} parties, got {len(self.parties)}")
        if self.topology == STAR and n < 2:
            raise ScenarioError("a star network needs n >= 2")
        for p, qubits in zip(self.parties, self.party_qubits()):
            stack = p.povm_stack()
            d = 1 << len(qubits)
            if stack.shape[-1] != d:
                raise ScenarioError(
                    f"party {p.name} holds {len(qubits)} qubit(s) but its measurement acts on dimension {stack.shape[-1]}"
                )
            if stack.shape[1] != 1 << p.n_bits:
                raise ScenarioError(f"party {p.name}: outcome count does not match its {p.n_bits} output bit(s)")

    def party_qubits(self) -> list[tuple[int, ...]]:
        """Source-ordered global qubit indices held by each party."""
        n = self.n
        if self.topology == LINEAR:
            if n == 1:
                return [(0,), (1,)]
            return [(0,)] + [(2 * k - 1, 2 * k) for k in range(1, n)] + [(2 * n - 1,)]
        return [tuple(2 * i for i in range(n))] + [(2 * i + 1,) for i in range(n)]

    def wiring_permutation(self) -> list[int]:
        """perm[q] = position of source-ordered qubit q in the party-ordered layout."""
        perm = [0] * (2 * self.n)
        pos = 0
        for qubits in self.party_qubits():
            for q in qubits:
                perm[q] = pos
                pos += 1
        return perm

    def with_parties(self, parties: Sequence[Party]) -> "NetworkScenario":
        return NetworkScenario(self.topology, list(self.sources), list(parties), self.max_n, dict(self.meta))

    def with_sources(self, sources: Sequence[TwoQubitState]) -> "NetworkScenario":
        return NetworkScenario(self.topology, list(sources), list(self.parties), self.max_n, dict(self.meta))


def linear_scenario(sources: Sequence[TwoQubitState], first: MeasurementPair, last: MeasurementPair) -> NetworkScenario:
    n = len(sources)
    parties = [Party("A1", pair=first)]
    parties += [Party(f"A{k}", basis=bell_basis()) for k in range(2, n + 1)]
    parties.append(Party(f"A{n + 1}", pair=last))
    sc = NetworkScenario(LINEAR, list(sources), parties)
    sc.validate()
    return sc


def star_scenario(sources: Sequence[TwoQubitState], edges: Sequence[MeasurementPair]) -> NetworkScenario:
    n = len(sources)
    if len(edges) != n:
        raise ScenarioError(f"star with {n} sources needs {n} edge pairs, got {len(edges)}")
    parties = [Party("A1", basis=ghz_basis(n))]
    parties += [Party(f"A{i + 2}", pair=pair) for i, pair in enumerate(edges)]
    sc = NetworkScenario(STAR, list(sources), parties)
    sc.validate()
    return sc


@dataclass(eq=False)
class Behavior:
    """Joint conditional probability table.

    ``probs`` has one axis of size 2 per input-bearing party (in party order)
    followed by one axis of size 2 per output bit (party order, then bit order).
    """

    topology: str
    n: int
    probs: np.ndarray
    input_parties: tuple[str, ...]
    output_layout: tuple[tuple[str, int], ...]

    @property
    def n_inputs(self) -> int:
        return len(self.input_parties)

    @property
    def n_output_bits(self) -> int:
        return sum(k for _, k in self.output_layout)

    def normalization_error(self) -> float:
        out_axes = tuple(range(self.n_inputs, self.probs.ndim))
        return float(np.max(np.abs(self.probs.sum(axis=out_axes) - 1.0)))

    def min_probability(self) -> float:
        return float(self.probs.min())

    def output_axes(self, party: str) -> tuple[int, ...]:
        start = self.n_inputs
        for name, k in self.output_layout:
            if name == party:
                return tuple(range(start, start + k))
            start += k
        raise KeyError(party)

    def rows(self):
        """Yield (input bits, output bits, probability) in lexicographic order."""
        shape_in = (2,) * self.n_inputs
        shape_out = (2,) * self.n_output_bits
        for x in itertools.product((0, 1), repeat=len(shape_in)):
            for a in itertools.product((0, 1), repeat=len(shape_out)):
                yield x, a, float(self.probs[x + a])


def _product_source_operands(scenario: NetworkScenario, ket, bra):
    ops = []
    for i, s in enumerate(scenario.sources):
        qa, qb = 2 * i, 2 * i + 1
        ops.append((s.rho.reshape(2, 2, 2, 2), [ket(qa), ket(qb), bra(qa), bra(qb)]))
    return ops


def behavior(scenario: NetworkScenario) -> Behavior:
    """Born-rule table computed by contracting the product of sources with every POVM.

    The global state is never formed; the contraction follows the wiring directly.
    """
    scenario.validate()
    m = 2 * scenario.n
    ket = lambda q: q  # noqa: E731
    bra = lambda q: m + q  # noqa: E731
    label = 2 * m
    operands: list = []
    for arr, sub in _product_source_operands(scenario, ket, bra):
        operands += [arr, sub]
    in_labels, out_labels = [], []
    for party, qubits in zip(scenario.parties, scenario.party_qubits()):
        stack = party.povm_stack()
        k = len(qubits)
        s_lab, o_lab = label, label + 1
        label += 2
        tensor = stack.reshape((stack.shape[0], stack.shape[1]) + (2,) * (2 * k))
        # Tr[M rho]: M's row index meets rho's column index and vice versa.
        sub = [s_lab, o_lab] + [bra(q) for q in qubits] + [ket(q) for q in qubits]
        operands += [tensor, sub]
        if stack.shape[0] > 1:
            in_labels.append(s_lab)
        out_labels.append(o_lab)
    res = np.einsum(*operands, in_labels + out_labels, optimize="greedy")
    probs = np.real(res)
    shape = (2,) * len(in_labels)
    for party in scenario.parties:
        shape += (2,) * party.n_bits
    probs = np.ascontiguousarray(probs.reshape(shape))
    inputs = tuple(p.name for p in scenario.parties if p.povm_stack().shape[0] > 1)
    layout = tuple((p.name, p.n_bits) for p in scenario.parties)
    return Behavior(scenario.topology, scenario.n, probs, inputs, layout)


def assemble_global_state(scenario: NetworkScenario) -> np.ndarray:
    """Dense 2n-qubit state with every party's qubits contiguous, in party order."""
    scenario.validate()
    rho = kron(*(s.rho for s in scenario.sources))
    return permute_qubits(rho, scenario.wiring_permutation())


def behavior_dense(scenario: NetworkScenario) -> Behavior:
    """Reference implementation: explicit Kronecker POVMs traced against the global state."""
    rho = assemble_global_state(scenario)
    stacks = [p.povm_stack() for p in scenario.parties]
    input_parties = [i for i, s in enumerate(stacks) if s.shape[0] > 1]
    shape = (2,) * len(input_parties) + tuple(b for p in scenario.parties for b in (2,) * p.n_bits)
    probs = np.zeros(shape)
    for x in itertools.product((0, 1), repeat=len(input_parties)):
        setting = [0] * len(stacks)
        for i, xi in zip(input_parties, x):
            setting[i] = xi
        for outs in itertools.product(*(range(s.shape[1]) for s in stacks)):
            op = kron(*(stacks[i][setting[i], o] for i, o in enumerate(outs)))
            p = float(np.real(np.einsum("ij,ji->", op, rho)))
            bits = tuple(
                b
                for party, o in zip(scenario.parties, outs)
                for b in ((o >> (party.n_bits - 1 - j)) & 1 for j in range(party.n_bits))
            )
            probs[x + bits] = p
    inputs = tuple(scenario.parties[i].name for i in input_parties)
    layout = tuple((p.name, p.n_bits) for p in scenario.parties)
    return Behavior(scenario.topology, scenario.n, probs, inputs, layout)


def no_signalling_check(b: Behavior) -> float:
    """Largest change of any party-subset marginal under a change of remote inputs."""
    names = [name for name, _ in b.output_layout]
    worst = 0.0
    for r in range(1, len(names)):
        for subset in itertools.combinations(names, r):
            keep = set()
            for name in subset:
                keep.update(b.output_axes(name))
            drop = tuple(ax for ax in range(b.n_inputs, b.probs.ndim) if ax not in keep)
            marg = b.probs.sum(axis=drop, keepdims=True)
            remote = tuple(i for i, name in enumerate(b.input_parties) if name not in subset)
            if not remote:
                continue
            spread = np.ptp(marg, axis=remote)
            worst = max(worst, float(np.max(spread)))
    return worst


def is_valid_behavior(b: Behavior, tol: float = STRUCT_TOL) -> bool:
    return b.min_probability() >= -tol and b.normalization_error() <= tol


__all__ = [
    "Behavior",
    "LINEAR",
    "MAX_N",
    "NetworkScenario",
    "Party",
    "RECON_TOL",
    "STAR",
    "ScenarioError",
    "assemble_global_state",
    "behavior",
    "behavior_dense",
    "linear_scenario",
    "no_signalling_check",
    "star_scenario",
]
