"""Linear-chain and star n-local functionals, their closed forms and bounds.

Chain functional: ``sqrt|I| + sqrt|J| <= 1`` where I correlates the edge
outputs with the ZZ-parity bit of every Bell-basis center and J (with the
``(-1)^(x1 + x_{n+1})`` input sign) with the XX-parity bit.

Star functional: ``2^(2-n) sum_i |J_i|^(1/n) <= 1`` over the 2^(n-1) patterns
``h in {1, 2}^n`` with an even number of 2s. The center's post-processed bit
for pattern h is the eigenvalue of ``sigma_h1 x ... x sigma_hn`` on its GHZ
outcome, and the input sign is the parity of the inputs of the edges whose
slot is sigma_2.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._backend import linear_lhs_batch, star_lhs_batch
from .linalg import PAULI, REPORT_TOL, kron, pauli_string
from .measurements import MeasurementPair, ghz_basis, parity_readout
from .network import LINEAR, STAR, Behavior, NetworkScenario, assemble_global_state, behavior
from .states import TwoQubitState, is_aligned

LINEAR_FUNCTIONAL = "linear"
STAR_FUNCTIONAL = "star"
CLASSICAL_BOUND = 1.0

# Tolerance for recognising that a scenario sits on an analytic family.
FAMILY_TOL = 1e-9


@dataclass
class InequalityReport:
    functional: str
    n: int
    correlators: tuple[float, ...]
    correlator_labels: tuple[str, ...]
    lhs: float
    bound: float = CLASSICAL_BOUND
    analytic: float | None = None
    family: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def violated(self) -> bool:
        return self.lhs > self.bound + REPORT_TOL

    @property
    def discrepancy(self) -> float | None:
        if self.analytic is None:
            return None
        return abs(self.lhs - self.analytic)

    def to_dict(self) -> dict:
        return {
            "functional": self.functional,
            "n": self.n,
            "correlators": dict(zip(self.correlator_labels, self.correlators)),
            "lhs": self.lhs,
            "bound": self.bound,
            "violated": self.violated,
            "analytic": self.analytic,
            "family": self.family,
            "discrepancy": self.discrepancy,
            **self.extra,
        }


# --- behavior-level functionals ------------------------------------------------


def linear_correlators(b: Behavior, n: int | None = None) -> tuple[float, float]:
    """(I_n, J_n) from a chain behavior with two inputs at each extreme."""
    if b.topology != LINEAR:
        raise ValueError(f"linear correlators need a linear behavior, got {b.topology!r}")
    n = b.n if n is None else n
    if n != b.n:
        raise ValueError(f"behavior has n = {b.n}, asked for {n}")
    if b.n_inputs != 2 or b.probs.shape[:2] != (2, 2):
        raise ValueError("linear correlators need exactly two binary inputs (A1 and the last party)")
    sgn = np.array([1.0, -1.0])
    out = []
    for k in (0, 1):
        # Contract every output axis with its sign; centers use bit k only.
        weights = []
        for name, nbits in b.output_layout:
            for bit in range(nbits):
                if nbits == 1 or bit == k:
                    weights.append(sgn)
                else:
                    weights.append(np.ones(2))
        corr = b.probs
        for w in reversed(weights):
            corr = corr @ w
        # corr[i, j] = <D_{1,i} D^k ... D_{n+1,j}>
        if k == 0:
            out.append(0.25 * float(corr.sum()))
        else:
            out.append(0.25 * float(corr[0, 0] - corr[0, 1] - corr[1, 0] + corr[1, 1]))
    return out[0], out[1]


def linear_lhs(b: Behavior, n: int | None = None) -> InequalityReport:
    i_n, j_n = linear_correlators(b, n)
    lhs = math.sqrt(abs(i_n)) + math.sqrt(abs(j_n))
    return InequalityReport(LINEAR_FUNCTIONAL, b.n, (i_n, j_n), ("I", "J"), lhs)


def star_patterns(n: int) -> list[tuple[int, ...]]:
    """Patterns h in {1,2}^n with an even count of 2s, ordered by that count, then lexicographically."""
    if n < 1:
        raise ValueError("n must be positive")
    pats = []
    for k2 in range(0, n + 1, 2):
        for pos in itertools.combinations(range(n), k2):
            pats.append(tuple(2 if j in pos else 1 for j in range(n)))
    return pats


def pattern_label(h: Sequence[int]) -> str:
    return "".join("X" if x == 1 else "Y" for x in h)


def star_correlators(b: Behavior, n: int | None = None, basis=None) -> list[float]:
    """J_i for every pattern of :func:`star_patterns`, from a star behavior."""
    if b.topology != STAR:
        raise ValueError(f"star correlators need a star behavior, got {b.topology!r}")
    n = b.n if n is None else n
    if n != b.n:
        raise ValueError(f"behavior has n = {b.n}, asked for {n}")
    if b.n_inputs != n:
        raise ValueError(f"star correlators need {n} binary edge inputs, got {b.n_inputs}")
    basis = ghz_basis(n) if basis is None else basis
    sgn = np.array([1.0, -1.0])
    # Sum edge outputs with (-1)^a first: shape (inputs..., center bits...).
    p = b.probs
    for _ in range(n):
        p = p @ sgn
    inputs = list(itertools.product((0, 1), repeat=n))
    values = []
    for h in star_patterns(n):
        readout = parity_readout(basis, [("X" if x == 1 else "Y") for x in h]).reshape((2,) * n)
        corr = np.tensordot(p, readout, axes=n)  # indexed by inputs
        total = 0.0
        for x in inputs:
            s = sum(xj for xj, hj in zip(x, h) if hj == 2) & 1
            total += (-1.0) ** s * float(corr[x])
        values.append(total / 2**n)
    return values


def star_lhs(b: Behavior, n: int | None = None, basis=None) -> InequalityReport:
    js = star_correlators(b, n, basis)
    nn = b.n
    lhs = 2.0 ** (2 - nn) * sum(abs(j) ** (1.0 / nn) for j in js)
    labels = tuple(pattern_label(h) for h in star_patterns(nn))
    return InequalityReport(STAR_FUNCTIONAL, nn, tuple(js), labels, lhs)


def star_operator_correlators(scenario: NetworkScenario) -> list[float]:
    """J_i as direct traces against the dense global state.

    ``J_h = Tr[(sigma_h)_center x (x)_j ((m_j0 +- m_j1)/2 . sigma) rho]``, with +
    on sigma_1 slots and - on sigma_2 slots. For family settings this is the
    ``cos^k1 t sin^k2 t Tr[sigma_h x sigma_h rho]`` form times the etas.
    """
    if scenario.topology != STAR:
        raise ValueError("operator correlators are defined for star scenarios")
    rho = assemble_global_state(scenario)
    n = scenario.n
    edges = scenario.parties[1:]
    values = []
    for h in star_patterns(n):
        center = pauli_string(["X" if x == 1 else "Y" for x in h])
        ops = []
        for hj, party in zip(h, edges):
            m0, m1 = party.pair.m0.vector, party.pair.m1.vector
            v = 0.5 * (m0 + m1) if hj == 1 else 0.5 * (m0 - m1)
            ops.append(v[0] * PAULI["X"] + v[1] * PAULI["Y"] + v[2] * PAULI["Z"])
        op = kron(center, *ops)
        values.append(float(np.real(np.trace(op @ rho))))
    return values


# --- closed forms --------------------------------------------------------------


def _spectra(states) -> list[tuple[float, float, float]]:
    out = []
    for s in states:
        if isinstance(s, TwoQubitState):
            out.append(s.spectrum)
        else:
            e = tuple(float(x) for x in s)
            if len(e) != 3:
                raise ValueError(f"expected a state or a spectrum triple, got {s!r}")
            out.append(e)
    if not out:
        raise ValueError("need at least one state")
    return out


def _prod(xs) -> float:
    return float(np.prod(np.asarray(list(xs), dtype=np.float64)))


def _check_etas(etas):
    for e in etas:
        if not 0.0 <= e <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {e}")


def linear_bound_analytic(states) -> float:
    """``sqrt(prod E1 + prod E2)``."""
    sp = _spectra(states)
    return math.sqrt(_prod(e[0] for e in sp) + _prod(e[1] for e in sp))


def linear_bound_noisy(states, eta1: float, eta2: float) -> float:
    _check_etas((eta1, eta2))
    return math.sqrt(eta1 * eta2) * linear_bound_analytic(states)


def linear_optimal_angle(states) -> float:
    """``r = arcsin sqrt(P1/(P1 + P2))`` with ``Pk = prod E_k``."""
    sp = _spectra(states)
    p1, p2 = _prod(e[0] for e in sp), _prod(e[1] for e in sp)
    if p1 + p2 == 0.0:
        return math.pi / 4
    return math.asin(math.sqrt(p1 / (p1 + p2)))


def linear_family_angle(states) -> float:
    """Angle t of the ``xz`` family (``cos t sigma_3 +- sin t sigma_1``) reaching the chain bound.

    With E1 on sigma_3 and E2 on sigma_1 this is ``pi/2 - r``.
    """
    return math.pi / 2 - linear_optimal_angle(states)


def _star_q(sp, n):
    q1 = _prod(e[0] ** (2.0 / n**2) for e in sp)
    q2 = _prod(e[1] ** (2.0 / n**2) for e in sp)
    return q1, q2


def star_g(sp, k2: int) -> float:
    """Sum over arrangements h with k2 entries equal to 2 of prod_i E_{i h_i}^(1/n)."""
    n = len(sp)
    total = 0.0
    for h in itertools.product((1, 2), repeat=n):
        if math.prod(h) != 2**k2:
            continue
        total += _prod(sp[i][h[i] - 1] ** (1.0 / n) for i in range(n))
    return total


def star_numerator(states) -> float:
    """``sum_{even k2} (prod_i E_i1^k1 E_i2^k2)^(1/n^3) G_k2``."""
    sp = _spectra(states)
    n = len(sp)
    total = 0.0
    for k2 in range(0, n + 1, 2):
        k1 = n - k2
        inner = _prod((e[0] ** k1) * (e[1] ** k2) for e in sp)
        total += inner ** (1.0 / n**3) * star_g(sp, k2)
    return total


def star_bound_analytic(states) -> float:
    sp = _spectra(states)
    n = len(sp)
    q1, q2 = _star_q(sp, n)
    if q1 + q2 == 0.0:
        return 0.0
    return star_numerator(sp) / (2.0 ** (n - 2) * math.sqrt(q1 + q2))


def star_bound_noisy(states, etas: Sequence[float]) -> float:
    sp = _spectra(states)
    etas = [float(e) for e in etas]
    if len(etas) != len(sp):
        raise ValueError(f"need {len(sp)} etas, got {len(etas)}")
    _check_etas(etas)
    return _prod(etas) ** (1.0 / len(sp)) * star_bound_analytic(sp)


def star_optimal_angle(states) -> float:
    """``t = arcsin sqrt(Q2/(Q1 + Q2))`` with ``Qk = prod E_k^(2/n^2)``."""
    sp = _spectra(states)
    q1, q2 = _star_q(sp, len(sp))
    if q1 + q2 == 0.0:
        return math.pi / 4
    return math.asin(math.sqrt(q2 / (q1 + q2)))


def xz_fixed_value(states) -> float:
    """Chain value with sharp ``{sigma_1, sigma_3}`` at both extremes: ``(sqrt prod E1 + sqrt prod E3)/2``."""
    sp = _spectra(states)
    return 0.5 * (math.sqrt(_prod(e[0] for e in sp)) + math.sqrt(_prod(e[2] for e in sp)))


def sigma12_star_value(states) -> float:
    """Star value with sharp ``{sigma_1, sigma_2}`` edges: ``sum_h prod_i E_{i h_i}^(1/n) / 2^(n-1)``."""
    sp = _spectra(states)
    n = len(sp)
    total = sum(star_g(sp, k2) for k2 in range(0, n + 1, 2))
    return total / 2.0 ** (n - 1)


# --- batch evaluation of the functionals straight from settings -----------------


def linear_lhs_from_settings(states, first: MeasurementPair, last: MeasurementPair) -> tuple[float, float, float]:
    """(lhs, I, J) from correlation tensors, without forming the behavior."""
    tensors = np.array([s.T for s in states])
    lhs, i_n, j_n = linear_lhs_batch(
        tensors,
        first.m0.vector[None], first.m1.vector[None],
        last.m0.vector[None], last.m1.vector[None],
    )
    return float(lhs[0]), float(i_n[0]), float(j_n[0])


def star_lhs_from_settings(states, edges: Sequence[MeasurementPair]) -> tuple[float, list[float]]:
    tensors = np.array([s.T for s in states])
    m0 = np.array([[p.m0.vector for p in edges]])
    m1 = np.array([[p.m1.vector for p in edges]])
    pats = np.array(star_patterns(len(states)), dtype=np.intc) - 1
    lhs, js = star_lhs_batch(tensors, m0, m1, pats)
    return float(lhs[0]), [float(x) for x in js[0]]


# --- family recognition --------------------------------------------------------


def _same_angle(t: float, target: float, tol: float = FAMILY_TOL) -> bool:
    return abs(abs(math.cos(t)) - abs(math.cos(target))) <= tol and abs(abs(math.sin(t)) - abs(math.sin(target))) <= tol


def _is_sharp_pair(pair: MeasurementPair, d0, d1, tol: float = FAMILY_TOL) -> bool:
    return (
        np.max(np.abs(pair.m0.vector - np.asarray(d0))) <= tol
        and np.max(np.abs(pair.m1.vector - np.asarray(d1))) <= tol
    )


_X, _Y, _Z = (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)


def linear_analytic(scenario: NetworkScenario) -> tuple[float | None, str | None]:
    """Closed-form prediction when the chain sits on a recognised family.

    ``optimal``: both extremes in the xz family at the bound-reaching angle,
    states with E1 on sigma_3 and E2 on sigma_1. ``sigma13``: both extremes
    sharp ``(sigma_1, sigma_3)``, states with E1 on sigma_1 and E3 on sigma_3, and
    at least one center (with a single source the correlators mix both axes).
    """
    states = scenario.sources
    first, last = scenario.parties[0].pair, scenario.parties[-1].pair
    if first is None or last is None:
        return None, None
    fa, fb = first.family_params(), last.family_params()
    if fa and fb and fa[0] == fb[0] == "xz" and all(is_aligned(s, "zxy", FAMILY_TOL) for s in states):
        t_opt = linear_family_angle(states)
        if _same_angle(fa[1], t_opt) and _same_angle(fb[1], t_opt):
            return linear_bound_noisy(states, min(fa[2], 1.0), min(fb[2], 1.0)), "optimal"
    if (
        scenario.n >= 2
        and _is_sharp_pair(first, _X, _Z)
        and _is_sharp_pair(last, _X, _Z)
        and all(is_aligned(s, "xyz", FAMILY_TOL) for s in states)
    ):
        return xz_fixed_value(states), "sigma13"
    return None, None


def star_analytic(scenario: NetworkScenario) -> tuple[float | None, str | None]:
    """``optimal``: all edges xy family at the closed-form angle, states with E1 on
    sigma_1 and E2 on sigma_2. ``sigma12``: all edges sharp ``(sigma_1, sigma_2)``.
    """
    states = scenario.sources
    edges = [p.pair for p in scenario.parties[1:]]
    if any(p is None for p in edges) or not all(is_aligned(s, "xyz", FAMILY_TOL) for s in states):
        return None, None
    params = [p.family_params() for p in edges]
    if all(fp is not None and fp[0] == "xy" for fp in params):
        t_opt = star_optimal_angle(states)
        if all(_same_angle(fp[1], t_opt) for fp in params):
            return star_bound_noisy(states, [min(fp[2], 1.0) for fp in params]), "optimal"
    if all(_is_sharp_pair(p, _X, _Y) for p in edges):
        return sigma12_star_value(states), "sigma12"
    return None, None


def evaluate(scenario: NetworkScenario, b: Behavior | None = None) -> InequalityReport:
    """Behavior, functional and (when recognised) closed-form prediction for a scenario."""
    b = behavior(scenario) if b is None else b
    if scenario.topology == LINEAR:
        report = linear_lhs(b)
        analytic, family = linear_analytic(scenario)
    else:
        report = star_lhs(b, basis=scenario.parties[0].basis)
        analytic, family = star_analytic(scenario)
    report.analytic = analytic
    report.family = family
    return report


__all__ = [
    "CLASSICAL_BOUND",
    "InequalityReport",
    "evaluate",
    "linear_analytic",
    "linear_bound_analytic",
    "linear_bound_noisy",
    "linear_correlators",
    "linear_family_angle",
    "linear_lhs",
    "linear_lhs_from_settings",
    "linear_optimal_angle",
    "pattern_label",
    "sigma12_star_value",
    "star_analytic",
    "star_bound_analytic",
    "star_bound_noisy",
    "star_correlators",
    "star_g",
    "star_lhs",
    "star_lhs_from_settings",
    "star_numerator",
    "star_operator_correlators",
    "star_optimal_angle",
    "star_patterns",
    "xz_fixed_value",
]
