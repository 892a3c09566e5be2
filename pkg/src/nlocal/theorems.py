"""Setting constructions, no-violation audits and explicit hidden-variable models.

Constructions work in a canonical local frame: the sources are first rotated
by local unitaries so the correlation tensor is diagonal (the inequality
values only depend on the singular values, but the fixed setting families
do depend on the frame). The chain construction puts E1 on sigma_3 and E2 on
sigma_1 so its xz settings ``sin r sigma_3 +- cos r sigma_1`` line up; the star
construction and both audits use E1, E2, E3 on sigma_1, sigma_2, sigma_3.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .inequalities import (
    InequalityReport,
    evaluate,
    linear_bound_analytic,
    linear_bound_noisy,
    linear_optimal_angle,
    sigma12_star_value,
    star_bound_analytic,
    star_bound_noisy,
    star_lhs_from_settings,
    star_numerator,
    star_optimal_angle,
    xz_fixed_value,
)
from .linalg import REPORT_TOL, STRUCT_TOL
from .measurements import IncompatibleError, MeasurementPair, is_compatible, parent_povm
from .network import LINEAR, STAR, Behavior, NetworkScenario, Party, behavior, linear_scenario, star_scenario
from .states import TwoQubitState, local_unitary_diagonalize, random_state, sample_seed

LINEAR_FRAME = "zxy"
STAR_FRAME = "xyz"
STAR_BEHAVIOR_MAX_N = 4
AUDIT_BEHAVIOR_MAX_N = 4


class CriterionError(ValueError):
    """A state-dependent precondition failed; both sides are attached."""

    def __init__(self, message: str, lhs: float, rhs: float):
        super().__init__(f"{message}: {lhs:.10g} vs {rhs:.10g}")
        self.lhs = lhs
        self.rhs = rhs


@dataclass
class EtaInterval:
    """Admissible open-closed interval ``(lower, upper]`` and the chosen value."""

    lower: float
    upper: float
    chosen: float

    def contains(self, x: float) -> bool:
        return self.lower < x <= self.upper + STRUCT_TOL


@dataclass
class ConstructionResult:
    theorem: str
    scenario: NetworkScenario
    angle: float
    intervals: dict[str, EtaInterval]
    etas: dict[str, float]
    compatibility: dict[str, tuple[bool, float]]
    criterion: tuple[float, float]
    analytic_lhs: float
    behavior_lhs: float | None
    report: InequalityReport | None
    intended_incompatible: tuple[str, ...]
    extra: dict = field(default_factory=dict)

    @property
    def violated(self) -> bool:
        value = self.behavior_lhs if self.behavior_lhs is not None else self.analytic_lhs
        return value > 1.0 + REPORT_TOL

    @property
    def pattern_ok(self) -> bool:
        """Exactly the intended parties are incompatible."""
        bad = {name for name, (ok, _) in self.compatibility.items() if not ok}
        return bad == set(self.intended_incompatible)

    @property
    def discrepancy(self) -> float | None:
        if self.behavior_lhs is None:
            return None
        return abs(self.behavior_lhs - self.analytic_lhs)

    def summary_rows(self) -> list[tuple[str, str]]:
        rows = [("theorem", self.theorem), ("angle", f"{self.angle:.17g}")]
        for name, iv in self.intervals.items():
            rows.append((f"{name} interval", f"({iv.lower:.17g}, {iv.upper:.17g}] chosen {iv.chosen:.17g}"))
        for name, eta in self.etas.items():
            ok, margin = self.compatibility[name]
            rows.append((f"{name}", f"eta {eta:.17g} {'compatible' if ok else 'incompatible'} margin {margin:.17g}"))
        rows.append(("criterion", f"{self.criterion[0]:.17g} > {self.criterion[1]:.17g}"))
        rows.append(("analytic lhs", f"{self.analytic_lhs:.17g}"))
        if self.behavior_lhs is not None:
            rows.append(("behavior lhs", f"{self.behavior_lhs:.17g}"))
        rows.append(("violated", str(self.violated)))
        return rows


def _canonical(states: Sequence[TwoQubitState], order: str, align: bool) -> list[TwoQubitState]:
    states = list(states)
    if not align:
        return states
    return [local_unitary_diagonalize(s, order) for s in states]


def _pick(interval_lower: float, interval_upper: float, override: float | None, name: str) -> EtaInterval:
    if not interval_lower < interval_upper:
        raise CriterionError(f"empty admissible interval for {name}", interval_lower, interval_upper)
    chosen = 0.5 * (interval_lower + interval_upper) if override is None else float(override)
    iv = EtaInterval(interval_lower, interval_upper, chosen)
    if not iv.contains(chosen):
        raise ValueError(f"{name} = {chosen} lies outside its admissible interval ({interval_lower}, {interval_upper}]")
    return iv


# --- chain construction ---------------------------------------------------------


def thm1_criterion(states) -> tuple[float, float]:
    """(prod E1 + prod E2, (sqrt prod E1 + sqrt prod E2)^(2/3))."""
    p1 = float(np.prod([s.spectrum[0] for s in states]))
    p2 = float(np.prod([s.spectrum[1] for s in states]))
    return p1 + p2, (math.sqrt(p1) + math.sqrt(p2)) ** (2.0 / 3.0)


def thm1_construct(
    states: Sequence[TwoQubitState],
    eta1: float | None = None,
    eta2: float | None = None,
    align: bool = True,
) -> ConstructionResult:
    """Chain where only A1 is incompatible and the chain inequality is violated."""
    states = _canonical(states, LINEAR_FRAME, align)
    n = len(states)
    lhs_c, rhs_c = thm1_criterion(states)
    if not lhs_c > rhs_c:
        raise CriterionError("state criterion prod E1 + prod E2 > (sqrt prod E1 + sqrt prod E2)^(2/3) fails", lhs_c, rhs_c)
    r = linear_optimal_angle(states)
    c, s = math.cos(r), math.sin(r)
    b2 = linear_bound_analytic(states) ** 2
    iv1 = _pick((c + s) / b2, 1.0, eta1, "eta1")
    iv2 = _pick(1.0 / (iv1.chosen * b2), 1.0 / (c + s), eta2, "eta2")
    # sin r sigma_3 +- cos r sigma_1 is the xz family at t = pi/2 - r.
    t = math.pi / 2 - r
    first = MeasurementPair.family("xz", t, iv1.chosen)
    last = MeasurementPair.family("xz", t, iv2.chosen)
    sc = linear_scenario(states, first, last)
    names = (sc.parties[0].name, sc.parties[-1].name)
    analytic = linear_bound_noisy(states, iv1.chosen, iv2.chosen)
    report = evaluate(sc)
    return ConstructionResult(
        theorem="thm1",
        scenario=sc,
        angle=r,
        intervals={"eta1": iv1, "eta2": iv2},
        etas={names[0]: iv1.chosen, names[1]: iv2.chosen},
        compatibility={names[0]: is_compatible(first), names[1]: is_compatible(last)},
        criterion=(lhs_c, rhs_c),
        analytic_lhs=analytic,
        behavior_lhs=report.lhs,
        report=report,
        intended_incompatible=(names[0],),
        extra={"n": n, "setting_angle_t": t, "frame": LINEAR_FRAME if align else "lab"},
    )


# --- star construction ------------------------------------------------------------


def thm4_criterion(states) -> tuple[float, float]:
    """(H, (4 S)^n) with S the closed-form numerator; the criterion is H < (4S)^n."""
    n = len(states)
    sp = [s.spectrum if isinstance(s, TwoQubitState) else tuple(s) for s in states]
    q1 = float(np.prod([e[0] ** (2.0 / n**2) for e in sp]))
    q2 = float(np.prod([e[1] ** (2.0 / n**2) for e in sp]))
    h = 2.0 ** (n * n) * math.sqrt(q1 + q2) * (math.sqrt(q1) + math.sqrt(q2)) ** (n - 1)
    return h, (4.0 * star_numerator(sp)) ** n


def thm4_construct(
    states: Sequence[TwoQubitState],
    etas: Sequence[float] | None = None,
    align: bool = True,
) -> ConstructionResult:
    """Star where only A2 is incompatible and the star inequality is violated.

    ``etas`` optionally overrides (eta_1 for A2, ..., eta_n for A_{n+1}); each is
    checked against its admissible interval (the middle ones must sit at the
    compatibility boundary).
    """
    states = _canonical(states, STAR_FRAME, align)
    n = len(states)
    if n < 2:
        raise ValueError("a star needs n >= 2")
    h, rhs = thm4_criterion(states)
    if not h < rhs:
        raise CriterionError("state criterion H < (4 S)^n fails", h, rhs)
    v = star_bound_analytic(states)
    t = star_optimal_angle(states)
    cs = math.cos(t) + math.sin(t)
    if etas is not None and len(etas) != n:
        raise ValueError(f"need {n} etas, got {len(etas)}")
    over = list(etas) if etas is not None else [None] * n
    intervals = {"eta1": _pick(cs ** (n - 1) / v**n, 1.0, over[0], "eta1")}
    eta1 = intervals["eta1"].chosen
    chosen = [eta1]
    boundary = 1.0 / cs
    for k in range(2, n):
        value = boundary if over[k - 1] is None else float(over[k - 1])
        if abs(value - boundary) > 1e-3 or value > boundary + STRUCT_TOL:
            raise ValueError(f"eta{k} = {value} must sit at the compatibility boundary {boundary}")
        chosen.append(value)
    intervals[f"eta{n}"] = _pick(cs ** (n - 2) / (eta1 * v**n), boundary, over[n - 1], f"eta{n}")
    chosen.append(intervals[f"eta{n}"].chosen)
    # Noisy closed form needs the product of all n etas to beat 1/V^n.
    edges = [MeasurementPair.family("xy", t, e) for e in chosen]
    sc = star_scenario(states, edges)
    names = [p.name for p in sc.parties[1:]]
    analytic = star_bound_noisy(states, chosen)
    report = None
    behavior_lhs = None
    if n <= STAR_BEHAVIOR_MAX_N:
        report = evaluate(sc)
        behavior_lhs = report.lhs
    settings_lhs, _ = star_lhs_from_settings(states, edges)
    return ConstructionResult(
        theorem="thm4",
        scenario=sc,
        angle=t,
        intervals=intervals,
        etas=dict(zip(names, chosen)),
        compatibility={name: is_compatible(p) for name, p in zip(names, edges)},
        criterion=(rhs, h),
        analytic_lhs=analytic,
        behavior_lhs=behavior_lhs,
        report=report,
        intended_incompatible=(names[0],),
        extra={"n": n, "settings_lhs": settings_lhs, "closed_form_V": v, "frame": STAR_FRAME if align else "lab"},
    )


# --- audits ---------------------------------------------------------------------


@dataclass
class AuditResult:
    theorem: str
    n: int
    samples: int
    seed: int
    max_lhs: float
    argmax: int
    max_lhs_canonical: float
    max_formula_gap: float
    behavior_level: bool

    @property
    def passed(self) -> bool:
        return (
            self.max_lhs <= 1.0 + REPORT_TOL
            and self.max_lhs_canonical <= 1.0 + REPORT_TOL
            and self.max_formula_gap <= REPORT_TOL
        )


def audit_states(n: int, k: int, seed: int) -> list[TwoQubitState]:
    """The k-th sampled tuple of an audit run."""
    return [random_state(sample_seed(seed, k, i)) for i in range(n)]


_SIGMA13 = MeasurementPair.from_vectors([1.0, 0.0, 0.0], [0.0, 0.0, 1.0])
_SIGMA12 = MeasurementPair.from_vectors([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])


def sigma13_chain(states) -> NetworkScenario:
    return linear_scenario(states, _SIGMA13, _SIGMA13)


def sigma12_star(states) -> NetworkScenario:
    return star_scenario(states, [_SIGMA12] * len(states))


def _linear_value(states, behavior_level: bool) -> float:
    if behavior_level:
        return evaluate(sigma13_chain(states)).lhs
    from .inequalities import linear_lhs_from_settings

    return linear_lhs_from_settings(states, _SIGMA13, _SIGMA13)[0]


def _star_value(states, behavior_level: bool) -> float:
    if behavior_level:
        return evaluate(sigma12_star(states)).lhs
    return star_lhs_from_settings(states, [_SIGMA12] * len(states))[0]


def _audit(theorem, n, samples, seed, value, formula, order, behavior_level) -> AuditResult:
    best, arg, best_c, gap = -1.0, -1, -1.0, 0.0
    for k in range(samples):
        raw = audit_states(n, k, seed)
        lhs = value(raw, behavior_level)
        if lhs > best:
            best, arg = lhs, k
        canon = [local_unitary_diagonalize(s, order) for s in raw]
        lhs_c = value(canon, behavior_level)
        best_c = max(best_c, lhs_c)
        gap = max(gap, abs(lhs_c - formula(canon)))
    return AuditResult(theorem, n, samples, seed, best, arg, best_c, gap, behavior_level)


def thm2_audit(n: int, samples: int, seed: int, behavior_level: bool | None = None) -> AuditResult:
    """Chains with sharp ``(sigma_1, sigma_3)`` extremes over sampled sources.

    Each sampled tuple is evaluated as drawn and after rotating to the frame
    with E1, E2, E3 on sigma_1, sigma_2, sigma_3; the rotated value is compared
    with ``(sqrt prod E1 + sqrt prod E3)/2``.
    """
    if n < 2:
        raise ValueError("the chain audit needs n >= 2 (at least one center)")
    level = n <= AUDIT_BEHAVIOR_MAX_N if behavior_level is None else behavior_level
    return _audit("thm2", n, samples, seed, _linear_value, xz_fixed_value, STAR_FRAME, level)


def thm5_audit(n: int, samples: int, seed: int, behavior_level: bool | None = None) -> AuditResult:
    """Stars with sharp ``(sigma_1, sigma_2)`` edges over sampled sources."""
    if n < 2:
        raise ValueError("a star needs n >= 2")
    level = n <= AUDIT_BEHAVIOR_MAX_N if behavior_level is None else behavior_level
    return _audit("thm5", n, samples, seed, _star_value, sigma12_star_value, STAR_FRAME, level)


# --- hidden-variable models -------------------------------------------------------


@dataclass
class LocalHVModel:
    """Explicit local model ``P = sum_h w(h) prod_party P(out | in, h)``.

    ``hidden`` names each hidden variable (alphabet of 4 values, read as two
    bits ``(l0, l1)``, the parent-POVM outcome); ``responses`` map an edge party
    to ``(hidden variable, table[input][value] -> output bit)``; ``conditional``
    is the remaining parties' table indexed (hidden values..., [inputs...], outputs...).
    """

    kind: str
    hidden: tuple[str, ...]
    weights: np.ndarray
    marginals: tuple[np.ndarray, ...]
    responses: dict[str, tuple[str, np.ndarray]]
    conditional: np.ndarray
    conditional_parties: tuple[str, ...]
    target: Behavior
    reconstructed: Behavior
    dropped: tuple[tuple[tuple[int, ...], float], ...] = ()

    @property
    def reconstruction_error(self) -> float:
        return float(np.max(np.abs(self.target.probs - self.reconstructed.probs)))

    @property
    def factorization_error(self) -> float:
        prod = self.marginals[0]
        for m in self.marginals[1:]:
            prod = np.multiply.outer(prod, m)
        return float(np.max(np.abs(self.weights - prod)))

    @property
    def weights_valid(self) -> bool:
        return bool(self.weights.min() >= -STRUCT_TOL and abs(self.weights.sum() - 1.0) <= STRUCT_TOL)

    def dump(self) -> str:
        lines = [f"model {self.kind}"]
        for name in self.hidden:
            lines.append(f"hidden {name}: 4 values (l0 l1)")
        for name, m in zip(self.hidden, self.marginals):
            lines.append(f"weights {name}: " + " ".join(f"{w:.17g}" for w in m))
        lines.append("joint weights:")
        for idx in itertools.product(range(4), repeat=len(self.hidden)):
            w = float(self.weights[idx])
            lines.append("  " + " ".join(f"{i:02b}" for i in idx) + f" {w:.17g}")
        for party, (var, table) in self.responses.items():
            rows = "; ".join(f"x={x}: " + " ".join(str(int(v)) for v in table[x]) for x in range(table.shape[0]))
            lines.append(f"response {party} on {var}: {rows}")
        lines.append(f"conditional parties: {' '.join(self.conditional_parties)} table shape {self.conditional.shape}")
        for idx, w in self.dropped:
            lines.append(f"dropped branch {idx} weight {w:.17g}")
        lines.append(f"max reconstruction error: {self.reconstruction_error:.3e}")
        lines.append(f"factorization error: {self.factorization_error:.3e}")
        return "\n".join(lines) + "\n"


def _response_table() -> np.ndarray:
    """table[x][lam] = bit l_x of lam = 2 l0 + l1."""
    return np.array([[(lam >> (1 - x)) & 1 for lam in range(4)] for x in range(2)])


def _parent_party(party: Party) -> Party:
    if party.pair is None:
        raise ValueError(f"party {party.name} has no two-setting measurement")
    ok, margin = is_compatible(party.pair)
    if not ok:
        raise IncompatibleError(f"party {party.name} is incompatible (margin {margin:.6g}); no parent POVM")
    g = parent_povm(party.pair)
    return Party(party.name, povm_override=g.flat()[None], n_bits_override=2)


def _single_basis(party: Party):
    if party.basis is None or party.povm_stack().shape[0] != 1:
        raise ValueError(f"central party {party.name} must perform a single basis measurement")


def _deterministic(table: np.ndarray) -> np.ndarray:
    """One-hot response array r[x, lam, a]."""
    out = np.zeros((2, 4, 2))
    for x in range(2):
        for lam in range(4):
            out[x, lam, table[x, lam]] = 1.0
    return out


def _conditional(joint: np.ndarray, weights: np.ndarray, hidden_axes: int):
    """Divide ``joint`` by ``weights`` over the leading hidden axes; zero-weight branches dropped."""
    cond = np.zeros_like(joint)
    dropped = []
    for idx in itertools.product(range(4), repeat=hidden_axes):
        w = float(weights[idx])
        if w > 0.0:
            cond[idx] = joint[idx] / w
        else:
            dropped.append((idx, w))
    return cond, tuple(dropped)


def thm3_bilocal_model(scenario: NetworkScenario) -> LocalHVModel:
    """Bilocal model from the parent POVMs of both compatible extremes."""
    if scenario.topology != LINEAR or scenario.n != 2:
        raise ValueError("the bilocal model needs a linear scenario with n = 2")
    a1, center, a3 = scenario.parties
    _single_basis(center)
    hidden_scn = scenario.with_parties([_parent_party(a1), center, _parent_party(a3)])
    # Output axes are (lam bits, center bits, nu bits); regroup as lam, nu, center bits.
    joint = behavior(hidden_scn).probs.reshape(4, 2, 2, 4).transpose(0, 3, 1, 2)
    weights = joint.sum(axis=(2, 3))
    marg_l, marg_n = weights.sum(axis=1), weights.sum(axis=0)
    cond, dropped = _conditional(joint, weights, 2)
    table = _response_table()
    r = _deterministic(table)
    target = behavior(scenario)
    recon = np.einsum("ln,lnbc,xla,ynd->xyabcd", weights, cond, r, r)
    rec = Behavior(target.topology, target.n, recon, target.input_parties, target.output_layout)
    return LocalHVModel(
        kind="thm3 bilocal",
        hidden=("lambda", "nu"),
        weights=weights,
        marginals=(marg_l, marg_n),
        responses={a1.name: ("lambda", table), a3.name: ("nu", table)},
        conditional=cond,
        conditional_parties=(center.name,),
        target=target,
        reconstructed=rec,
        dropped=dropped,
    )


def thm6_star_model(scenario: NetworkScenario) -> LocalHVModel:
    """n-local star model: one parent-POVM hidden variable per compatible edge."""
    if scenario.topology != STAR:
        raise ValueError("the star model needs a star scenario")
    n = scenario.n
    center, edges = scenario.parties[0], scenario.parties[1:]
    _single_basis(center)
    hidden_scn = scenario.with_parties([center] + [_parent_party(p) for p in edges])
    probs = behavior(hidden_scn).probs  # center bits, then (l0, l1) per edge
    probs = probs.reshape((1 << n,) + (4,) * n)
    joint = np.moveaxis(probs, 0, -1)  # lam_1..lam_n, center outcome
    weights = joint.sum(axis=-1)
    marginals = tuple(weights.sum(axis=tuple(j for j in range(n) if j != i)) for i in range(n))
    cond, dropped = _conditional(joint, weights, n)
    table = _response_table()
    r = _deterministic(table)
    target = behavior(scenario)
    # P(center, a | x) = sum_lam w(lam) P(center | lam) prod_i r[x_i, lam_i, a_i]
    acc = np.einsum("...c,...->...c", cond, weights)  # lam..., c
    for i in range(n):
        # contract lam axis 0 with r[x_i, lam, a_i]; new axes (x_i, a_i) go to the end
        acc = np.tensordot(acc, r, axes=([0], [1]))
    # acc axes: c, then (x_1, a_1), ..., (x_n, a_n)
    acc = acc.reshape((1 << n,) + (2, 2) * n)
    xs = [1 + 2 * i for i in range(n)]
    as_ = [2 + 2 * i for i in range(n)]
    acc = np.transpose(acc, xs + [0] + as_)
    recon = acc.reshape((2,) * n + (2,) * n + (2,) * n)
    rec = Behavior(target.topology, target.n, np.ascontiguousarray(recon), target.input_parties, target.output_layout)
    return LocalHVModel(
        kind="thm6 star",
        hidden=tuple(f"lambda{i + 1}" for i in range(n)),
        weights=weights,
        marginals=marginals,
        responses={p.name: (f"lambda{i + 1}", table) for i, p in enumerate(edges)},
        conditional=cond,
        conditional_parties=(center.name,),
        target=target,
        reconstructed=rec,
        dropped=dropped,
    )


def first_compatible_edge(scenario: NetworkScenario) -> int:
    for i, p in enumerate(scenario.parties):
        if p.pair is not None and is_compatible(p.pair)[0]:
            return i
    raise IncompatibleError("no compatible edge party to factor out")


def thm7_fnn_decompose(scenario: NetworkScenario, j=None) -> LocalHVModel:
    """Write the behavior as a mixture over edge j's parent-POVM outcome.

    ``P(a_j, rest | x_j, x_rest) = sum_lam P(lam) delta(a_j, lam_{x_j}) P(rest | x_rest, lam)``,
    i.e. the source feeding edge j acts as a local-variable resource.
    ``j`` is a party name or index; by default the first compatible edge.
    """
    idx = first_compatible_edge(scenario) if j is None else scenario.party_index(j)
    party = scenario.parties[idx]
    if party.pair is None:
        raise ValueError(f"party {party.name} is not an edge party")
    hidden_parties = list(scenario.parties)
    hidden_parties[idx] = _parent_party(party)
    hb = behavior(scenario.with_parties(hidden_parties))
    target = behavior(scenario)
    # hb axes: other inputs..., outputs with party j's two bits in place of its one.
    k_in = hb.n_inputs
    lam_axes = hb.output_axes(party.name)
    p = np.moveaxis(hb.probs, lam_axes, (k_in, k_in + 1))
    shape = p.shape
    p = p.reshape(shape[:k_in] + (4,) + shape[k_in + 2:])
    # P(lam | x_rest): must not depend on x_rest
    rest_axes = tuple(range(k_in + 1, p.ndim))
    lam_w = p.sum(axis=rest_axes)  # (inputs..., 4)
    flat_w = lam_w.reshape(-1, 4)
    weights = flat_w[0].copy()
    signalling = float(np.max(np.abs(flat_w - weights))) if flat_w.shape[0] > 1 else 0.0
    cond = np.zeros_like(p)
    dropped = []
    for lam in range(4):
        if weights[lam] > 0.0:
            cond[(slice(None),) * k_in + (lam,)] = p[(slice(None),) * k_in + (lam,)] / weights[lam]
        else:
            dropped.append(((lam,), float(weights[lam])))
    table = _response_table()
    r = _deterministic(table)
    # Rebuild the target layout: inputs in party order, outputs in party order.
    in_names = list(target.input_parties)
    out_layout = list(target.output_layout)
    pos_in = in_names.index(party.name)
    out_start = target.output_axes(party.name)[0] - target.n_inputs
    # cond axes: rest inputs..., lam, rest outputs...
    mix = np.tensordot(cond * _bcast(weights, k_in, cond.ndim), r, axes=([k_in], [1]))
    # mix axes: rest inputs..., rest outputs..., x_j, a_j
    n_rest_out = cond.ndim - k_in - 1
    order = list(range(k_in))
    order.insert(pos_in, mix.ndim - 2)
    outs = list(range(k_in, k_in + n_rest_out))
    outs.insert(out_start, mix.ndim - 1)
    recon = np.transpose(mix, order + outs)
    rec = Behavior(target.topology, target.n, np.ascontiguousarray(recon), target.input_parties, target.output_layout)
    others = tuple(name for name, _ in out_layout if name != party.name)
    model = LocalHVModel(
        kind="thm7 fnn",
        hidden=(f"lambda_{party.name}",),
        weights=weights,
        marginals=(weights,),
        responses={party.name: (f"lambda_{party.name}", table)},
        conditional=cond,
        conditional_parties=others,
        target=target,
        reconstructed=rec,
        dropped=tuple(dropped),
    )
    model.signalling_error = signalling  # type: ignore[attr-defined]
    return model


def _bcast(w: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = w.shape[0]
    return w.reshape(shape)


__all__ = [
    "AuditResult",
    "ConstructionResult",
    "CriterionError",
    "EtaInterval",
    "LocalHVModel",
    "audit_states",
    "first_compatible_edge",
    "sigma12_star",
    "sigma13_chain",
    "thm1_construct",
    "thm1_criterion",
    "thm2_audit",
    "thm3_bilocal_model",
    "thm4_construct",
    "thm4_criterion",
    "thm5_audit",
    "thm6_star_model",
    "thm7_fnn_decompose",
]
