import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlocal.inequalities import evaluate, linear_bound_noisy, sigma12_star_value, xz_fixed_value
from nlocal.measurements import IncompatibleError, MeasurementPair
from nlocal.network import linear_scenario, star_scenario
from nlocal.states import bell_state, from_bloch, is_aligned, random_state, werner
from nlocal.theorems import (
    CriterionError,
    audit_states,
    first_compatible_edge,
    sigma12_star,
    sigma13_chain,
    thm1_construct,
    thm1_criterion,
    thm2_audit,
    thm3_bilocal_model,
    thm4_construct,
    thm4_criterion,
    thm5_audit,
    thm6_star_model,
    thm7_fnn_decompose,
)

A = 1 / math.sqrt(2)
PAIR_STATES = [werner(0.87), werner(0.97)]
STAR_STATES = [werner(0.93)] * 3


# --- chain construction -------------------------------------------------------------


def test_thm1_criterion_values():
    lhs, rhs = thm1_criterion(PAIR_STATES)
    p = 0.87 * 0.97
    assert lhs == pytest.approx(2 * p, abs=1e-12)
    assert rhs == pytest.approx((2 * math.sqrt(p)) ** (2 / 3), abs=1e-12)


def test_thm1_construction_on_werner_pair():
    r = thm1_construct(PAIR_STATES)
    assert r.pattern_ok and r.violated
    assert r.discrepancy <= 1e-9
    # midpoint choice, frozen from an independent closed-form evaluation
    assert r.analytic_lhs == pytest.approx(1.0238963357301674, abs=1e-12)
    assert r.analytic_lhs == pytest.approx(linear_bound_noisy(PAIR_STATES, *r.etas.values()), abs=1e-12)
    for iv in r.intervals.values():
        assert iv.contains(iv.chosen)
    assert not r.compatibility["A1"][0] and r.compatibility["A3"][0]


def test_thm1_overrides_checked():
    r = thm1_construct(PAIR_STATES, eta1=0.939, eta2=0.699)
    assert r.pattern_ok and r.violated
    assert r.behavior_lhs == pytest.approx(math.sqrt(0.939 * 0.699 * 2 * 0.87 * 0.97), abs=1e-9)
    with pytest.raises(ValueError):
        thm1_construct(PAIR_STATES, eta1=0.5)
    with pytest.raises(ValueError):
        thm1_construct(PAIR_STATES, eta1=0.939, eta2=0.9)


def test_thm1_criterion_failure_reports_both_sides():
    with pytest.raises(CriterionError) as info:
        thm1_construct([werner(0.5), werner(0.5)])
    assert info.value.lhs == pytest.approx(0.5) and info.value.rhs == pytest.approx(1.0)


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1))
def test_thm1_on_rotated_states(seed):
    # locally rotated near-singlets: the construction works in the canonical frame
    rng = np.random.default_rng(seed)
    states = []
    for _ in range(2):
        v = rng.uniform(0.9, 1.0)
        rho = werner(v).rho
        q = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
        u = np.kron(q, np.eye(2))
        states.append(type(werner(v))(u @ rho @ u.conj().T))
    r = thm1_construct(states)
    assert r.pattern_ok and r.violated and r.discrepancy <= 1e-9
    assert all(is_aligned(s, "zxy", 1e-9) for s in r.scenario.sources)


# --- star construction ----------------------------------------------------------------


def test_thm4_criterion_holds_for_trilocal_werner():
    h, rhs = thm4_criterion(STAR_STATES)
    assert h < rhs


def test_thm4_with_reference_etas():
    r = thm4_construct(STAR_STATES, etas=[0.9503, 0.7071, 0.6901])
    assert r.pattern_ok and r.violated
    assert r.discrepancy <= 1e-9
    assert r.analytic_lhs == pytest.approx(1.018, abs=1e-3)
    assert r.analytic_lhs == pytest.approx(math.sqrt(2) * 0.93 * (0.9503 * 0.7071 * 0.6901) ** (1 / 3), abs=1e-12)


def test_thm4_default_midpoints():
    r = thm4_construct(STAR_STATES)
    assert r.pattern_ok and r.violated and r.discrepancy <= 1e-9
    assert r.analytic_lhs == pytest.approx(1.01133214559337, abs=1e-12)
    assert r.etas["A3"] == pytest.approx(A, abs=1e-15)


def test_thm4_middle_eta_must_sit_on_boundary():
    with pytest.raises(ValueError):
        thm4_construct(STAR_STATES, etas=[0.9503, 0.69, 0.6901])
    with pytest.raises(ValueError):
        thm4_construct(STAR_STATES, etas=[0.9503, 0.7072, 0.6901])
    with pytest.raises(ValueError):
        thm4_construct(STAR_STATES, etas=[0.9503, 0.7071])


def test_thm4_large_n_uses_settings_kernel():
    r = thm4_construct([werner(0.99)] * 5)
    assert r.behavior_lhs is None
    assert r.pattern_ok and r.violated
    assert r.extra["settings_lhs"] == pytest.approx(r.analytic_lhs, abs=1e-9)


def test_thm4_criterion_failure():
    with pytest.raises(CriterionError):
        thm4_construct([werner(0.6)] * 3)


# --- audits -------------------------------------------------------------------------


def test_thm2_audit_small_run():
    res = thm2_audit(2, 60, 3)
    assert res.passed and res.behavior_level
    assert res.max_formula_gap <= 1e-9
    again = thm2_audit(2, 60, 3)
    assert again.max_lhs == res.max_lhs and again.argmax == res.argmax


def test_thm2_audit_kernel_path_matches_behavior():
    a = thm2_audit(3, 20, 9, behavior_level=True)
    b = thm2_audit(3, 20, 9, behavior_level=False)
    assert abs(a.max_lhs - b.max_lhs) <= 1e-12
    assert thm2_audit(5, 20, 9).behavior_level is False


def test_thm2_audit_needs_a_center():
    with pytest.raises(ValueError):
        thm2_audit(1, 5, 0)


def test_thm5_audit_small_run():
    res = thm5_audit(3, 40, 11)
    assert res.passed and res.max_formula_gap <= 1e-9
    with pytest.raises(ValueError):
        thm5_audit(1, 5, 0)


def test_audit_states_are_per_sample_seeded():
    a = audit_states(2, 5, 42)
    b = audit_states(2, 5, 42)
    c = audit_states(2, 6, 42)
    assert all(np.array_equal(x.rho, y.rho) for x, y in zip(a, b))
    assert not np.allclose(a[0].rho, c[0].rho)


def test_fixed_settings_exceed_one_outside_diagonal_frame():
    # Maximally entangled states whose correlation tensor is a 45-degree rotation:
    # in the lab frame the sharp fixed settings reach sqrt 2, in the canonical frame 1.
    t_chain = np.array([[A, 0, A], [0, -1, 0], [-A, 0, A]])
    chain = [from_bloch(np.zeros(3), np.zeros(3), t_chain), from_bloch(np.zeros(3), np.zeros(3), t_chain.T)]
    assert evaluate(sigma13_chain(chain)).lhs == pytest.approx(math.sqrt(2), abs=1e-12)
    assert xz_fixed_value(chain) == pytest.approx(1.0, abs=1e-12)
    t_star = np.array([[A, A, 0], [A, -A, 0], [0, 0, 1]])
    star = [from_bloch(np.zeros(3), np.zeros(3), t_star)] * 3
    assert evaluate(sigma12_star(star)).lhs == pytest.approx(math.sqrt(2), abs=1e-12)
    assert sigma12_star_value(star) == pytest.approx(1.0, abs=1e-12)


# --- local models --------------------------------------------------------------------


def test_thm3_model_reconstructs():
    p = MeasurementPair.family("xz", math.pi / 4, 0.699)
    m = thm3_bilocal_model(linear_scenario(PAIR_STATES, p, p))
    assert m.reconstruction_error <= 1e-10
    assert m.factorization_error <= 1e-12
    assert m.weights_valid
    text = m.dump()
    assert "thm3 bilocal" in text and "response A1 on lambda" in text


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1))
def test_thm3_model_random_states_and_settings(seed):
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(2):
        d = rng.normal(size=(2, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        thr = 2 / (np.linalg.norm(d[0] + d[1]) + np.linalg.norm(d[0] - d[1]))
        pairs.append(MeasurementPair.from_directions(d[0], d[1], rng.uniform(0, thr)))
    sc = linear_scenario([random_state(seed % 9999), random_state(seed % 9999 + 1)], *pairs)
    m = thm3_bilocal_model(sc)
    assert m.reconstruction_error <= 1e-10
    assert m.factorization_error <= 1e-12


def test_thm3_rejects_incompatible_extreme():
    a = MeasurementPair.family("xz", math.pi / 4, 0.939)
    c = MeasurementPair.family("xz", math.pi / 4, 0.699)
    with pytest.raises(IncompatibleError):
        thm3_bilocal_model(linear_scenario(PAIR_STATES, a, c))


@pytest.mark.parametrize("n", [2, 3])
def test_thm6_star_model(n):
    edges = [MeasurementPair.family("xy", 0.3 + 0.2 * k, 0.7) for k in range(n)]
    m = thm6_star_model(star_scenario([random_state(k) for k in range(n)], edges))
    assert m.reconstruction_error <= 1e-10
    assert m.factorization_error <= 1e-12


def test_thm7_decomposition_on_trilocal_example():
    etas = [0.9503, 0.7071, 0.6901]
    sc = star_scenario(STAR_STATES, [MeasurementPair.family("xy", math.pi / 4, e) for e in etas])
    assert sc.parties[first_compatible_edge(sc)].name == "A3"
    for edge in ("A3", "A4", None):
        m = thm7_fnn_decompose(sc, edge)
        assert m.reconstruction_error <= 1e-10
        assert m.factorization_error <= 1e-12
        assert m.signalling_error <= 1e-12
    with pytest.raises(IncompatibleError):
        thm7_fnn_decompose(sc, "A2")


def test_thm7_on_chain():
    a = MeasurementPair.family("xz", math.pi / 4, 0.939)
    c = MeasurementPair.family("xz", math.pi / 4, 0.699)
    m = thm7_fnn_decompose(linear_scenario(PAIR_STATES, a, c))
    assert m.hidden == ("lambda_A3",)
    assert m.reconstruction_error <= 1e-10


def test_bell_tuple_sigma12_star_is_one():
    states = [bell_state("phi+")] * 3
    assert evaluate(sigma12_star(states)).lhs == pytest.approx(1.0, abs=1e-10)
    sc = star_scenario(states, [MeasurementPair.from_vectors([1, 0, 0], [0, 1, 0])] * 3)
    assert evaluate(sc).family == "sigma12"
