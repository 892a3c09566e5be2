import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlocal.inequalities import evaluate
from nlocal.measurements import MeasurementPair
from nlocal.network import linear_scenario, star_scenario
from nlocal.scenario_io import ScenarioParseError, dumps, load, loads, parse_number, parse_range, parse_vary
from nlocal.states import random_state, werner

BASE = """topology = "linear"
n = 1

[[source]]
kind = "werner"
v = 0.8

[[party]]
plane = "xz"
t = "pi/4"
eta = 0.9

[[party]]
plane = "xz"
t = "pi/4"
eta = 0.7
"""


@pytest.mark.parametrize("name", [
    "bilocal_example.scn", "trilocal_star.scn", "fourlocal_linear.scn", "fourlocal_star.scn",
    "compatible_bilocal.scn", "mixed_bilocal.scn", "singlet_bilocal.scn",
])
def test_shipped_files_parse(data_dir, name):
    sc = load(data_dir / name).build()
    assert sc.n == len(sc.sources)
    assert math.isfinite(evaluate(sc).lhs)


def test_bilocal_example_contents(data_dir):
    doc = load(data_dir / "bilocal_example.scn")
    sc = doc.build()
    assert [p.name for p in sc.parties] == ["A1", "A2", "A3"]
    assert sc.parties[0].pair.eta == pytest.approx(0.939)
    assert doc.reference["quoted"] == 1.013


def test_vector_form_matches_family_form():
    text = BASE.replace('plane = "xz"\nt = "pi/4"\neta = 0.9', "vectors = [[0.664, 0, 0.664], [0.664, 0, -0.664]]", 1)
    sc = loads(text).build()
    pair = sc.parties[0].pair
    assert pair.eta == pytest.approx(0.664 * math.sqrt(2), abs=1e-12)
    assert pair.eta == pytest.approx(0.939, abs=1e-4)


def test_directions_with_two_etas():
    text = BASE.replace('plane = "xz"\nt = "pi/4"\neta = 0.9', "directions = [[1, 0, 0], [0, 0, 1]]\neta = [0.9, 0.8]", 1)
    pair = loads(text).build().parties[0].pair
    assert pair.m0.eta == 0.9 and pair.m1.eta == 0.8


def test_expressions():
    assert parse_number("1/sqrt(2)") == pytest.approx(1 / math.sqrt(2), abs=1e-16)
    assert parse_number("2*pi - acos(-1)") == pytest.approx(math.pi)
    assert parse_number(3) == 3.0
    for bad in ("__import__('os')", "x + 1", "open", "1/0", "[1]", True):
        with pytest.raises(ValueError):
            parse_number(bad)


def _err(text):
    with pytest.raises(ScenarioParseError) as info:
        loads(text, "s.scn").build()
    return info.value


def test_missing_topology_points_at_line_one():
    e = _err(BASE.replace('topology = "linear"\n', ""))
    assert e.line == 1 and e.field == "topology"
    assert str(e).startswith("s.scn:1: topology:")


def test_bad_source_kind_is_positioned():
    e = _err(BASE.replace('kind = "werner"', 'kind = "qutrit"'))
    assert e.line == 5 and e.field == "source[1].kind"


def test_bad_expression_is_positioned():
    e = _err(BASE.replace('t = "pi/4"', 't = "pi/*4"', 1))
    assert e.line == 10 and e.field == "party[1].t"


def test_invalid_state_reported_on_v():
    e = _err(BASE.replace("v = 0.8", "v = 1.5"))
    assert e.line == 6 and e.field == "source[1].v"


def test_syntax_error_has_line():
    e = _err(BASE.replace("eta = 0.7", "eta = = 0.7"))
    assert e.field == "syntax" and e.line == 16


@pytest.mark.parametrize("edit, field", [
    (("n = 1", "n = 2"), "n"),
    (('topology = "linear"', 'topology = "ring"'), "topology"),
    (('plane = "xz"\nt = "pi/4"\neta = 0.7', 'basis = "bell"'), "party[2].role"),
])
def test_structural_errors(edit, field):
    e = _err(BASE.replace(*edit))
    assert e.field.startswith(field.split(".")[0])


def test_size_limit():
    text = 'topology = "star"\n' + '[[source]]\nkind = "werner"\nv = 0.9\n' * 3
    text += '[[party]]\nbasis = "ghz"\n' + '[[party]]\nplane = "xy"\nt = 0.3\n' * 3
    assert loads(text).build().n == 3
    with pytest.raises(ScenarioParseError):
        loads(text).build(max_n=2)


def test_param_paths_do_not_mutate():
    doc = loads(BASE)
    other = doc.with_param("source.1.v", 0.5).with_param("party.A2.eta", 0.6)
    assert doc.data["source"][0]["v"] == 0.8
    assert other.data["source"][0]["v"] == 0.5
    assert other.build().parties[1].pair.eta == 0.6
    both = doc.with_param("party.*.eta", 0.5).build()
    assert all(p.pair.eta == 0.5 for p in both.parties)
    for bad in ("source.2.v", "party.A9.eta", "party.A1.theta", "foo.1.v", "source.v"):
        with pytest.raises(ScenarioParseError):
            doc.with_param(bad, 0.1)


def test_ranges():
    assert np.allclose(parse_range("0:1:5"), [0, 0.25, 0.5, 0.75, 1])
    assert parse_range("0.3:0.3:1").tolist() == [0.3]
    path, vals = parse_vary("source.*.v = 0.7:0.8:3")
    assert path == "source.*.v" and len(vals) == 3
    for bad in ("0:1:0", "0:1", "0:1:x"):
        with pytest.raises(ValueError):
            parse_range(bad)
    with pytest.raises(ValueError):
        parse_vary("0:1:3")


def _same(a, b):
    assert a.topology == b.topology and [p.name for p in a.parties] == [p.name for p in b.parties]
    for s, t in zip(a.sources, b.sources):
        assert np.array_equal(s.rho, t.rho)
    for p, q in zip(a.parties, b.parties):
        if p.pair is not None:
            assert np.array_equal(p.pair.m0.vector, q.pair.m0.vector)
            assert np.array_equal(p.pair.m1.vector, q.pair.m1.vector)


def test_round_trip_of_shipped_files(data_dir):
    for f in sorted(data_dir.glob("*.scn")):
        doc = load(f)
        sc = doc.build()
        again = loads(dumps(sc, header="copy", reference=doc.reference)).build()
        _same(sc, again)
        assert evaluate(again).lhs == evaluate(sc).lhs


@given(st.integers(0, 2**32 - 1), st.floats(0, 2 * math.pi), st.floats(0.1, 1.0))
def test_round_trip_of_built_scenarios(seed, t, eta):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(2, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    odd = MeasurementPair.from_directions(d[0], d[1], eta)
    fam = MeasurementPair.family("xz", t, eta)
    sc = linear_scenario([random_state(seed % 1000), werner(0.7)], fam, odd)
    _same(sc, loads(dumps(sc)).build())
    star = star_scenario([random_state(seed % 1000 + 1)] * 2, [fam, MeasurementPair.family("xy", t, eta)])
    _same(star, loads(dumps(star)).build())
