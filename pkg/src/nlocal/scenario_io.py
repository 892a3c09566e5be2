"""Scenario files: a small TOML dialect for networks, with positioned errors.

::

    topology = "linear"            # or "star"
    n = 2                          # optional, checked against the sources

    [[source]]
    kind = "werner"                # werner: v | bloch: u, v, T | matrix: entries
    v = 0.87

    [[party]]                      # one block per party, in party order
    plane = "xz"                   # edge: plane + t + eta,
    t = "pi/4"                     #       or directions + eta, or vectors
    eta = 0.939

    [[party]]
    basis = "bell"                 # central: bell (chain) or ghz (star)

Numbers may be written as arithmetic strings using ``pi``, ``e``, ``sqrt``,
``sin``, ``cos`` (e.g. ``"1/sqrt(2)"``). An optional ``[reference]`` table
holds a quoted value to compare against.
"""
from __future__ import annotations

import ast
import copy
import math
import operator
import re
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .measurements import DichotomicObservable, EntangledBasisMeasurement, MeasurementPair, bell_basis, ghz_basis
from .network import LINEAR, MAX_N, STAR, NetworkScenario, Party, ScenarioError
from .states import InvalidStateError, TwoQubitState, from_bloch, from_matrix, werner


class ScenarioParseError(ValueError):
    def __init__(self, line: int | None, fieldname: str, reason: str, source: str = "<scenario>"):
        self.line = line
        self.field = fieldname
        self.reason = reason
        self.source = source
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {fieldname}: {reason}")


# --- arithmetic strings -----------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_NAMES = {"pi": math.pi, "e": math.e}
_FUNCS = {"sqrt": math.sqrt, "sin": math.sin, "cos": math.cos, "tan": math.tan, "asin": math.asin, "acos": math.acos}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return float(node.value)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval_node(node.operand))
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and len(node.args) == 1:
        return _FUNCS[node.func.id](_eval_node(node.args[0]))
    raise ValueError("unsupported expression")


def parse_number(value) -> float:
    """A TOML number or an arithmetic string such as ``"pi/4"``."""
    if isinstance(value, bool):
        raise ValueError("expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(_eval_node(ast.parse(value.strip(), mode="eval")))
        except (SyntaxError, ValueError, ZeroDivisionError, TypeError) as exc:
            raise ValueError(f"cannot evaluate {value!r} ({exc})") from None
    raise ValueError(f"expected a number, got {type(value).__name__}")


# --- line positions -----------------------------------------------------------------

_HEADER = re.compile(r"^\s*(\[\[?)\s*([A-Za-z_][\w.-]*)\s*\]\]?")
_KEY = re.compile(r"^\s*([A-Za-z_][\w-]*)\s*=")


def _index_lines(text: str) -> dict:
    """Map (section, block index, key) -> 1-based line; key None is the header line."""
    pos: dict = {}
    counts: dict[str, int] = {}
    section, idx = None, 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _HEADER.match(line)
        if m:
            name = m.group(2)
            if m.group(1) == "[[":
                idx = counts.get(name, 0)
                counts[name] = idx + 1
            else:
                idx = 0
            section = name
            pos.setdefault((section, idx, None), lineno)
            continue
        k = _KEY.match(line)
        if k:
            pos.setdefault((section, idx, k.group(1)), lineno)
    return pos


# --- documents --------------------------------------------------------------------


@dataclass
class ScenarioDocument:
    data: dict
    text: str = ""
    source: str = "<scenario>"
    positions: dict = field(default_factory=dict)

    def line_of(self, section, idx=0, key=None) -> int | None:
        line = self.positions.get((section, idx, key))
        if line is None and key is not None:
            line = self.positions.get((section, idx, None))
        return line

    def error(self, section, idx, key, reason) -> ScenarioParseError:
        label = key if section is None else (f"{section}[{idx + 1}].{key}" if key else f"{section}[{idx + 1}]")
        if section == "reference":
            label = f"reference.{key}" if key else "reference"
        return ScenarioParseError(self.line_of(section, idx, key) or (1 if section is None else None), label, reason, self.source)

    @property
    def reference(self) -> dict:
        return dict(self.data.get("reference", {}))

    def with_param(self, path: str, value: float) -> "ScenarioDocument":
        """Copy with one numeric parameter replaced (see :func:`resolve_path`)."""
        doc = ScenarioDocument(copy.deepcopy(self.data), self.text, self.source, self.positions)
        for block, key in resolve_path(doc, path):
            block[key] = float(value)
        return doc

    def build(self, max_n: int | None = None) -> NetworkScenario:
        return build_scenario(self, max_n)


def _toml_error_line(exc) -> int | None:
    line = getattr(exc, "lineno", None)
    if line:
        return int(line)
    m = re.search(r"line (\d+)", str(exc))
    return int(m.group(1)) if m else None


def loads(text: str, source: str = "<scenario>") -> ScenarioDocument:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        msg = getattr(exc, "msg", None) or re.sub(r"\s*\(at line.*\)$", "", str(exc))
        raise ScenarioParseError(_toml_error_line(exc), "syntax", msg, source) from None
    return ScenarioDocument(data, text, source, _index_lines(text))


def load(path) -> ScenarioDocument:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioParseError(None, "file", str(exc), str(path)) from None
    return loads(text, str(path))


# --- building ---------------------------------------------------------------------


def _num(doc, section, idx, block, key, required=True, default=None):
    if key not in block:
        if required:
            raise doc.error(section, idx, key, "missing required key")
        return default
    try:
        return parse_number(block[key])
    except ValueError as exc:
        raise doc.error(section, idx, key, str(exc)) from None


def _vec(doc, section, idx, block, key, length=3):
    raw = block.get(key)
    if not isinstance(raw, list) or len(raw) != length:
        raise doc.error(section, idx, key, f"expected a list of {length} numbers")
    try:
        return np.array([parse_number(x) for x in raw])
    except ValueError as exc:
        raise doc.error(section, idx, key, str(exc)) from None


def _build_source(doc: ScenarioDocument, idx: int, block: dict) -> TwoQubitState:
    kind = block.get("kind")
    try:
        if kind == "werner":
            return werner(_num(doc, "source", idx, block, "v"))
        if kind == "bloch":
            u = _vec(doc, "source", idx, block, "u") if "u" in block else np.zeros(3)
            v = _vec(doc, "source", idx, block, "v") if "v" in block else np.zeros(3)
            rows = block.get("T")
            if not isinstance(rows, list) or len(rows) != 3:
                raise doc.error("source", idx, "T", "expected a 3x3 list of numbers")
            t = np.array([[parse_number(x) for x in row] for row in rows]) if all(
                isinstance(r, list) and len(r) == 3 for r in rows
            ) else None
            if t is None:
                raise doc.error("source", idx, "T", "expected a 3x3 list of numbers")
            return from_bloch(u, v, t)
        if kind == "matrix":
            entries = block.get("entries")
            if not isinstance(entries, list) or len(entries) != 16:
                raise doc.error("source", idx, "entries", "expected 16 [re, im] pairs in row-major order")
            vals = []
            for e in entries:
                if not isinstance(e, list) or len(e) != 2:
                    raise doc.error("source", idx, "entries", "each entry must be a [re, im] pair")
                vals.append(complex(parse_number(e[0]), parse_number(e[1])))
            return from_matrix(vals)
    except InvalidStateError as exc:
        key = {"werner": "v", "bloch": "T", "matrix": "entries"}[kind]
        raise doc.error("source", idx, key, f"invalid state: {exc}") from None
    except ValueError as exc:
        if isinstance(exc, ScenarioParseError):
            raise
        raise doc.error("source", idx, "kind", str(exc)) from None
    if kind is None:
        raise doc.error("source", idx, "kind", "missing required key")
    raise doc.error("source", idx, "kind", f"unknown source kind {kind!r}; expected werner, bloch or matrix")


def _build_pair(doc: ScenarioDocument, idx: int, block: dict) -> MeasurementPair:
    forms = [k for k in ("plane", "directions", "vectors") if k in block]
    if len(forms) != 1:
        raise doc.error("party", idx, forms[1] if len(forms) > 1 else "plane",
                        "an edge party needs exactly one of plane/t/eta, directions + eta, or vectors")
    try:
        if "plane" in block:
            plane = block["plane"]
            if plane not in ("xz", "xy"):
                raise doc.error("party", idx, "plane", f"unknown plane {plane!r}; expected xz or xy")
            t = _num(doc, "party", idx, block, "t")
            eta = _num(doc, "party", idx, block, "eta", required=False, default=1.0)
            return MeasurementPair.family(plane, t, eta)
        if "directions" in block:
            d = block["directions"]
            if not isinstance(d, list) or len(d) != 2:
                raise doc.error("party", idx, "directions", "expected two 3-vectors")
            n0 = _vec(doc, "party", idx, {"directions": d[0]}, "directions")
            n1 = _vec(doc, "party", idx, {"directions": d[1]}, "directions")
            eta = block.get("eta", 1.0)
            if isinstance(eta, list):
                if len(eta) != 2:
                    raise doc.error("party", idx, "eta", "expected one eta or one per setting")
                e0, e1 = (parse_number(x) for x in eta)
            else:
                e0 = e1 = _num(doc, "party", idx, block, "eta", required=False, default=1.0)

            return MeasurementPair(DichotomicObservable(e0, n0), DichotomicObservable(e1, n1))
        v = block["vectors"]
        if not isinstance(v, list) or len(v) != 2:
            raise doc.error("party", idx, "vectors", "expected two 3-vectors")
        v0 = _vec(doc, "party", idx, {"vectors": v[0]}, "vectors")
        v1 = _vec(doc, "party", idx, {"vectors": v[1]}, "vectors")
        return MeasurementPair.from_vectors(v0, v1)
    except ScenarioParseError:
        raise
    except ValueError as exc:
        raise doc.error("party", idx, forms[0], str(exc)) from None


def _build_basis(doc, idx, block, expected: str, n_qubits: int) -> EntangledBasisMeasurement:
    basis = block.get("basis")
    if basis != expected:
        raise doc.error("party", idx, "basis", f"expected basis = {expected!r} for this position, got {basis!r}")
    return bell_basis() if expected == "bell" else ghz_basis(n_qubits)


def build_scenario(doc: ScenarioDocument, max_n: int | None = None) -> NetworkScenario:
    data = doc.data
    if "topology" not in data:
        raise doc.error(None, 0, "topology", "missing required key")
    topology = data["topology"]
    if topology not in (LINEAR, STAR):
        raise doc.error(None, 0, "topology", f"unknown topology {topology!r}; expected linear or star")
    srcs = data.get("source")
    if not isinstance(srcs, list) or not srcs:
        raise doc.error(None, 0, "source", "at least one [[source]] block is required")
    n = len(srcs)
    if "n" in data and data["n"] != n:
        raise doc.error(None, 0, "n", f"n = {data['n']} but {n} [[source]] blocks are given")
    limit = MAX_N if max_n is None else int(max_n)
    if n > limit:
        raise doc.error(None, 0, "n", f"n = {n} exceeds the supported maximum {limit}")
    if topology == STAR and n < 2:
        raise doc.error(None, 0, "topology", "a star network needs at least two sources")
    sources = [_build_source(doc, i, b) for i, b in enumerate(srcs)]
    blocks = data.get("party")
    if not isinstance(blocks, list) or len(blocks) != n + 1:
        got = len(blocks) if isinstance(blocks, list) else 0
        raise doc.error(None, 0, "party", f"a {topology} network with n = {n} needs {n + 1} [[party]] blocks, got {got}")
    parties = []
    for i, b in enumerate(blocks):
        name = b.get("name", f"A{i + 1}")
        if not isinstance(name, str):
            raise doc.error("party", i, "name", "party name must be a string")
        central = (topology == LINEAR and 0 < i < n) or (topology == STAR and i == 0)
        role = b.get("role", "central" if central else "edge")
        if role != ("central" if central else "edge"):
            raise doc.error("party", i, "role", f"party at position {i + 1} must be {'central' if central else 'edge'}")
        if central:
            expected = "bell" if topology == LINEAR else "ghz"
            parties.append(Party(name, basis=_build_basis(doc, i, b, expected, 2 if topology == LINEAR else n)))
        else:
            parties.append(Party(name, pair=_build_pair(doc, i, b)))
    names = [p.name for p in parties]
    if len(set(names)) != len(names):
        raise doc.error(None, 0, "party", f"duplicate party names {names}")
    sc = NetworkScenario(topology, sources, parties, limit, {"source_specs": [dict(s) for s in srcs], "path": doc.source})
    try:
        sc.validate()
    except ScenarioError as exc:
        raise doc.error(None, 0, "topology", str(exc)) from None
    return sc


# --- parameter paths ----------------------------------------------------------------


def resolve_path(doc: ScenarioDocument, path: str) -> list[tuple[dict, str]]:
    """Blocks and keys addressed by ``source.<i|*>.v`` or ``party.<name|i|*>.<eta|t>``.

    Source indices are 1-based; ``*`` selects every block that has the key
    (every Werner source, every family edge party).
    """
    parts = path.split(".")
    if len(parts) != 3:
        raise ScenarioParseError(None, path, "parameter path must look like source.1.v or party.A1.eta", doc.source)
    section, sel, key = parts
    data = doc.data
    if section == "source":
        if key != "v":
            raise ScenarioParseError(None, path, "only the Werner visibility v of a source can be varied", doc.source)
        blocks = list(enumerate(data.get("source", [])))
        if sel != "*":
            try:
                k = int(sel) - 1
            except ValueError:
                raise ScenarioParseError(None, path, f"source selector {sel!r} is not an index or *", doc.source) from None
            if not 0 <= k < len(blocks):
                raise ScenarioParseError(None, path, f"no source {sel}", doc.source)
            blocks = [blocks[k]]
        hits = [(b, key) for _, b in blocks if b.get("kind") == "werner"]
    elif section == "party":
        if key not in ("eta", "t"):
            raise ScenarioParseError(None, path, "only eta or t of a party can be varied", doc.source)
        blocks = list(enumerate(data.get("party", [])))
        if sel != "*":
            chosen = [(i, b) for i, b in blocks if b.get("name", f"A{i + 1}") == sel]
            if not chosen and sel.isdigit() and 0 < int(sel) <= len(blocks):
                chosen = [blocks[int(sel) - 1]]
            if not chosen:
                raise ScenarioParseError(None, path, f"no party named {sel}", doc.source)
            blocks = chosen
        if key == "t":
            hits = [(b, key) for _, b in blocks if "plane" in b]
        else:
            hits = [(b, key) for _, b in blocks if "basis" not in b and "vectors" not in b]
    else:
        raise ScenarioParseError(None, path, f"unknown section {section!r}; expected source or party", doc.source)
    if not hits:
        raise ScenarioParseError(None, path, "path does not address any numeric parameter", doc.source)
    return hits


def parse_range(spec: str) -> np.ndarray:
    """``start:stop:steps`` -> ``steps`` evenly spaced values including both ends."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"range {spec!r} must look like start:stop:steps")
    start, stop = parse_number(parts[0]), parse_number(parts[1])
    try:
        steps = int(parts[2])
    except ValueError:
        raise ValueError(f"step count {parts[2]!r} is not an integer") from None
    if steps < 1:
        raise ValueError("a scan needs at least one step")
    return np.linspace(start, stop, steps)


def parse_vary(spec: str) -> tuple[str, np.ndarray]:
    if "=" not in spec:
        raise ValueError(f"--vary expects path=start:stop:steps, got {spec!r}")
    path, rng = spec.split("=", 1)
    return path.strip(), parse_range(rng.strip())


# --- writing ----------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_vec(v) -> str:
    return "[" + ", ".join(_fmt(x) for x in v) + "]"


def _source_block(s: TwoQubitState, spec: dict | None) -> list[str]:
    if spec is not None:
        lines = []
        for k, v in spec.items():
            lines.append(f"{k} = {_toml_value(v)}")
        return lines
    entries = ", ".join(f"[{_fmt(z.real)}, {_fmt(z.imag)}]" for z in s.rho.reshape(-1))
    return ['kind = "matrix"', f"entries = [{entries}]"]


def _toml_value(v) -> str:
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return _fmt(v) if isinstance(v, float) else str(v)
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{ " + ", ".join(f"{_toml_value(str(k))} = {_toml_value(x)}" for k, x in v.items()) + " }"
    raise TypeError(f"cannot serialise {v!r}")


def _pair_block(pair: MeasurementPair) -> list[str]:
    if pair.plane is not None and pair.t is not None and pair.m0.eta == pair.m1.eta:
        return [f'plane = "{pair.plane}"', f"t = {_fmt(pair.t)}", f"eta = {_fmt(pair.m0.eta)}"]
    d = f"directions = [{_fmt_vec(pair.m0.direction)}, {_fmt_vec(pair.m1.direction)}]"
    if pair.m0.eta == pair.m1.eta:
        return [d, f"eta = {_fmt(pair.m0.eta)}"]
    return [d, f"eta = [{_fmt(pair.m0.eta)}, {_fmt(pair.m1.eta)}]"]


def dumps(scenario: NetworkScenario, header: str | None = None, reference: dict | None = None) -> str:
    """Scenario file text; floats are written round-trip exact."""
    lines = []
    if header:
        lines += [f"# {h}" for h in header.splitlines()]
    lines += [f'topology = "{scenario.topology}"', f"n = {scenario.n}", ""]
    specs = scenario.meta.get("source_specs")
    for i, s in enumerate(scenario.sources):
        spec = specs[i] if specs and i < len(specs) else None
        lines.append("[[source]]")
        lines += _source_block(s, spec)
        lines.append("")
    for p in scenario.parties:
        lines.append("[[party]]")
        lines.append(f'name = "{p.name}"')
        if p.basis is not None:
            lines.append(f'basis = "{p.basis.kind}"')
        else:
            lines += _pair_block(p.pair)
        lines.append("")
    if reference:
        lines.append("[reference]")
        for k, v in reference.items():
            lines.append(f"{k} = {_toml_value(v)}")
        lines.append("")
    return "\n".join(lines)


__all__ = [
    "ScenarioDocument",
    "ScenarioParseError",
    "build_scenario",
    "dumps",
    "load",
    "loads",
    "parse_number",
    "parse_range",
    "parse_vary",
    "resolve_path",
]
