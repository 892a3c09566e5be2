"""Numerical maximisation of the network functional over edge-party settings.

A coarse grid over the in-plane angle of every free edge party is scored with
the batch kernels; the best grid point seeds a Nelder-Mead refinement. With
``extended`` the refinement runs over both Bloch directions of every free
party (polar/azimuthal angles) instead of the single plane angle.

Sharpness is not a search variable: the functional is monotone in each eta,
so every free party sits at its cap, lowered to the joint-measurability
threshold when the party is forced compatible.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from ._backend import linear_lhs_batch, star_lhs_batch
from .inequalities import InequalityReport, evaluate, star_patterns
from .measurements import PLANES, MeasurementPair, is_compatible
from .network import LINEAR, NetworkScenario

GRID_POINTS = 24
MAX_ITER = 200
TOL = 1e-8
MAX_GRID = 5_000_000
_CHUNK = 65_536
# Forced incompatibility must hold with this much margin so round-off cannot flip it.
INCOMPAT_SLACK = 1e-9


class InfeasibleError(ValueError):
    """The constraint set admits no settings (exit code 2 on the command line)."""


@dataclass
class EdgeSpec:
    """Search range for one edge party."""

    plane: str | None = None  # default: xz on a chain, xy on a star
    eta_cap: float = 1.0
    constraint: str | None = None  # None, "compatible" or "incompatible"
    fixed: bool = False


@dataclass
class SearchSpec:
    scenario: NetworkScenario
    edges: dict[str, EdgeSpec] = field(default_factory=dict)
    grid: int = GRID_POINTS
    iterations: int = MAX_ITER
    tol: float = TOL
    extended: bool = False
    seed: int = 0

    def edge(self, name: str) -> EdgeSpec:
        return self.edges.setdefault(name, EdgeSpec())

    @property
    def objective(self) -> str:
        return "linear_lhs" if self.scenario.topology == LINEAR else "star_lhs"


@dataclass
class SearchResult:
    scenario: NetworkScenario
    lhs: float
    objective: float
    report: InequalityReport
    settings: dict[str, MeasurementPair]
    trace: list[tuple[str, int, float]]
    evaluations: int

    def trace_rows(self):
        for phase, step, value in self.trace:
            yield {"phase": phase, "step": step, "lhs": value}


def _threshold(n0: np.ndarray, n1: np.ndarray) -> np.ndarray:
    """Largest common eta for which unit directions n0, n1 are jointly measurable."""
    s = np.linalg.norm(n0 + n1, axis=-1) + np.linalg.norm(n0 - n1, axis=-1)
    return 2.0 / s


def _plane_dirs(plane: str, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c, s = np.cos(t), np.sin(t)
    zero = np.zeros_like(t)
    if plane == "xz":
        return np.stack([s, zero, c], -1), np.stack([-s, zero, c], -1)
    return np.stack([c, s, zero], -1), np.stack([c, -s, zero], -1)


def _sphere(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], -1)


def _to_sphere(d: np.ndarray) -> tuple[float, float]:
    return math.acos(max(-1.0, min(1.0, d[2]))), math.atan2(d[1], d[0])


class _Problem:
    """Maps a flat parameter array to settings vectors and scores them."""

    def __init__(self, spec: SearchSpec):
        sc = spec.scenario
        self.spec = spec
        self.scenario = sc
        self.linear = sc.topology == LINEAR
        self.edge_idx = [0, sc.n] if self.linear else list(range(1, sc.n + 1))
        self.tensors = np.array([s.T for s in sc.sources])
        self.patterns = None if self.linear else np.array(star_patterns(sc.n), dtype=np.intc) - 1
        self.free: list[int] = []
        self.fixed_vecs: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        for i in self.edge_idx:
            party = sc.parties[i]
            es = self.es(i)
            if es.plane not in PLANES:
                raise ValueError(f"party {party.name}: unknown plane {es.plane!r}")
            if not 0.0 <= es.eta_cap <= 1.0:
                raise ValueError(f"party {party.name}: eta cap must lie in [0, 1], got {es.eta_cap}")
            if es.constraint not in (None, "compatible", "incompatible"):
                raise ValueError(f"party {party.name}: unknown constraint {es.constraint!r}")
            if es.fixed:
                ok, margin = is_compatible(party.pair)
                if es.constraint == "compatible" and not ok:
                    raise InfeasibleError(f"fixed party {party.name} is incompatible (margin {margin:.6g})")
                if es.constraint == "incompatible" and margin >= -INCOMPAT_SLACK:
                    raise InfeasibleError(f"fixed party {party.name} is compatible (margin {margin:.6g})")
                self.fixed_vecs[i] = (party.pair.m0.vector, party.pair.m1.vector)
            else:
                if es.constraint == "incompatible" and es.eta_cap <= 1 / math.sqrt(2) + INCOMPAT_SLACK:
                    raise InfeasibleError(
                        f"party {party.name}: eta cap {es.eta_cap:.6g} <= 1/sqrt(2), every pair is jointly measurable"
                    )
                self.free.append(i)
        self.evaluations = 0

    def es(self, i: int) -> EdgeSpec:
        es = self.spec.edges.get(self.scenario.parties[i].name, EdgeSpec())
        if es.plane is None:
            es = replace(es, plane="xz" if self.linear else "xy")
        return es

    def _etas(self, i: int, n0: np.ndarray, n1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(eta, feasible) for a batch of unit direction pairs of free party i."""
        es = self.es(i)
        thr = _threshold(n0, n1)
        eta = np.full(thr.shape, es.eta_cap)
        feasible = np.ones(thr.shape, dtype=bool)
        if es.constraint == "compatible":
            eta = np.minimum(eta, thr)
        elif es.constraint == "incompatible":
            feasible = eta > thr + INCOMPAT_SLACK
        return eta, feasible

    def vectors(self, dirs: dict[int, tuple[np.ndarray, np.ndarray]], g: int):
        """Settings vectors (g, n_edges, 3) x2 and feasibility mask."""
        m0 = np.empty((g, len(self.edge_idx), 3))
        m1 = np.empty_like(m0)
        ok = np.ones(g, dtype=bool)
        for k, i in enumerate(self.edge_idx):
            if i in self.fixed_vecs:
                m0[:, k], m1[:, k] = self.fixed_vecs[i]
                continue
            n0, n1 = dirs[i]
            eta, feasible = self._etas(i, n0, n1)
            m0[:, k] = eta[:, None] * n0
            m1[:, k] = eta[:, None] * n1
            ok &= feasible
        return m0, m1, ok

    def score(self, m0: np.ndarray, m1: np.ndarray) -> np.ndarray:
        self.evaluations += m0.shape[0]
        if self.linear:
            lhs, _, _ = linear_lhs_batch(self.tensors, m0[:, 0], m1[:, 0], m0[:, 1], m1[:, 1])
        else:
            lhs, _ = star_lhs_batch(self.tensors, m0, m1, self.patterns)
        return np.asarray(lhs)

    # plane-angle parameterisation: one angle per free party
    def plane_dirs(self, x: np.ndarray) -> dict:
        return {i: _plane_dirs(self.es(i).plane, x[:, k]) for k, i in enumerate(self.free)}

    # sphere parameterisation: (theta0, phi0, theta1, phi1) per free party
    def sphere_dirs(self, x: np.ndarray) -> dict:
        out = {}
        for k, i in enumerate(self.free):
            p = x[:, 4 * k: 4 * k + 4]
            out[i] = (_sphere(p[:, 0], p[:, 1]), _sphere(p[:, 2], p[:, 3]))
        return out

    def objective(self, x: np.ndarray, extended: bool) -> float:
        x = np.atleast_2d(x)
        dirs = self.sphere_dirs(x) if extended else self.plane_dirs(x)
        m0, m1, ok = self.vectors(dirs, x.shape[0])
        if not ok[0]:
            return 1e3
        return -float(self.score(m0, m1)[0])

    def pairs(self, x: np.ndarray, extended: bool) -> dict[int, MeasurementPair]:
        out = {}
        for k, i in enumerate(self.free):
            es = self.es(i)
            if extended:
                p = x[4 * k: 4 * k + 4]
                n0, n1 = _sphere(np.array(p[0]), np.array(p[1])), _sphere(np.array(p[2]), np.array(p[3]))
                n0, n1 = n0 / np.linalg.norm(n0), n1 / np.linalg.norm(n1)
                eta, _ = self._etas(i, n0[None], n1[None])
                out[i] = MeasurementPair.from_directions(n0, n1, float(eta[0]))
            else:
                t = float(x[k])
                n0, n1 = _plane_dirs(es.plane, np.array([t]))
                eta, _ = self._etas(i, n0, n1)
                out[i] = MeasurementPair.family(es.plane, t, float(eta[0]))
        return out


def _grid(problem: _Problem, points: int):
    k = len(problem.free)
    total = points ** k
    if total > MAX_GRID:
        raise ValueError(f"grid of {points}^{k} = {total} points exceeds {MAX_GRID}; lower the grid size")
    angles = 2 * np.pi * np.arange(points) / points
    best_val, best_x = -np.inf, None
    combos = itertools.product(angles, repeat=k)
    while True:
        chunk = np.array(list(itertools.islice(combos, _CHUNK)))
        if chunk.size == 0:
            break
        chunk = chunk.reshape(-1, k)
        m0, m1, ok = problem.vectors(problem.plane_dirs(chunk), chunk.shape[0])
        vals = np.where(ok, problem.score(m0, m1), -np.inf)
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val, best_x = float(vals[j]), chunk[j]
    if best_x is None or not np.isfinite(best_val):
        raise InfeasibleError("no grid point satisfies the constraints")
    return best_val, best_x


def optimize(spec: SearchSpec) -> SearchResult:
    """Maximise the functional; the returned scenario reproduces ``lhs`` exactly."""
    problem = _Problem(spec)
    trace: list[tuple[str, int, float]] = []
    if not problem.free:
        x_best, extended = np.zeros(0), False
    else:
        val, x0 = _grid(problem, spec.grid)
        trace.append(("grid", 0, val))
        extended = spec.extended
        if extended:
            dirs = problem.plane_dirs(x0[None])
            x0 = np.concatenate([np.r_[_to_sphere(dirs[i][0][0]), _to_sphere(dirs[i][1][0])] for i in problem.free])
        best = [val]

        def callback(xk):
            v = -problem.objective(xk, extended)
            best[0] = max(best[0], v)
            trace.append(("refine", len(trace), best[0]))

        res = minimize(
            problem.objective,
            x0,
            args=(extended,),
            method="Nelder-Mead",
            callback=callback,
            options={"maxiter": spec.iterations, "xatol": spec.tol, "fatol": spec.tol},
        )
        x_best = res.x if -res.fun >= val else x0
        objective_value = max(-res.fun, val)
        trace.append(("final", len(trace), objective_value))
    pairs = problem.pairs(x_best, extended) if problem.free else {}
    parties = list(spec.scenario.parties)
    for i, pair in pairs.items():
        parties[i] = type(parties[i])(parties[i].name, pair=pair)
    best_sc = spec.scenario.with_parties(parties)
    report = evaluate(best_sc)
    m0 = np.array([[p.pair.m0.vector for p in (parties[i] for i in problem.edge_idx)]])
    m1 = np.array([[p.pair.m1.vector for p in (parties[i] for i in problem.edge_idx)]])
    objective_value = float(problem.score(m0, m1)[0])
    for i in problem.edge_idx:
        es = problem.es(i)
        ok, margin = is_compatible(parties[i].pair)
        if es.constraint == "compatible" and not ok:
            raise InfeasibleError(f"optimum for {parties[i].name} violates compatibility (margin {margin:.3g})")
        if es.constraint == "incompatible" and ok:
            raise InfeasibleError(f"optimum for {parties[i].name} is compatible (margin {margin:.3g})")
    return SearchResult(
        scenario=best_sc,
        lhs=report.lhs,
        objective=objective_value,
        report=report,
        settings={parties[i].name: parties[i].pair for i in problem.edge_idx},
        trace=trace,
        evaluations=problem.evaluations,
    )


__all__ = ["EdgeSpec", "InfeasibleError", "SearchResult", "SearchSpec", "optimize"]
