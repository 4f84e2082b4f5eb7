"""JSON scenario files: parsing with field diagnostics, serialization, and resolution."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .control import Dynamics, coupling_thresholds
from .errors import GraphError, InfeasibleTopologyError
from .graph import ClusteredDigraph, build_graph, has_cluster_spanning_trees
from .simulate import INTEGRATORS, Scenario

__all__ = [
    "ScenarioError",
    "ScenarioFile",
    "parse_scenario",
    "load_scenario",
    "dump_scenario",
    "scenario_file_from",
    "resolve",
]

AUTO_DELTAS = ("auto-group", "auto-pattern")


class ScenarioError(ValueError):
    """Malformed scenario file; the message names the offending field or location."""


@dataclass
class ScenarioFile:
    agents: int
    clusters: list[list[int]]
    edges: list[dict]
    A: list[list[float]]
    B: list[list[float]]
    Q: list[list[float]] | None = None
    delta: float | str = "auto-pattern"
    t_final: float = 200.0
    dt: float = 1e-3
    integrator: str = "expm"
    seed: int = 0
    x0: list[float] | None = None

    def graph(self) -> ClusteredDigraph:
        try:
            return build_graph(
                self.agents,
                [[a - 1 for a in c] for c in self.clusters],
                [(e["from"] - 1, e["to"] - 1, e["weight"]) for e in self.edges],
            )
        except GraphError as exc:
            raise ScenarioError(f"graph: {exc}") from exc

    def dynamics(self) -> Dynamics:
        try:
            return Dynamics(np.array(self.A, dtype=float), np.array(self.B, dtype=float),
                            None if self.Q is None else np.array(self.Q, dtype=float))
        except ValueError as exc:
            raise ScenarioError(f"dynamics: {exc}") from exc


def _fail(path: str, msg: str):
    raise ScenarioError(f"field '{path}': {msg}")


def _number(v: Any, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        _fail(path, f"expected a finite number, got {v!r}")
    return v


def _integer(v: Any, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(path, f"expected an integer, got {v!r}")
    return v


def _matrix(v: Any, path: str) -> list[list[float]]:
    if not isinstance(v, list) or not v or not all(isinstance(r, list) for r in v):
        _fail(path, "expected a nonempty row-major array of arrays")
    width = len(v[0])
    for i, row in enumerate(v):
        if len(row) != width or width == 0:
            _fail(f"{path}[{i}]", f"rows must all have length {width or 'at least 1'}")
        for j, x in enumerate(row):
            _number(x, f"{path}[{i}][{j}]")
    return v


def parse_scenario(text: str) -> ScenarioFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("top level must be a JSON object")
    for key in ("agents", "clusters", "edges", "dynamics"):
        if key not in doc:
            _fail(key, "missing")

    agents = _integer(doc["agents"], "agents")
    if agents < 1:
        _fail("agents", "must be positive")
    clusters = doc["clusters"]
    if not isinstance(clusters, list) or not clusters:
        _fail("clusters", "expected a nonempty list of lists")
    for i, c in enumerate(clusters):
        if not isinstance(c, list) or not c:
            _fail(f"clusters[{i}]", "expected a nonempty list of agent ids")
        for j, a in enumerate(c):
            if not 1 <= _integer(a, f"clusters[{i}][{j}]") <= agents:
                _fail(f"clusters[{i}][{j}]", f"agent id {a} outside 1..{agents}")
    edges = doc["edges"]
    if not isinstance(edges, list):
        _fail("edges", "expected a list")
    for i, e in enumerate(edges):
        if not isinstance(e, dict) or set(e) != {"from", "to", "weight"}:
            _fail(f"edges[{i}]", "expected an object with keys from, to, weight")
        for k in ("from", "to"):
            if not 1 <= _integer(e[k], f"edges[{i}].{k}") <= agents:
                _fail(f"edges[{i}].{k}", f"agent id {e[k]} outside 1..{agents}")
        if not _number(e["weight"], f"edges[{i}].weight") > 0:
            _fail(f"edges[{i}].weight", "must be positive")

    dyn = doc["dynamics"]
    if not isinstance(dyn, dict):
        _fail("dynamics", "expected an object")
    for key in ("A", "B"):
        if key not in dyn:
            _fail(f"dynamics.{key}", "missing")
    A = _matrix(dyn["A"], "dynamics.A")
    B = _matrix(dyn["B"], "dynamics.B")
    Q = dyn.get("Q")
    if Q is not None:
        Q = _matrix(Q, "dynamics.Q")

    coupling = doc.get("coupling", {})
    if not isinstance(coupling, dict):
        _fail("coupling", "expected an object")
    delta = coupling.get("delta", "auto-pattern")
    if isinstance(delta, str):
        if delta not in AUTO_DELTAS:
            _fail("coupling.delta", f"expected a number or one of {AUTO_DELTAS}")
    elif not _number(delta, "coupling.delta") > 0:
        _fail("coupling.delta", "must be positive")

    sim = doc.get("sim", {})
    if not isinstance(sim, dict):
        _fail("sim", "expected an object")
    t_final = _number(sim.get("t_final", 200.0), "sim.t_final")
    dt = _number(sim.get("dt", 1e-3), "sim.dt")
    if not dt > 0:
        _fail("sim.dt", "must be positive")
    if not t_final >= dt:
        _fail("sim.t_final", "must be at least dt")
    integrator = sim.get("integrator", "expm")
    if integrator not in INTEGRATORS:
        _fail("sim.integrator", f"expected one of {INTEGRATORS}")
    seed = _integer(sim.get("seed", 0), "sim.seed")
    x0 = sim.get("x0")
    if x0 is not None:
        if not isinstance(x0, list):
            _fail("sim.x0", "expected a flat list of numbers")
        for i, x in enumerate(x0):
            _number(x, f"sim.x0[{i}]")
        if len(x0) != agents * len(A):
            _fail("sim.x0", f"expected {agents * len(A)} entries, got {len(x0)}")

    return ScenarioFile(
        agents=agents, clusters=clusters, edges=edges, A=A, B=B, Q=Q, delta=delta,
        t_final=t_final, dt=dt, integrator=integrator, seed=seed, x0=x0,
    )


def load_scenario(path) -> ScenarioFile:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def dump_scenario(sf: ScenarioFile) -> str:
    """Serialize losslessly (shortest round-trip float repr), keys in a fixed order."""
    doc = {
        "agents": sf.agents,
        "clusters": sf.clusters,
        "edges": [{"from": e["from"], "to": e["to"], "weight": e["weight"]} for e in sf.edges],
        "dynamics": {"A": sf.A, "B": sf.B, "Q": sf.Q},
        "coupling": {"delta": sf.delta},
        "sim": {
            "t_final": sf.t_final,
            "dt": sf.dt,
            "integrator": sf.integrator,
            "seed": sf.seed,
            "x0": sf.x0,
        },
    }
    return json.dumps(doc, indent=2) + "\n"


def scenario_file_from(g: ClusteredDigraph, dyn: Dynamics, **sim) -> ScenarioFile:
    """Scenario file for a library graph; ``sim`` sets delta, t_final, dt, integrator, seed or x0."""
    label = [i + 1 for i in g.original_ids]
    return ScenarioFile(
        agents=g.n_agents,
        clusters=[sorted(label[a] for a in c) for c in g.clusters],
        edges=[{"from": label[k], "to": label[l], "weight": float(w)} for k, l, w in g.edges()],
        A=dyn.A.tolist(),
        B=dyn.B.tolist(),
        Q=dyn.Q.tolist(),
        **sim,
    )


def resolve(sf: ScenarioFile, delta: float | str | None = None) -> Scenario:
    """Turn a scenario file into a runnable ``Scenario``.

    ``delta`` overrides the file's coupling.  Automatic couplings raise
    ``InfeasibleTopologyError`` when the graph cannot reach group consensus.
    """
    g = sf.graph()
    dyn = sf.dynamics()
    choice = sf.delta if delta is None else delta
    if isinstance(choice, str):
        if choice not in AUTO_DELTAS:
            raise ScenarioError(f"unknown coupling {choice!r}")
        th = coupling_thresholds(g)
        if choice == "auto-pattern":
            if not has_cluster_spanning_trees(g).holds:
                raise InfeasibleTopologyError("graph lacks cluster spanning trees")
        value = th.delta_group if choice == "auto-group" else th.delta_pattern
    else:
        value = float(choice)
    if not value > 0:
        # all-singleton clusterings admit any positive coupling
        value = 1.0
    if sf.x0 is None:
        x0 = np.random.default_rng(sf.seed).standard_normal(g.n_agents * dyn.n)
    else:
        x0 = np.asarray(sf.x0, dtype=float)
    # file order is by original agent id; internal order groups clusters
    x0 = x0.reshape(g.n_agents, dyn.n)[list(g.original_ids)].ravel()
    return Scenario(g, dyn, value, x0, t_final=sf.t_final, dt=sf.dt, integrator=sf.integrator)
