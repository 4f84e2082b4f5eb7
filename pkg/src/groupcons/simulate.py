"""Closed-loop simulation, group disagreement and the predicted limit pattern."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .control import Dynamics, coupling_thresholds, gain, solve_riccati
from .errors import InfeasibleTopologyError
from .graph import ClusteredDigraph, has_cluster_spanning_trees, laplacian
from .reduction import reach_decomposition

__all__ = [
    "Scenario",
    "Trajectory",
    "LimitPrediction",
    "PredictionCheck",
    "closed_loop_matrix",
    "rk4_step",
    "simulate",
    "cluster_disagreement",
    "predict_limit",
    "verify_prediction",
    "DIVERGENCE_NORM",
]

DIVERGENCE_NORM = 1e12
INTEGRATORS = ("expm", "rk4")


@dataclass(frozen=True, eq=False)
class Scenario:
    """Closed-loop run settings.

    ``x0`` is the stacked state ``[x_1; ...; x_L]`` in the graph's internal
    agent order.  ``K`` defaults to the Riccati gain ``B'P``.
    """

    graph: ClusteredDigraph
    dynamics: Dynamics
    delta: float
    x0: np.ndarray
    t_final: float = 200.0
    dt: float = 1e-3
    integrator: str = "expm"
    K: np.ndarray | None = None

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_final >= self.dt:
            raise ValueError(f"t_final must be at least dt, got {self.t_final}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        x0 = np.asarray(self.x0, dtype=float).ravel()
        expected = self.dynamics.n * self.graph.n_agents
        if x0.size != expected:
            raise ValueError(f"x0 has length {x0.size}, expected {expected}")
        object.__setattr__(self, "x0", x0)
        if self.K is None:
            K = gain(solve_riccati(self.dynamics), self.dynamics.B)
        else:
            K = np.asarray(self.K, dtype=float).reshape(self.dynamics.n_inputs, self.dynamics.n)
        object.__setattr__(self, "K", K)

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.t_final / self.dt + 1e-9))


def closed_loop_matrix(scenario: Scenario) -> np.ndarray:
    """``I_L (x) A - delta * L (x) BK``."""
    g, dyn = scenario.graph, scenario.dynamics
    BK = dyn.B @ scenario.K
    if BK.shape != dyn.A.shape:
        raise ValueError(f"BK has shape {BK.shape}, expected {dyn.A.shape}")
    return np.kron(np.eye(g.n_agents), dyn.A) - scenario.delta * np.kron(laplacian(g), BK)


def rk4_step(M: np.ndarray, x: np.ndarray, h: float) -> np.ndarray:
    """One classical Runge-Kutta step for ``dx/dt = M x``; ``x`` may hold several columns."""
    k1 = M @ x
    k2 = M @ (x + 0.5 * h * k1)
    k3 = M @ (x + 0.5 * h * k2)
    k4 = M @ (x + h * k3)
    return x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _step_matrix(M: np.ndarray, dt: float, steps: int, integrator: str) -> np.ndarray:
    if steps == 0:
        return np.eye(M.shape[0])
    if integrator == "expm":
        return scipy.linalg.expm(M * (dt * steps))
    # a linear RK4 step is a fixed matrix; build it by stepping the identity
    R = rk4_step(M, np.eye(M.shape[0]), dt)
    return np.linalg.matrix_power(R, steps)


def _propagate(F: np.ndarray, x: np.ndarray, count: int, limit: float, chunk: int = 256):
    """Apply ``F`` repeatedly; stop early once the state norm exceeds ``limit``."""
    out = np.empty((count + 1, x.size))
    out[0] = x
    b = min(chunk, count)
    powers = np.empty((b, F.shape[0], F.shape[1]))
    if b:
        powers[0] = F
        for j in range(1, b):
            powers[j] = powers[j - 1] @ F
    done = 0
    while done < count:
        n = min(b, count - done)
        block = powers[:n] @ out[done]
        out[done + 1 : done + 1 + n] = block
        bad = np.flatnonzero(~(np.linalg.norm(block, axis=1) <= limit))
        if bad.size:
            return out[: done + 2 + bad[0]], True
        done += n
    return out, False


def cluster_disagreement(states: np.ndarray, g: ClusteredDigraph) -> np.ndarray:
    """``D_i(t) = max_{k,l in C_i} ||x_k(t) - x_l(t)||``; returns shape (samples, N)."""
    out = np.zeros((states.shape[0], g.n_clusters))
    for i, c in enumerate(g.clusters):
        for a in c:
            for b in range(a + 1, c.stop):
                d = np.linalg.norm(states[:, a] - states[:, b], axis=1)
                np.maximum(out[:, i], d, out=out[:, i])
    return out


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled closed-loop states, shape ``(samples, L, n)`` in internal agent order."""

    times: np.ndarray
    states: np.ndarray
    graph: ClusteredDigraph
    delta: float
    diverged: bool = False
    cluster_disagreement: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "cluster_disagreement", cluster_disagreement(self.states, self.graph))

    @property
    def disagreement(self) -> np.ndarray:
        """``D(t) = max_i D_i(t)``."""
        if self.cluster_disagreement.shape[1] == 0:
            return np.zeros(len(self.times))
        return self.cluster_disagreement.max(axis=1)

    @property
    def final_disagreement(self) -> float:
        return float(self.disagreement[-1])

    def stacked(self) -> np.ndarray:
        return self.states.reshape(len(self.times), -1)

    def errors(self) -> np.ndarray:
        """Differences ``x_l - x_(first agent of l's cluster)`` stacked over non-first agents."""
        heads = self.graph.cluster_of
        firsts = np.array(self.graph.offsets)[heads]
        rest = [a for a in range(self.graph.n_agents) if firsts[a] != a]
        e = self.states[:, rest] - self.states[:, firsts[rest]]
        return e.reshape(len(self.times), -1)


def simulate(scenario: Scenario, stride: int = 1, divergence: float = DIVERGENCE_NORM) -> Trajectory:
    """Integrate the closed loop on the grid ``t = k*dt``, keeping every ``stride``-th sample.

    The final instant ``n_steps*dt`` is always kept.  ``expm`` propagates
    with the exact one-step map ``exp(M dt)``; ``rk4`` uses classical
    fixed-step Runge-Kutta.  If the state norm passes ``divergence`` the run
    stops and the trajectory is flagged.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    M = closed_loop_matrix(scenario)
    steps = scenario.n_steps
    full, rem = divmod(steps, stride)
    F = _step_matrix(M, scenario.dt, stride, scenario.integrator)
    xs, diverged = _propagate(F, scenario.x0, full, divergence)
    idx = np.arange(len(xs)) * stride
    if rem and not diverged:
        G = _step_matrix(M, scenario.dt, rem, scenario.integrator)
        last = G @ xs[-1]
        xs = np.vstack([xs, last])
        idx = np.append(idx, steps)
        diverged = not np.linalg.norm(last) <= divergence
    L, n = scenario.graph.n_agents, scenario.dynamics.n
    return Trajectory(
        times=idx * scenario.dt,
        states=xs.reshape(len(xs), L, n),
        graph=scenario.graph,
        delta=scenario.delta,
        diverged=bool(diverged),
    )


@dataclass(frozen=True, eq=False)
class LimitPrediction:
    """Asymptotic state ``x(t) ~ (operator (x) e^{At}) x0``.

    ``form`` is ``"global"`` when one directed tree spans the graph and
    ``"reach"`` otherwise.  ``xi`` and ``convex_weights`` are in reach order
    (``agent_order``); ``operator`` is the same map in internal agent order.
    """

    form: str
    xi: np.ndarray
    left_vectors: tuple[np.ndarray, ...]
    convex_weights: np.ndarray
    agent_order: np.ndarray
    operator: np.ndarray
    A: np.ndarray
    x0: np.ndarray
    delta_pattern: float
    single_integrator: bool

    def predict(self, times) -> np.ndarray:
        """Predicted states, shape ``(len(times), L, n)``."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        n = self.A.shape[0]
        X0 = self.x0.reshape(-1, n)
        Y = self.operator @ X0
        E = scipy.linalg.expm(times[:, None, None] * self.A[None])
        return np.einsum("ln,tmn->tlm", Y, E)


def _left_null_vector(block: np.ndarray) -> np.ndarray:
    size = block.shape[0]
    lhs = np.vstack([block.T, np.ones((1, size))])
    rhs = np.zeros(size + 1)
    rhs[-1] = 1.0
    nu, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    return nu


def predict_limit(
    g: ClusteredDigraph,
    dyn: Dynamics,
    K: np.ndarray,
    x0: np.ndarray,
    delta_pattern: float | None = None,
) -> LimitPrediction:
    """Limit pattern for a graph with cluster spanning trees.

    Agents in the exclusive part of reach p converge to
    ``(nu_p' (x) e^{At}) x_p(0)``; agents in the common part converge to the
    convex combination given by ``-L_F^-1 L_FR`` of those reach states.
    """
    if not has_cluster_spanning_trees(g).holds:
        raise InfeasibleTopologyError("graph lacks cluster spanning trees; no limit pattern exists")
    rd = reach_decomposition(g)
    nus = tuple(_left_null_vector(b) for b in rd.blocks)
    xi = scipy.linalg.block_diag(*[np.outer(np.ones(len(nu)), nu) for nu in nus])
    r = xi.shape[0]
    if rd.L_F.size:
        W = -np.linalg.solve(rd.L_F, rd.L_FR)
    else:
        W = np.zeros((0, r))
    L = g.n_agents
    reach_op = np.zeros((L, L))
    reach_op[:r, :r] = xi
    reach_op[r:, :r] = W @ xi
    order = rd.agent_order
    op = np.zeros((L, L))
    op[np.ix_(order, order)] = reach_op
    if delta_pattern is None:
        delta_pattern = coupling_thresholds(g).delta_pattern
    BK = dyn.B @ np.asarray(K, dtype=float).reshape(dyn.n_inputs, dyn.n)
    single = dyn.n == 1 and dyn.A[0, 0] == 0 and BK[0, 0] == 1
    return LimitPrediction(
        form="global" if rd.m == 1 else "reach",
        xi=xi,
        left_vectors=nus,
        convex_weights=W,
        agent_order=order,
        operator=op,
        A=dyn.A,
        x0=np.asarray(x0, dtype=float).ravel(),
        delta_pattern=float(delta_pattern),
        single_integrator=bool(single),
    )


@dataclass(frozen=True, eq=False)
class PredictionCheck:
    applicable: bool
    passed: bool | None
    tail_max: float | None
    tolerance: float
    tail_deviation: np.ndarray | None = None

    @property
    def status(self) -> str:
        if not self.applicable:
            return "not applicable"
        return "pass" if self.passed else "fail"


def verify_prediction(
    traj: Trajectory, pred: LimitPrediction, tol: float = 1e-2, tail_fraction: float = 0.1
) -> PredictionCheck:
    """Compare a trajectory to the predicted limit over its last ``tail_fraction`` of samples.

    Deviation is ``||x(t) - xhat(t)|| / (1 + ||xhat(t)||)``.  The comparison is
    only meaningful when the run used coupling at or above the pattern
    threshold (any coupling for single integrators); otherwise the check is
    reported as not applicable.
    """
    applicable = pred.single_integrator or traj.delta >= pred.delta_pattern * (1 - 1e-12)
    if not applicable:
        return PredictionCheck(False, None, None, tol)
    count = len(traj.times)
    start = min(int(math.floor(count * (1 - tail_fraction))), count - 1)
    times = traj.times[start:]
    xhat = pred.predict(times).reshape(len(times), -1)
    x = traj.stacked()[start:]
    dev = np.linalg.norm(x - xhat, axis=1) / (1.0 + np.linalg.norm(xhat, axis=1))
    tail = float(dev.max())
    passed = tail <= tol and not traj.diverged
    return PredictionCheck(True, bool(passed), tail, tol, dev)
