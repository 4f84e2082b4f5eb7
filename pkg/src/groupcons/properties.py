"""Seeded batch checks of the structural and dynamical consensus properties.

Every check takes a random equitable graph (plus, where useful, an
EEP-preserving edge-deleted mutation of it) and returns ``True``/``False``,
or ``None`` when its premise does not apply to that graph.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .control import coupling_thresholds, gain, oscillator, solve_riccati
from .errors import GroupConsensusError
from .generate import delete_edges, random_corpus_graph
from .graph import (
    ClusteredDigraph,
    condensation,
    has_cluster_spanning_trees,
    laplacian,
    min_spanning_forest_size,
    reachable_set,
)
from .quotient import check_common_influence, quotient_graph
from .reduction import reach_decomposition, reduced_laplacian, similarity_decomposition
from .simulate import Scenario, predict_limit, simulate, verify_prediction
from .spectral import eigenvalues, hurwitz_check, min_real_part, zero_eig_count

__all__ = ["CHECKS", "run_checks", "run_suite", "SuiteResult", "format_table"]

SIM_T = 200.0
SIM_DT = 0.01


def _graphs(seed: int) -> list[ClusteredDigraph]:
    g = random_corpus_graph(seed)
    try:
        return [g, delete_edges(g, seed)]
    except GroupConsensusError:
        return [g]


def _forest_equal(g) -> bool:
    return min_spanning_forest_size(g) == min_spanning_forest_size(quotient_graph(g))


def check_laplacian(g) -> bool:
    lap = laplacian(g)
    off = lap - np.diag(np.diag(lap))
    tol = 1e-12 * (1 + np.abs(lap).max())
    return bool(np.all(np.abs(lap.sum(axis=1)) <= tol) and np.all(off <= 0) and np.all(np.diag(lap) >= 0))


def check_eep(g) -> bool:
    return check_common_influence(g).holds


def check_zero_count(g) -> bool:
    q = quotient_graph(g)
    return (
        zero_eig_count(eigenvalues(laplacian(g))) == min_spanning_forest_size(g)
        and zero_eig_count(eigenvalues(q.laplacian)) == min_spanning_forest_size(q)
    )


def check_spectrum_split(g) -> bool:
    return reduced_laplacian(g).split.ok


def check_similarity(g) -> bool:
    similarity_decomposition(g)
    return True


def check_reduced_stability(g) -> bool:
    spec = reduced_laplacian(g).split.reduced
    stable = min_real_part(spec) > spec.zero_tol
    return stable == _forest_equal(g)


def check_forest_tree_equivalence(g) -> bool:
    return _forest_equal(g) == has_cluster_spanning_trees(g).holds


def check_quotient_inherits_connectivity(g) -> bool | None:
    q = quotient_graph(g)
    applies = False
    ok = True
    if min_spanning_forest_size(g) == 1:
        applies = True
        ok &= min_spanning_forest_size(q) == 1
    if len(condensation(g).components) == 1:
        applies = True
        ok &= len(condensation(q).components) == 1
    return ok if applies else None


def check_rooted_cluster_tree(g) -> bool | None:
    """A spanned quotient whose root cluster is internally spanned yields a spanned graph."""
    q = quotient_graph(g)
    if min_spanning_forest_size(q) != 1:
        return None
    cond = condensation(q)
    root_clusters = cond.components[cond.sources()[0]]
    rooted = []
    for i in root_clusters:
        c = g.clusters[i]
        sub = g.weights[c.start : c.stop, c.start : c.stop]
        rooted.append(min_spanning_forest_size(sub) == 1)
    if not any(rooted):
        return None
    return min_spanning_forest_size(g) == 1


def check_exclusive_parts_spanned(g) -> bool:
    rd = reach_decomposition(g)
    spanned = all(
        any(set(part) <= reachable_set(g, v) for v in range(g.n_agents)) for part in rd.reach_agents
    )
    return spanned == has_cluster_spanning_trees(g).holds


def check_reach_blocks(g) -> bool | None:
    rd = reach_decomposition(g)
    lap = laplacian(g)
    perm = lap[np.ix_(rd.agent_order, rd.agent_order)]
    r = rd.L_R.shape[0]
    tol = 1e-12 * (1 + np.abs(lap).max())
    exact = bool(np.all(perm[:r, r:] == 0)) and all(np.all(np.abs(b.sum(axis=1)) <= tol) for b in rd.blocks)
    if not has_cluster_spanning_trees(g).holds:
        return exact
    single_zero = all(zero_eig_count(eigenvalues(b)) == 1 for b in rd.blocks)
    lf_ok = rd.L_F.size == 0 or min_real_part(eigenvalues(rd.L_F)) > 0
    return exact and single_zero and lf_ok


def check_convex_weights(g) -> bool | None:
    if not has_cluster_spanning_trees(g).holds:
        return None
    dyn = oscillator()
    K = gain(solve_riccati(dyn), dyn.B)
    W = predict_limit(g, dyn, K, np.zeros(2 * g.n_agents), delta_pattern=1.0).convex_weights
    if W.size == 0:
        return True
    return bool(np.all(W >= -1e-10) and np.allclose(W.sum(axis=1), 1.0, rtol=0, atol=1e-8))


def check_reach_monotone(g) -> bool:
    rng = np.random.default_rng(g.n_agents * 7919 + int(g.weights.sum() * 1e6) % 7919)
    absent = [(l, k) for l in range(g.n_agents) for k in range(g.n_agents) if l != k and g.weights[l, k] == 0]
    if not absent:
        return True
    w = g.weights.copy()
    w[absent[int(rng.integers(len(absent)))]] = 1.0
    return all(reachable_set(g, v) <= reachable_set(w, v) for v in range(g.n_agents))


def _x0(g, seed: int) -> np.ndarray:
    return np.random.default_rng([seed, 0x50]).standard_normal(2 * g.n_agents)


def check_group_consensus(g, seed: int = 0) -> bool:
    """Feasible: consensus at the group threshold.  Infeasible: transversal dynamics not Hurwitz."""
    dyn = oscillator()
    K = gain(solve_riccati(dyn), dyn.B)
    if has_cluster_spanning_trees(g).holds:
        th = coupling_thresholds(g)
        delta = th.delta_group if th.delta_group > 0 else 1.0
        traj = simulate(Scenario(g, dyn, delta, _x0(g, seed), t_final=SIM_T, dt=SIM_DT, K=K), stride=50)
        return traj.final_disagreement <= 1e-3
    spec = reduced_laplacian(g).split.reduced
    full = eigenvalues(laplacian(g))
    delta = 1.0 / (2 * full.nonzero.real.min())
    _, margin = hurwitz_check(dyn.A, dyn.B, K, delta, spec)
    return -margin >= -1e-9


def check_limit_pattern(g, seed: int = 0) -> bool | None:
    if not has_cluster_spanning_trees(g).holds:
        return None
    dyn = oscillator()
    K = gain(solve_riccati(dyn), dyn.B)
    th = coupling_thresholds(g)
    delta = th.delta_pattern if th.delta_pattern > 0 else 1.0
    x0 = _x0(g, seed)
    traj = simulate(Scenario(g, dyn, delta, x0, t_final=SIM_T, dt=SIM_DT, K=K), stride=10)
    pred = predict_limit(g, dyn, K, x0, delta_pattern=th.delta_pattern)
    if not verify_prediction(traj, pred).passed:
        return False
    rd = reach_decomposition(g)
    final = traj.states[-1]
    for part in rd.reach_agents:
        if np.linalg.norm(final[list(part)] - final[part[0]], axis=1).max() > 1e-3:
            return False
    return True


CHECKS: dict[str, Callable] = {
    "laplacian rows": check_laplacian,
    "common influence": check_eep,
    "zero count = forest size": check_zero_count,
    "spectrum split": check_spectrum_split,
    "similarity transform": check_similarity,
    "reduced stable <=> equal forests": check_reduced_stability,
    "equal forests <=> cluster trees": check_forest_tree_equivalence,
    "quotient inherits connectivity": check_quotient_inherits_connectivity,
    "rooted cluster spans graph": check_rooted_cluster_tree,
    "exclusive parts spanned": check_exclusive_parts_spanned,
    "reach block form": check_reach_blocks,
    "convex weights stochastic": check_convex_weights,
    "reachability monotone": check_reach_monotone,
}

DYNAMIC_CHECKS: dict[str, Callable] = {
    "group consensus at delta_group": check_group_consensus,
    "limit pattern at delta_pattern": check_limit_pattern,
}


def run_checks(seed: int, dynamics: bool = True) -> dict[str, list[bool | None]]:
    """Run every check on the seed's graph and its mutation; exceptions count as failures."""
    results: dict[str, list[bool | None]] = {}
    graphs = _graphs(seed)
    for name, fn in CHECKS.items():
        results[name] = [_guard(fn, g) for g in graphs]
    if dynamics:
        for name, fn in DYNAMIC_CHECKS.items():
            results[name] = [_guard(fn, graphs[0], seed)]
    return results


def _guard(fn, *args) -> bool | None:
    try:
        return fn(*args)
    except GroupConsensusError:
        return False
    except (ValueError, np.linalg.LinAlgError, ArithmeticError):
        return False


@dataclass
class SuiteResult:
    passed: dict[str, int] = field(default_factory=dict)
    failed: dict[str, int] = field(default_factory=dict)
    skipped: dict[str, int] = field(default_factory=dict)
    failing_seeds: dict[str, list[int]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not any(self.failed.values())

    def add(self, seed: int, results: dict[str, list[bool | None]]) -> None:
        for name, outcomes in results.items():
            for r in outcomes:
                bucket = self.skipped if r is None else self.passed if r else self.failed
                bucket[name] = bucket.get(name, 0) + 1
                if r is False:
                    self.failing_seeds.setdefault(name, []).append(seed)


def run_suite(seeds, dynamics: bool = True, jobs: int = 1) -> SuiteResult:
    seeds = list(seeds)
    result = SuiteResult()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run_checks, seeds, [dynamics] * len(seeds)))
    else:
        outcomes = [run_checks(s, dynamics) for s in seeds]
    for seed, res in zip(seeds, outcomes):
        result.add(seed, res)
    return result


def format_table(result: SuiteResult) -> str:
    names = list(CHECKS) + [n for n in DYNAMIC_CHECKS if n in result.passed or n in result.failed or n in result.skipped]
    width = max(len(n) for n in names)
    lines = [f"{'check':<{width}}  {'pass':>6}  {'fail':>6}  {'skip':>6}  status"]
    for n in names:
        p, f, s = result.passed.get(n, 0), result.failed.get(n, 0), result.skipped.get(n, 0)
        status = "FAIL" if f else "ok"
        lines.append(f"{n:<{width}}  {p:>6}  {f:>6}  {s:>6}  {status}")
        if f:
            lines.append(f"{'':<{width}}  failing seeds: {result.failing_seeds[n][:10]}")
    return "\n".join(lines)
