"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py``; the lines are repeated in
the terminal summary under "acceptance criteria".
"""

import time

import numpy as np

from groupcons.control import coupling_thresholds, gain, oscillator, single_integrator, solve_riccati
from groupcons.errors import GraphError
from groupcons.generate import delete_edges, g_toy2, infeasible_mutation, oscillator_surrogate, random_corpus_graph
from groupcons.graph import has_cluster_spanning_trees, laplacian, min_spanning_forest_size
from groupcons.quotient import quotient_graph
from groupcons.reduction import PAIRING_TOL, reach_decomposition, reduced_laplacian
from groupcons.simulate import Scenario, predict_limit, simulate, verify_prediction
from groupcons.spectral import eigenvalues, hurwitz_check, min_nonzero_real_part, zero_eig_count

from conftest import ACCEPTANCE_LINES

CORPUS_SIZE = 1000
MUTATIONS = 500
INFEASIBLE = 100


def _report(number, title, passed, detail):
    line = f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


_cache = {}


def corpus():
    if "corpus" not in _cache:
        _cache["corpus"] = [random_corpus_graph(seed) for seed in range(CORPUS_SIZE)]
    return _cache["corpus"]


def _osc_gain():
    dyn = oscillator()
    return dyn, gain(solve_riccati(dyn), dyn.B)


def test_criterion_1_riccati_gain():
    start = time.perf_counter()
    dyn = oscillator()
    K = gain(solve_riccati(dyn), dyn.B).ravel()
    elapsed = time.perf_counter() - start
    err = np.abs(K - [0.4142, 1.3522]).max()
    _report(1, "oscillator Riccati gain", err <= 1e-3 and elapsed < 1.0,
            f"K=[{K[0]:.6f}, {K[1]:.6f}], max error {err:.2e}, {elapsed:.3f} s")


def test_criterion_2_spectrum_split():
    start = time.perf_counter()
    graphs = corpus()
    worst, failures = 0.0, 0
    for g in graphs:
        assert g.n_agents <= 30
        split = reduced_laplacian(g, tol=np.inf).split
        worst = max(worst, split.max_pair_error)
        failures += split.max_pair_error > PAIRING_TOL
    elapsed = time.perf_counter() - start
    _report(2, "spectrum split on 1000 graphs", failures == 0 and elapsed < 120,
            f"worst pairing error {worst:.2e}, {failures} failures, {elapsed:.1f} s")


def test_criterion_3_zero_count_matches_forest_size():
    disagreements = 0
    for g in corpus():
        q = quotient_graph(g)
        disagreements += zero_eig_count(eigenvalues(laplacian(g))) != min_spanning_forest_size(g)
        disagreements += zero_eig_count(eigenvalues(q.laplacian)) != min_spanning_forest_size(q)
    _report(3, "zero eigenvalue count = minimum forest size", disagreements == 0,
            f"{disagreements} disagreements over {2 * CORPUS_SIZE} matrices")


def test_criterion_4_forest_equality_iff_cluster_trees():
    graphs = list(corpus())
    mutated, seed = [], 0
    while len(mutated) < MUTATIONS:
        try:
            mutated.append(delete_edges(graphs[seed % CORPUS_SIZE], seed))
        except GraphError:
            pass
        seed += 1
    disagreements, feasible = 0, 0
    for g in graphs + mutated:
        equal = min_spanning_forest_size(g) == min_spanning_forest_size(quotient_graph(g))
        trees = has_cluster_spanning_trees(g).holds
        disagreements += equal != trees
        feasible += trees
    total = len(graphs) + len(mutated)
    _report(4, "equal forest sizes <=> cluster spanning trees", disagreements == 0,
            f"{disagreements} disagreements over {total} graphs, {feasible} with cluster trees")


def test_criterion_5_surrogate_consensus_at_pattern_threshold():
    start = time.perf_counter()
    g = oscillator_surrogate()
    dyn, K = _osc_gain()
    th = coupling_thresholds(g)
    x0 = np.random.default_rng(5).standard_normal(2 * g.n_agents)
    traj = simulate(Scenario(g, dyn, th.delta_pattern, x0, t_final=200.0, dt=1e-3, K=K))
    elapsed = time.perf_counter() - start
    D = traj.final_disagreement
    _report(5, "surrogate group consensus at delta_pattern", D <= 1e-3 and elapsed < 30 and not traj.diverged,
            f"delta={th.delta_pattern:.6g}, D(200)={D:.2e}, {elapsed:.2f} s")


def test_criterion_6_limit_pattern():
    g = oscillator_surrogate()
    dyn, K = _osc_gain()
    th = coupling_thresholds(g)
    x0 = np.random.default_rng(6).standard_normal(2 * g.n_agents)
    traj = simulate(Scenario(g, dyn, th.delta_pattern, x0, t_final=200.0, dt=1e-3, K=K))
    pred = predict_limit(g, dyn, K, x0, th.delta_pattern)
    check = verify_prediction(traj, pred)

    rd = reach_decomposition(g)
    final = traj.states[-1]
    merge = max(
        np.linalg.norm(final[a] - final[b]) for part in rd.reach_agents for a in part for b in part
    )
    W = pred.convex_weights
    row_err = np.abs(W.sum(axis=1) - 1).max()

    g2 = g_toy2()
    W2 = predict_limit(g2, single_integrator(), [[1.0]], np.zeros(4)).convex_weights
    toy_err = np.abs(W2 - [[0.6, 0.4], [0.6, 0.4]]).max()

    passed = (
        check.passed
        and check.tail_max <= 1e-2
        and merge <= 1e-3
        and row_err <= 1e-8
        and W.min() >= -1e-10
        and toy_err <= 1e-9
    )
    _report(6, "predicted limit pattern", passed,
            f"tail deviation {check.tail_max:.2e}, exclusive-part spread {merge:.2e}, "
            f"row-sum error {row_err:.1e}, min weight {W.min():.3g}, toy weight error {toy_err:.1e}")


def test_criterion_7_necessity():
    dyn, K = _osc_gain()
    found, seed = 0, 0
    lowest_re, lowest_D, failures = np.inf, np.inf, 0
    while found < INFEASIBLE:
        h = infeasible_mutation(random_corpus_graph(seed), seed)
        seed += 1
        if h is None:
            continue
        found += 1
        spec = reduced_laplacian(h).split.reduced
        delta = 1.0 / (2.0 * min_nonzero_real_part(eigenvalues(laplacian(h))))
        _, margin = hurwitz_check(dyn.A, dyn.B, K, delta, spec)
        max_re = -margin
        x0 = np.random.default_rng([seed, 7]).standard_normal(2 * h.n_agents)
        traj = simulate(Scenario(h, dyn, delta, x0, t_final=200.0, dt=0.01, K=K))
        D_min = float(traj.disagreement.min())
        lowest_re = min(lowest_re, max_re)
        lowest_D = min(lowest_D, D_min)
        failures += not (max_re >= -1e-9 and D_min >= 1e-3)
    _report(7, "no group consensus without cluster trees", failures == 0,
            f"{found} infeasible graphs, {failures} failures, "
            f"smallest closed-loop max Re {lowest_re:.2e}, smallest D(t) {lowest_D:.3g}")


def test_criterion_8_weak_coupling():
    g = oscillator_surrogate()
    dyn, K = _osc_gain()
    th = coupling_thresholds(g)
    assert reach_decomposition(g).m >= 2
    x0 = np.random.default_rng(8).standard_normal(2 * g.n_agents)
    traj = simulate(Scenario(g, dyn, th.delta_group, x0, t_final=200.0, dt=1e-3, K=K))
    check = verify_prediction(traj, predict_limit(g, dyn, K, x0, th.delta_pattern))
    D = traj.final_disagreement
    passed = th.delta_group < th.delta_pattern and D <= 1e-3 and check.status == "not applicable"
    _report(8, "group consensus at delta_group, pattern check not applicable", passed,
            f"delta={th.delta_group:.6g} < {th.delta_pattern:.6g}, D(200)={D:.2e}, pattern check {check.status}")

