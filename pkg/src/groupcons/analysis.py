"""Feasibility verdicts and the aggregated analysis report."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .control import Dynamics, coupling_thresholds, gain, solve_riccati
from .errors import GroupConsensusError
from .graph import ClusterTreeReport, ClusteredDigraph, has_cluster_spanning_trees, laplacian, min_spanning_forest_size
from .quotient import EEPReport, check_common_influence, quotient_graph
from .reduction import reach_decomposition, reduced_laplacian
from .simulate import predict_limit
from .spectral import eigenvalues, zero_eig_count

__all__ = ["Verdict", "group_consensus_verdict", "analyze", "round_sig"]


@dataclass(frozen=True, eq=False)
class Verdict:
    """Group-consensus feasibility from both graph criteria.

    ``feasible`` requires an equitable clustering and equal minimum
    spanning-forest sizes for the graph and its quotient.  The
    cluster-spanning-tree test must agree; ``internal_error`` records any
    disagreement.  Spectral zero counts are advisory and only raise
    ``numerical_warning``.
    """

    eep: EEPReport
    m_graph: int
    m_quotient: int
    spectral_zeros_graph: int
    spectral_zeros_quotient: int
    cluster_trees: ClusterTreeReport
    feasible: bool
    internal_error: bool
    numerical_warning: bool


def group_consensus_verdict(g: ClusteredDigraph) -> Verdict:
    eep = check_common_influence(g)
    q = quotient_graph(g)
    m_g = min_spanning_forest_size(g)
    m_q = min_spanning_forest_size(q)
    z_g = zero_eig_count(eigenvalues(laplacian(g)))
    z_q = zero_eig_count(eigenvalues(q.laplacian))
    trees = has_cluster_spanning_trees(g)
    feasible = eep.holds and m_g == m_q
    internal_error = eep.holds and (m_g == m_q) != trees.holds
    return Verdict(
        eep=eep,
        m_graph=m_g,
        m_quotient=m_q,
        spectral_zeros_graph=z_g,
        spectral_zeros_quotient=z_q,
        cluster_trees=trees,
        feasible=feasible,
        internal_error=internal_error,
        numerical_warning=(z_g != m_g) or (z_q != m_q),
    )


def round_sig(x, digits: int = 12):
    """Round floats (recursively through lists/dicts) to ``digits`` significant digits."""
    if isinstance(x, dict):
        return {k: round_sig(v, digits) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [round_sig(v, digits) for v in x]
    if isinstance(x, np.ndarray):
        return round_sig(x.tolist(), digits)
    if x is None:
        return None
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        if not np.isfinite(x):
            return str(float(x))
        return float(f"{float(x):.{digits}g}") + 0.0
    if isinstance(x, complex):
        return [round_sig(x.real, digits), round_sig(x.imag, digits)]
    return x


def _spectrum_list(spec):
    return [[float(v.real), float(v.imag)] for v in spec.values]


def analyze(g: ClusteredDigraph, dyn: Dynamics) -> dict:
    """Full analysis as an ordered, JSON-ready dict (agents and clusters numbered from 1)."""
    verdict = group_consensus_verdict(g)
    label = [i + 1 for i in g.original_ids]
    q = quotient_graph(g)
    P = solve_riccati(dyn)
    K = gain(P, dyn.B)

    report: dict = {
        "agents": g.n_agents,
        "clusters": [[label[a] for a in c] for c in g.clusters],
        "eep": {
            "holds": verdict.eep.holds,
            "tolerance": verdict.eep.tolerance,
            "beta": verdict.eep.beta,
            "violations": [
                {"block": [i + 1, j + 1], "rows": [label[r] for r in v.rows], "spread": v.spread}
                for v in verdict.eep.violations
                for (i, j) in [v.block]
            ],
        },
        "quotient_weights": q.weights,
        "m_graph": verdict.m_graph,
        "m_quotient": verdict.m_quotient,
        "spectral_zero_count_graph": verdict.spectral_zeros_graph,
        "spectral_zero_count_quotient": verdict.spectral_zeros_quotient,
        "cluster_spanning_trees": {
            "holds": verdict.cluster_trees.holds,
            "roots": [None if r is None else label[r] for r in verdict.cluster_trees.roots],
        },
        "feasible": verdict.feasible,
        "internal_error": verdict.internal_error,
        "numerical_warning": verdict.numerical_warning,
        "spectrum_L": _spectrum_list(eigenvalues(laplacian(g))),
        "spectrum_LG": _spectrum_list(eigenvalues(q.laplacian)),
        "spectrum_Lhat": None,
        "spectrum_split_error": None,
        "P": P,
        "K": K,
        "delta_group": None,
        "delta_pattern": None,
        "reach_decomposition": None,
        "convex_weights": None,
    }
    if verdict.eep.holds:
        red = reduced_laplacian(g)
        report["spectrum_Lhat"] = _spectrum_list(red.split.reduced)
        report["spectrum_split_error"] = red.split.max_pair_error
        rd = reach_decomposition(g, q)
        report["reach_decomposition"] = {
            "m": rd.m,
            "reaches": [sorted(i + 1 for i in r) for r in rd.reaches],
            "exclusive": [[i + 1 for i in v] for v in rd.exclusive],
            "common": [i + 1 for i in rd.common],
        }
    if verdict.feasible:
        th = coupling_thresholds(g)
        report["delta_group"] = th.delta_group
        report["delta_pattern"] = th.delta_pattern
        try:
            pred = predict_limit(g, dyn, K, np.zeros(g.n_agents * dyn.n), th.delta_pattern)
            report["convex_weights"] = pred.convex_weights
        except GroupConsensusError:
            pass
    return round_sig(report)


def format_text(report: dict) -> str:
    """Plain-text rendering with one ``key: value`` line per top-level field."""
    lines = []
    for key, value in report.items():
        if isinstance(value, dict):
            lines.append(f"{key}:")
            for k, v in value.items():
                lines.append(f"  {k}: {_fmt(v)}")
        else:
            lines.append(f"{key}: {_fmt(value)}")
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if v is None:
        return "n/a"
    return str(v)
