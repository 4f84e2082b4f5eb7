"""Transversal reduced Laplacian, its similarity certificate, and reach blocks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import AssumptionError, DecompositionError, SpectrumSplitError
from .graph import ClusteredDigraph, condensation, laplacian, reachable_set
from .quotient import QuotientGraph, check_common_influence, quotient_graph
from .spectral import Spectrum, eigenvalues, match_multisets

__all__ = [
    "SpectrumSplit",
    "ReductionReport",
    "SimilarityDecomposition",
    "ReachDecomposition",
    "reduced_laplacian",
    "similarity_decomposition",
    "reach_decomposition",
    "PAIRING_TOL",
]

PAIRING_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class SpectrumSplit:
    ok: bool
    max_pair_error: float
    full: Spectrum
    quotient: Spectrum
    reduced: Spectrum


@dataclass(frozen=True, eq=False)
class ReductionReport:
    """``lhat`` is the (L-N)x(L-N) matrix driving intra-cluster disagreement.

    ``gamma[i][j]`` is the vector of first-row entries of block ``L_ij``
    beyond its first column (length ``l_j - 1``).
    """

    lhat: np.ndarray
    gamma: list[list[np.ndarray]]
    split: SpectrumSplit


def _require_eep(g: ClusteredDigraph) -> None:
    report = check_common_influence(g)
    if not report.holds:
        blocks = ", ".join(f"({i + 1},{j + 1})" for (i, j) in (v.block for v in report.violations))
        raise AssumptionError(f"clustering is not an external equitable partition; blocks {blocks}")


def _reduced_blocks(g: ClusteredDigraph) -> tuple[np.ndarray, list[list[np.ndarray]]]:
    lap = laplacian(g)
    offs, sizes = g.offsets, g.sizes
    dim = g.n_agents - g.n_clusters
    lhat = np.zeros((dim, dim))
    red_offs = np.concatenate([[0], np.cumsum([s - 1 for s in sizes])]).astype(int)
    gamma = []
    for i in range(g.n_clusters):
        head = offs[i]
        rest_i = slice(head + 1, head + sizes[i])
        row = []
        for j in range(g.n_clusters):
            rest_j = slice(offs[j] + 1, offs[j] + sizes[j])
            gam = lap[head, rest_j]
            row.append(gam.copy())
            tilde = lap[rest_i, rest_j]
            lhat[red_offs[i] : red_offs[i + 1], red_offs[j] : red_offs[j + 1]] = tilde - gam[None, :]
        gamma.append(row)
    return lhat, gamma


def reduced_laplacian(g: ClusteredDigraph, tol: float = PAIRING_TOL) -> ReductionReport:
    """Build the reduced matrix and certify that sigma(L) = sigma(L_G) + sigma(Lhat).

    Raises ``AssumptionError`` when the clustering is not equitable and
    ``SpectrumSplitError`` when the eigenvalue multisets fail to pair.
    """
    _require_eep(g)
    lhat, gamma = _reduced_blocks(g)
    full = eigenvalues(laplacian(g))
    quot = eigenvalues(quotient_graph(g).laplacian)
    red = eigenvalues(lhat)
    ok, err = match_multisets(full.values, np.concatenate([quot.values, red.values]), tol)
    if not ok:
        raise SpectrumSplitError(f"spectrum split failed: largest pairing error {err:.3g} > {tol:g}")
    lhat.setflags(write=False)
    return ReductionReport(lhat, gamma, SpectrumSplit(ok, err, full, quot, red))


@dataclass(frozen=True, eq=False)
class SimilarityDecomposition:
    S: np.ndarray
    permutation: np.ndarray
    transformed: np.ndarray
    quotient_block: np.ndarray
    coupling_block: np.ndarray
    lower_block: np.ndarray
    reduced_block: np.ndarray


def similarity_decomposition(g: ClusteredDigraph) -> SimilarityDecomposition:
    """Constructive change of basis exposing L_G and Lhat as diagonal blocks.

    Forms ``S^-1 L S`` with ``S = blockdiag(S_i)``, moves each cluster's first
    row/column to the front, and checks the result against ``L_G``, the gamma
    coupling block, a zero lower-left block, and ``Lhat`` from
    ``reduced_laplacian``.
    """
    _require_eep(g)
    lap = laplacian(g)
    blocks = []
    for s in g.sizes:
        Si = np.eye(s)
        Si[1:, 0] = 1.0
        blocks.append(Si)
    S = scipy.linalg.block_diag(*blocks)
    Sinv = 2 * np.eye(g.n_agents) - S
    transformed = Sinv @ lap @ S
    heads = list(g.offsets)
    tails = [k for k in range(g.n_agents) if k not in set(heads)]
    perm = np.array(heads + tails, dtype=int)
    P = transformed[np.ix_(perm, perm)]
    N = g.n_clusters

    lhat, gamma = _reduced_blocks(g)
    expected_top = np.hstack([check_common_influence(g).beta, _gamma_matrix(g, gamma)])
    scale = 1e-10 * max(1.0, float(np.abs(lap).sum(axis=1).max()))
    checks = {
        "quotient/coupling rows": np.abs(P[:N] - expected_top),
        "lower-left block": np.abs(P[N:, :N]),
        "reduced block": np.abs(P[N:, N:] - lhat),
    }
    for name, err in checks.items():
        if err.size and err.max() > scale:
            raise DecompositionError(f"{name} differs by {err.max():.3g}")
    return SimilarityDecomposition(
        S=S,
        permutation=perm,
        transformed=P,
        quotient_block=P[:N, :N],
        coupling_block=P[:N, N:],
        lower_block=P[N:, :N],
        reduced_block=P[N:, N:],
    )


def _gamma_matrix(g: ClusteredDigraph, gamma) -> np.ndarray:
    return np.vstack([np.concatenate(row) if row else np.zeros(0) for row in gamma]).reshape(
        g.n_clusters, g.n_agents - g.n_clusters
    )


@dataclass(frozen=True, eq=False)
class ReachDecomposition:
    """Reaches of the quotient graph and the matching Laplacian blocks.

    Cluster indices are 0-based.  ``agent_order`` lists internal agent
    indices so that ``L[agent_order][:, agent_order]`` equals
    ``[[L_R, 0], [L_FR, L_F]]``.
    """

    reaches: tuple[frozenset[int], ...]
    exclusive: tuple[tuple[int, ...], ...]
    common: tuple[int, ...]
    cluster_order: tuple[int, ...]
    agent_order: np.ndarray
    reach_agents: tuple[tuple[int, ...], ...]
    common_agents: tuple[int, ...]
    blocks: tuple[np.ndarray, ...]
    L_R: np.ndarray
    L_FR: np.ndarray
    L_F: np.ndarray

    @property
    def m(self) -> int:
        return len(self.reaches)


def reach_decomposition(g: ClusteredDigraph, q: QuotientGraph | None = None) -> ReachDecomposition:
    q = quotient_graph(g) if q is None else q
    cond = condensation(q)
    roots = sorted(cond.sources(), key=lambda c: cond.components[c][0])
    reaches = []
    for c in roots:
        reach = frozenset().union(*(reachable_set(q, v) for v in cond.components[c]))
        reaches.append(reach)
    exclusive = []
    for p, reach in enumerate(reaches):
        others = frozenset().union(*(r for k, r in enumerate(reaches) if k != p))
        exclusive.append(tuple(sorted(reach - others)))
    common = tuple(sorted(frozenset().union(*reaches) - frozenset().union(*map(set, exclusive))))

    clusters = g.clusters
    reach_agents = tuple(tuple(a for i in v for a in clusters[i]) for v in exclusive)
    common_agents = tuple(a for i in common for a in clusters[i])
    agent_order = np.array([a for part in reach_agents for a in part] + list(common_agents), dtype=int)

    lap = laplacian(g)
    blocks = tuple(lap[np.ix_(part, part)] for part in reach_agents)
    r = sum(len(p) for p in reach_agents)
    permuted = lap[np.ix_(agent_order, agent_order)]
    return ReachDecomposition(
        reaches=tuple(reaches),
        exclusive=tuple(exclusive),
        common=common,
        cluster_order=tuple(i for v in exclusive for i in v) + common,
        agent_order=agent_order,
        reach_agents=reach_agents,
        common_agents=common_agents,
        blocks=blocks,
        L_R=permuted[:r, :r],
        L_FR=permuted[r:, :r],
        L_F=permuted[r:, r:],
    )
