"""Inter-cluster common influence check and the induced quotient graph."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import ClusteredDigraph, laplacian, laplacian_of

__all__ = [
    "EEPViolation",
    "EEPReport",
    "QuotientGraph",
    "block_row_sums",
    "check_common_influence",
    "quotient_graph",
    "quotient_laplacian",
]


@dataclass(frozen=True)
class EEPViolation:
    block: tuple[int, int]
    rows: tuple[int, ...]
    spread: float


@dataclass(frozen=True, eq=False)
class EEPReport:
    """Result of the external-equitable-partition test.

    ``beta[i, j]`` is the mean row sum of Laplacian block ``(i, j)``.
    ``violations`` lists blocks whose row sums differ, with the rows that
    deviate from the block mean and the max-minus-min spread.
    """

    holds: bool
    beta: np.ndarray
    tolerance: float
    violations: tuple[EEPViolation, ...] = field(default=())


def block_row_sums(g: ClusteredDigraph) -> list[list[np.ndarray]]:
    """Row sums of every Laplacian block ``L_ij``, as nested lists of vectors."""
    lap = laplacian(g)
    out = []
    for ci in g.clusters:
        rows = lap[ci.start : ci.stop]
        out.append([rows[:, cj.start : cj.stop].sum(axis=1) for cj in g.clusters])
    return out


def check_common_influence(g: ClusteredDigraph) -> EEPReport:
    sums = block_row_sums(g)
    n = g.n_clusters
    scale = max(float(np.abs(s).max()) for row in sums for s in row)
    tol = 1e-9 * (1.0 + scale)
    beta = np.empty((n, n))
    violations = []
    for i in range(n):
        for j in range(n):
            s = sums[i][j]
            mean = float(s.mean())
            beta[i, j] = mean
            off = np.flatnonzero(np.abs(s - mean) > tol)
            if off.size:
                rows = tuple(int(g.offsets[i] + r) for r in off)
                violations.append(EEPViolation((i, j), rows, float(s.max() - s.min())))
    beta.setflags(write=False)
    return EEPReport(not violations, beta, tol, tuple(violations))


@dataclass(frozen=True, eq=False)
class QuotientGraph:
    """Cluster-level digraph; ``weights[i, j]`` is the averaged weight from cluster j to i."""

    weights: np.ndarray
    laplacian: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]


def quotient_graph(g: ClusteredDigraph) -> QuotientGraph:
    n = g.n_clusters
    alpha = np.zeros((n, n))
    for i, ci in enumerate(g.clusters):
        rows = g.weights[ci.start : ci.stop]
        for j, cj in enumerate(g.clusters):
            if i != j:
                alpha[i, j] = rows[:, cj.start : cj.stop].sum() / len(ci)
    lap = laplacian_of(alpha)
    alpha.setflags(write=False)
    lap.setflags(write=False)
    return QuotientGraph(alpha, lap)


def quotient_laplacian(q: QuotientGraph) -> np.ndarray:
    return q.laplacian
