"""Seeded random equitable-partition graphs, EEP-preserving mutations and named instances."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import GraphError
from .graph import ClusteredDigraph, build_graph, has_cluster_spanning_trees, is_weakly_connected

__all__ = [
    "random_eep_graph",
    "random_corpus_graph",
    "delete_edges",
    "infeasible_mutation",
    "g_toy",
    "g_toy2",
    "oscillator_surrogate",
]


def random_eep_graph(
    cluster_sizes: Sequence[int],
    intra_density: float = 0.5,
    inter_density: float = 0.4,
    weight_range: tuple[float, float] = (0.1, 1.0),
    seed: int = 0,
    max_tries: int = 1000,
) -> ClusteredDigraph:
    """Random weakly connected digraph for which the clustering is equitable.

    Quotient weights ``alpha[i, j]`` are drawn first; every agent of cluster
    i then receives edges from a random nonempty subset of cluster j whose
    weights add up to ``alpha[i, j]``.  Intra-cluster edges are independent
    coin flips.  Samples that are not weakly connected are redrawn.
    """
    sizes = [int(s) for s in cluster_sizes]
    if not sizes or any(s < 1 for s in sizes):
        raise GraphError(f"cluster sizes must be >= 1, got {list(cluster_sizes)}")
    for name, d in (("intra_density", intra_density), ("inter_density", inter_density)):
        if not 0 < d <= 1:
            raise GraphError(f"{name} must lie in (0, 1], got {d}")
    lo, hi = weight_range
    if not 0 < lo <= hi:
        raise GraphError(f"invalid weight range {weight_range}")

    rng = np.random.default_rng(seed)
    n = sum(sizes)
    offs = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    members = [np.arange(o, o + s) for o, s in zip(offs, sizes)]
    for _ in range(max_tries):
        w = np.zeros((n, n))
        for i, ci in enumerate(members):
            for j, cj in enumerate(members):
                if i == j or rng.random() >= inter_density:
                    continue
                alpha = rng.uniform(lo, hi)
                for l in ci:
                    k = rng.integers(1, len(cj) + 1)
                    src = rng.choice(cj, size=k, replace=False)
                    share = rng.uniform(0.2, 1.0, size=k)
                    w[l, src] = alpha * share / share.sum()
            for l in ci:
                for k in ci:
                    if l != k and rng.random() < intra_density:
                        w[l, k] = rng.uniform(lo, hi)
        if is_weakly_connected(w):
            return ClusteredDigraph(w, tuple(sizes))
    raise GraphError(f"no weakly connected sample in {max_tries} tries")


def random_corpus_graph(seed: int, max_agents: int = 30) -> ClusteredDigraph:
    """Graph with randomly drawn shape and densities, fully determined by ``seed``."""
    rng = np.random.default_rng([seed, 0xC0])
    n_clusters = int(rng.integers(1, 7))
    sizes = rng.integers(1, 6, size=n_clusters)
    while sizes.sum() > max_agents:
        sizes[np.argmax(sizes)] -= 1
    return random_eep_graph(
        sizes,
        intra_density=float(rng.uniform(0.1, 0.7)),
        inter_density=float(rng.uniform(0.1, 0.7)),
        seed=seed,
    )


def delete_edges(g: ClusteredDigraph, seed: int, max_tries: int = 100) -> ClusteredDigraph:
    """Delete edges without breaking the equitable partition.

    Removes a random subset of intra-cluster edges and, with probability
    0.3, one whole inter-cluster block (all edges from cluster j into
    cluster i).  Both moves keep every block row sum constant.
    """
    rng = np.random.default_rng([seed, 0xDE])
    cluster_of = g.cluster_of
    intra = [(l, k) for (k, l, _) in g.edges() if cluster_of[k] == cluster_of[l]]
    blocks = sorted({(cluster_of[l], cluster_of[k]) for (k, l, _) in g.edges() if cluster_of[k] != cluster_of[l]})
    for _ in range(max_tries):
        w = g.weights.copy()
        if intra:
            count = int(rng.integers(1, len(intra) + 1))
            for idx in rng.choice(len(intra), size=count, replace=False):
                w[intra[idx]] = 0.0
        if blocks and rng.random() < 0.3:
            i, j = blocks[int(rng.integers(len(blocks)))]
            ci, cj = g.clusters[i], g.clusters[j]
            w[ci.start : ci.stop, cj.start : cj.stop] = 0.0
        if is_weakly_connected(w) and not np.array_equal(w, g.weights):
            return g.with_weights(w)
    raise GraphError("could not delete edges while keeping weak connectivity")


def infeasible_mutation(g: ClusteredDigraph, seed: int, max_tries: int = 50) -> ClusteredDigraph | None:
    """EEP-preserving deletion of intra-cluster edges that destroys cluster spanning trees.

    Strips all intra-cluster edges from a randomly chosen non-singleton
    cluster.  Returns ``None`` if no attempt yields a weakly connected graph
    without cluster spanning trees.
    """
    rng = np.random.default_rng([seed, 0x1F])
    candidates = [i for i, s in enumerate(g.sizes) if s > 1]
    if not candidates:
        return None
    for _ in range(max_tries):
        w = g.weights.copy()
        for i in rng.permutation(candidates)[: int(rng.integers(1, len(candidates) + 1))]:
            c = g.clusters[i]
            w[c.start : c.stop, c.start : c.stop] = 0.0
        if not is_weakly_connected(w):
            continue
        h = g.with_weights(w)
        if not has_cluster_spanning_trees(h).holds:
            return h
    return None


def g_toy() -> ClusteredDigraph:
    """Two 2-agent clusters; cluster 1 drives cluster 2 with weight 0.5 per agent."""
    return build_graph(
        4,
        [[0, 1], [2, 3]],
        [(1, 0, 1.0), (0, 1, 1.0), (3, 2, 1.0), (2, 3, 1.0), (0, 2, 0.5), (1, 3, 0.5)],
    )


def g_toy2() -> ClusteredDigraph:
    """Two singleton sources feeding a 2-agent cluster (two reaches, one common part)."""
    return build_graph(
        4,
        [[0], [1], [2, 3]],
        [(0, 2, 0.3), (0, 3, 0.3), (1, 2, 0.2), (1, 3, 0.2), (2, 3, 1.0), (3, 2, 1.0)],
    )


def oscillator_surrogate() -> ClusteredDigraph:
    """Ten agents in five pairs, intra weights 1, inter weights 0.1.

    Clusters 1 and 2 drive each other and jointly drive cluster 4; cluster 3
    is an isolated source; cluster 5 listens to clusters 4 and 3.  This gives
    two reaches with exclusive parts {1, 2, 4} and {3} and common part {5}.
    """
    intra = [(0, 1), (1, 0), (2, 3), (4, 5), (5, 4), (6, 7), (9, 8)]
    inter = [
        (0, 2), (1, 3),  # C1 -> C2
        (2, 0), (3, 1),  # C2 -> C1
        (0, 7), (1, 6),  # C1 -> C4
        (2, 6), (3, 7),  # C2 -> C4
        (6, 8), (7, 9),  # C4 -> C5
        (4, 8), (5, 9),  # C3 -> C5
    ]
    edges = [(s, t, 1.0) for s, t in intra] + [(s, t, 0.1) for s, t in inter]
    return build_graph(10, [[0, 1], [2, 3], [4, 5], [6, 7], [8, 9]], edges)
