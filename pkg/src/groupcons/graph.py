"""Clustered weighted digraphs, Laplacians and exact connectivity algorithms.

Edge convention: ``weights[l, k] > 0`` means agent ``l`` listens to agent
``k``, i.e. information flows along the directed edge ``k -> l``.  All path,
tree and reachability notions follow that flow direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import GraphError

__all__ = [
    "ClusteredDigraph",
    "Condensation",
    "ClusterTreeReport",
    "build_graph",
    "laplacian",
    "laplacian_of",
    "reachable_set",
    "ancestors",
    "condensation",
    "min_spanning_forest_size",
    "has_cluster_spanning_trees",
    "is_weakly_connected",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ClusteredDigraph:
    """Weighted digraph whose agents are laid out contiguously by cluster.

    ``weights`` is stored in the contiguous layout (cluster 0 first, then
    cluster 1, ...).  ``original_ids[i]`` is the caller's id for internal
    agent ``i``.
    """

    weights: np.ndarray
    sizes: tuple[int, ...]
    original_ids: tuple[int, ...] = field(default=())

    def __post_init__(self):
        w = _frozen(self.weights)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        if not self.original_ids:
            object.__setattr__(self, "original_ids", tuple(range(w.shape[0])))
        _validate(w, self.sizes, self.original_ids)

    @property
    def n_agents(self) -> int:
        return self.weights.shape[0]

    @property
    def n_clusters(self) -> int:
        return len(self.sizes)

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.sizes)[:-1]]))

    @property
    def clusters(self) -> list[range]:
        return [range(o, o + s) for o, s in zip(self.offsets, self.sizes)]

    @property
    def cluster_of(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_clusters), self.sizes)

    def edges(self) -> list[tuple[int, int, float]]:
        """Edges as ``(source, target, weight)`` in internal indices."""
        targets, sources = np.nonzero(self.weights)
        return [(int(k), int(l), float(self.weights[l, k])) for l, k in zip(targets, sources)]

    def with_weights(self, weights: np.ndarray) -> "ClusteredDigraph":
        return ClusteredDigraph(weights, self.sizes, self.original_ids)

    def to_original(self, values: np.ndarray, axis: int = 0) -> np.ndarray:
        """Reorder per-agent data from internal layout to ascending original ids."""
        order = np.argsort(self.original_ids)
        return np.take(values, order, axis=axis)

    def __repr__(self):
        return f"ClusteredDigraph(n_agents={self.n_agents}, sizes={self.sizes})"


def _validate(w: np.ndarray, sizes: Sequence[int], ids: Sequence[int]) -> None:
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] == 0:
        raise GraphError(f"weights must be a nonempty square matrix, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise GraphError("weights must be finite")
    if np.any(w < 0):
        raise GraphError("weights must be nonnegative")
    if np.any(np.diag(w) != 0):
        raise GraphError("self-loops are not allowed")
    if any(s < 1 for s in sizes) or sum(sizes) != w.shape[0]:
        raise GraphError(f"cluster sizes {tuple(sizes)} do not partition {w.shape[0]} agents")
    if len(ids) != w.shape[0] or len(set(ids)) != len(ids):
        raise GraphError("original_ids must be distinct, one per agent")
    if not is_weakly_connected(w):
        raise GraphError("graph is not weakly connected")


def build_graph(
    n_agents: int,
    clusters: Sequence[Iterable[int]],
    edges: Iterable[tuple[int, int, float]],
) -> ClusteredDigraph:
    """Validate a clustered digraph given in the caller's own agent ids.

    Agent ids are ``0 .. n_agents-1``; ``edges`` holds ``(source, target,
    weight)`` triples.  Agents are relabeled so that each cluster occupies a
    contiguous index range, in the order the clusters are listed; the
    returned graph's ``original_ids`` maps back.
    """
    if n_agents < 1:
        raise GraphError("agent count must be positive")
    clusters = [list(c) for c in clusters]
    seen: set[int] = set()
    for i, c in enumerate(clusters):
        if not c:
            raise GraphError(f"cluster {i} is empty")
        for a in c:
            if not 0 <= a < n_agents:
                raise GraphError(f"cluster {i} references unknown agent {a}")
            if a in seen:
                raise GraphError(f"agent {a} appears in more than one cluster")
            seen.add(a)
    if len(seen) != n_agents:
        missing = sorted(set(range(n_agents)) - seen)
        raise GraphError(f"agents {missing} belong to no cluster")

    order = [a for c in clusters for a in c]
    position = {a: i for i, a in enumerate(order)}
    w = np.zeros((n_agents, n_agents))
    for src, dst, weight in edges:
        for a in (src, dst):
            if not 0 <= a < n_agents:
                raise GraphError(f"edge references unknown agent {a}")
        if src == dst:
            raise GraphError(f"self-loop on agent {src}")
        if not weight > 0:
            raise GraphError(f"edge {src}->{dst} has nonpositive weight {weight}")
        l, k = position[dst], position[src]
        if w[l, k] != 0:
            raise GraphError(f"duplicate edge {src}->{dst}")
        w[l, k] = float(weight)
    return ClusteredDigraph(w, tuple(len(c) for c in clusters), tuple(order))


def laplacian_of(weights: np.ndarray) -> np.ndarray:
    """Laplacian with diagonal set to the negated off-diagonal row sum."""
    lap = -np.asarray(weights, dtype=float)
    np.fill_diagonal(lap, 0.0)
    np.fill_diagonal(lap, -lap.sum(axis=1))
    return lap + 0.0  # drop negative zeros


def laplacian(g: ClusteredDigraph) -> np.ndarray:
    return laplacian_of(g.weights)


def _weights(obj) -> np.ndarray:
    return np.asarray(getattr(obj, "weights", obj))


def _successors(w: np.ndarray) -> list[list[int]]:
    # column k of w lists the agents that listen to k
    return [np.flatnonzero(w[:, k]).tolist() for k in range(w.shape[0])]


def _search(adj: list[list[int]], starts: Iterable[int]) -> frozenset[int]:
    seen = set(starts)
    stack = list(seen)
    while stack:
        v = stack.pop()
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return frozenset(seen)


def _check_node(w: np.ndarray, node: int) -> None:
    if not 0 <= node < w.shape[0]:
        raise GraphError(f"node {node} out of range 0..{w.shape[0] - 1}")


def reachable_set(g, node: int) -> frozenset[int]:
    """``node`` together with every node reachable from it along directed paths."""
    w = _weights(g)
    _check_node(w, node)
    return _search(_successors(w), [node])


def ancestors(g, node: int) -> frozenset[int]:
    """``node`` together with every node that has a directed path to it."""
    w = _weights(g)
    _check_node(w, node)
    preds = [np.flatnonzero(w[l, :]).tolist() for l in range(w.shape[0])]
    return _search(preds, [node])


def is_weakly_connected(weights) -> bool:
    w = _weights(weights)
    sym = (w > 0) | (w.T > 0)
    adj = [np.flatnonzero(row).tolist() for row in sym]
    return len(_search(adj, [0])) == w.shape[0]


@dataclass(frozen=True)
class Condensation:
    """DAG of strongly connected components.

    ``components`` are sorted tuples of node indices, ordered by their
    smallest member; ``edges`` holds ``(source_component, target_component)``.
    """

    components: tuple[tuple[int, ...], ...]
    component_of: tuple[int, ...]
    edges: frozenset[tuple[int, int]]

    def sources(self) -> list[int]:
        """Components with no incoming edge from another component."""
        has_in = {dst for _, dst in self.edges}
        return [c for c in range(len(self.components)) if c not in has_in]


def _tarjan(adj: list[list[int]]) -> list[list[int]]:
    # iterative, to stay clear of the recursion limit on long chains
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, i = work.pop()
            if i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            recurse = False
            for j in range(i, len(adj[v])):
                u = adj[v][j]
                if index[u] == -1:
                    work.append((v, j + 1))
                    work.append((u, 0))
                    recurse = True
                    break
                if on_stack[u]:
                    low[v] = min(low[v], index[u])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    u = stack.pop()
                    on_stack[u] = False
                    comp.append(u)
                    if u == v:
                        break
                comps.append(comp)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return comps


def condensation(g) -> Condensation:
    w = _weights(g)
    comps = sorted((tuple(sorted(c)) for c in _tarjan(_successors(w))), key=lambda c: c[0])
    comp_of = [0] * w.shape[0]
    for ci, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = ci
    targets, sources = np.nonzero(w)
    edges = frozenset(
        (comp_of[k], comp_of[l]) for l, k in zip(targets, sources) if comp_of[k] != comp_of[l]
    )
    return Condensation(tuple(comps), tuple(comp_of), edges)


def min_spanning_forest_size(g) -> int:
    """Minimum number of directed trees that together span the graph.

    Equal to the number of source components of the condensation: each
    source component needs its own root, and one root per source suffices.
    """
    return len(condensation(g).sources())


class ClusterTreeReport(NamedTuple):
    holds: bool
    roots: tuple[int | None, ...]


def has_cluster_spanning_trees(g: ClusteredDigraph) -> ClusterTreeReport:
    """Check that every cluster is reachable in full from some single node.

    Returns the smallest such root per cluster, or ``None`` where no node
    reaches the whole cluster.
    """
    roots = []
    for members in g.clusters:
        common = None
        for u in members:
            anc = ancestors(g, u)
            common = anc if common is None else common & anc
            if not common:
                break
        roots.append(min(common) if common else None)
    return ClusterTreeReport(all(r is not None for r in roots), tuple(roots))
