"""Ordering and clustering of surfaces by their dependence structure."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .chowliu import MiGraph, _UnionFind
from .independence import Verdict, VerdictMatrix


@dataclass(frozen=True)
class AdjacencyMatrix:
    order: list[str]
    cells: np.ndarray

    def __post_init__(self) -> None:
        cells = np.asarray(self.cells, dtype=bool)
        if cells.shape != (len(self.order), len(self.order)):
            raise ValueError("cells shape does not match order")
        if not np.array_equal(cells, cells.T):
            raise ValueError("adjacency matrix must be symmetric")
        cells = cells.copy()
        np.fill_diagonal(cells, False)
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_verdicts(cls, matrix: VerdictMatrix) -> AdjacencyMatrix:
        order = list(matrix.order)
        idx = {s: i for i, s in enumerate(order)}
        cells = np.zeros((len(order), len(order)), dtype=bool)
        for (a, b), v in matrix.verdicts.items():
            if v.verdict is Verdict.CORRELATED:
                cells[idx[a], idx[b]] = cells[idx[b], idx[a]] = True
        return cls(order, cells)

    @classmethod
    def from_edges(cls, order: Sequence[str], edges: Sequence[tuple[str, str]]) -> AdjacencyMatrix:
        idx = {s: i for i, s in enumerate(order)}
        cells = np.zeros((len(order), len(order)), dtype=bool)
        for a, b in edges:
            cells[idx[a], idx[b]] = cells[idx[b], idx[a]] = True
        return cls(list(order), cells)


def bandwidth(adj: AdjacencyMatrix, order: Sequence[str] | None = None) -> int:
    """Maximum |pos(u) - pos(v)| over edges under the given ordering."""
    order = list(adj.order if order is None else order)
    pos = {s: i for i, s in enumerate(order)}
    rows, cols = np.nonzero(np.triu(adj.cells, 1))
    if rows.size == 0:
        return 0
    return max(abs(pos[adj.order[i]] - pos[adj.order[j]]) for i, j in zip(rows, cols))


def cuthill_mckee_order(adj: AdjacencyMatrix) -> list[str]:
    """Cuthill-McKee ordering of the surfaces.

    Each connected component is traversed breadth-first from its minimum-degree
    vertex; neighbours are queued by increasing degree. Ties fall back to the
    input position. If the result would have a larger bandwidth than the input
    ordering, the input ordering is returned instead.
    """
    n = len(adj.order)
    if n == 0:
        return []
    degree = adj.cells.sum(axis=1)
    key = lambda i: (int(degree[i]), i)  # noqa: E731
    visited = np.zeros(n, dtype=bool)
    result: list[int] = []
    for start in sorted(range(n), key=key):
        if visited[start]:
            continue
        visited[start] = True
        queue = deque([start])
        while queue:
            u = queue.popleft()
            result.append(u)
            nbrs = [v for v in np.flatnonzero(adj.cells[u]) if not visited[v]]
            for v in sorted(nbrs, key=key):
                visited[v] = True
                queue.append(v)
    order = [adj.order[i] for i in result]
    if bandwidth(adj, order) > bandwidth(adj):
        return list(adj.order)
    return order


@dataclass(frozen=True)
class ClusterTree:
    """Single-linkage merge history.

    ``merges`` rows are (left id, right id, linkage MI, size); ids below
    ``len(leaves)`` are leaves, id ``len(leaves) + i`` is the cluster formed
    by merge ``i``.
    """

    leaves: list[str]
    merges: list[tuple[int, int, float, int]]

    def to_json(self) -> dict[str, Any]:
        n = len(self.leaves)
        nodes: dict[int, dict[str, Any]] = {i: {"name": s} for i, s in enumerate(self.leaves)}
        for i, (a, b, w, size) in enumerate(self.merges):
            nodes[n + i] = {"weight": w, "size": size, "children": [nodes.pop(a), nodes.pop(b)]}
        roots = [nodes[k] for k in sorted(nodes)]
        return roots[0] if len(roots) == 1 else {"weight": None, "children": roots}


@dataclass(frozen=True)
class Clustering:
    tree: ClusterTree
    clusters: list[list[str]]


def single_linkage_clusters(
    graph: MiGraph, num_clusters: int | None = None, mi_threshold: float | None = None
) -> Clustering:
    """Agglomerative single-linkage clustering with MI as the similarity.

    Clusters merge in order of the strongest reliable MI edge between them.
    Surfaces left disconnected are joined at linkage 0 so the tree is
    complete. Cutting at ``mi_threshold`` keeps merges with linkage >= the
    threshold; ``num_clusters`` keeps the first ``len(leaves) - num_clusters``.
    """
    if num_clusters is not None and mi_threshold is not None:
        raise ValueError("give num_clusters or mi_threshold, not both")
    leaves = sorted(graph.nodes)
    if not leaves:
        raise ValueError("graph has no surfaces")
    n = len(leaves)
    if num_clusters is not None and not 1 <= num_clusters <= n:
        raise ValueError(f"num_clusters must lie in [1, {n}]")
    if mi_threshold is not None and mi_threshold <= 0.0:
        raise ValueError("mi_threshold must be positive")

    weighted = sorted(
        ((graph.weight(a, b), (a, b)) for (a, b), est in graph.edges.items() if est.reliable),
        key=lambda t: (-t[0], t[1]),
    )
    uf = _UnionFind(leaves)
    cluster_id = {s: i for i, s in enumerate(leaves)}
    size = {s: 1 for s in leaves}
    merges: list[tuple[int, int, float, int]] = []

    def merge(a: str, b: str, w: float) -> None:
        ra, rb = uf.find(a), uf.find(b)
        ia, ib = sorted((cluster_id[ra], cluster_id[rb]))
        total = size[ra] + size[rb]
        uf.union(ra, rb)
        root = uf.find(ra)
        cluster_id[root] = n + len(merges)
        size[root] = total
        merges.append((ia, ib, float(w), total))

    for w, (a, b) in weighted:
        if uf.find(a) != uf.find(b):
            merge(a, b, w)
    roots = sorted({uf.find(s) for s in leaves})
    for other in roots[1:]:
        merge(roots[0], other, 0.0)

    if mi_threshold is not None:
        keep = sum(1 for m in merges if m[2] >= mi_threshold)
    elif num_clusters is not None:
        keep = n - num_clusters
    else:
        keep = len(merges)
    clusters = _flat_clusters(leaves, merges[:keep])
    return Clustering(ClusterTree(leaves, merges), clusters)


def _flat_clusters(leaves: list[str], merges: Sequence[tuple[int, int, float, int]]) -> list[list[str]]:
    n = len(leaves)
    members: dict[int, list[str]] = {i: [s] for i, s in enumerate(leaves)}
    for i, (a, b, _, _) in enumerate(merges):
        members[n + i] = members.pop(a) + members.pop(b)
    return sorted(sorted(m) for m in members.values())
