"""Joint-entropy upper bounds from a graph of pairwise mutual information.

A :class:`MiGraph` holds per-surface entropy estimates (nodes) and pairwise
MI estimates (edges). For any subset of surfaces the joint entropy is at most
the sum of marginal entropies minus the MI carried by the edges of any
spanning forest over the subset; the maximum-weight forest gives the tightest
such bound.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .estimation import (
    MI_SAMPLE_FLOOR,
    EntropyEstimate,
    MiEstimate,
    build_distribution,
    build_joint,
    entropy_confidence_interval,
    mi_estimate,
)

log = logging.getLogger(__name__)

Pair = tuple[str, str]


class GraphError(ValueError):
    pass


class ChainBrokenError(GraphError):
    pass


def pair_key(a: str, b: str) -> Pair:
    if a == b:
        raise GraphError(f"self-edge on {a!r}")
    return (a, b) if a < b else (b, a)


class _UnionFind:
    def __init__(self, items: Iterable[str]):
        self.parent = {x: x for x in items}

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        # deterministic root choice
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


@dataclass(frozen=True)
class MiGraph:
    nodes: Mapping[str, EntropyEstimate]
    edges: Mapping[Pair, MiEstimate] = field(default_factory=dict)
    overrides: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        normalized: dict[Pair, MiEstimate] = {}
        for (a, b), est in self.edges.items():
            key = pair_key(a, b)
            for s in key:
                if s not in self.nodes:
                    raise GraphError(f"edge endpoint {s!r} is not a node")
            normalized[key] = est
        for s in self.overrides:
            if s not in self.nodes:
                raise GraphError(f"override for unknown surface {s!r}")
        object.__setattr__(self, "edges", normalized)

    @classmethod
    def from_values(
        cls,
        entropies: Mapping[str, float],
        mi: Mapping[Pair, float],
        unreliable: Iterable[Pair] = (),
    ) -> MiGraph:
        """Graph with exact (zero-width) node and edge values."""
        bad = {pair_key(*p) for p in unreliable}
        nodes = {s: EntropyEstimate.exact(h) for s, h in entropies.items()}
        edges = {
            pair_key(*p): MiEstimate.exact(v, reliable=pair_key(*p) not in bad)
            for p, v in mi.items()
        }
        return cls(nodes, edges)

    def entropy(self, s: str) -> float:
        if s in self.overrides:
            return self.overrides[s]
        return self.nodes[s].point

    def edge(self, a: str, b: str) -> MiEstimate | None:
        return self.edges.get(pair_key(a, b))

    def weight(self, a: str, b: str) -> float:
        """Usable MI for a pair: 0 if absent/unreliable, capped at min(H)."""
        est = self.edges.get(pair_key(a, b))
        if est is None or not est.reliable:
            return 0.0
        return max(0.0, min(est.point, self.entropy(a), self.entropy(b)))

    def without_edge(self, a: str, b: str) -> MiGraph:
        key = pair_key(a, b)
        return MiGraph(self.nodes, {k: v for k, v in self.edges.items() if k != key}, self.overrides)

    def constraint_violations(self, slack: float = 0.0) -> list[Pair]:
        """Edges whose MI exceeds min endpoint entropy by more than CI slack."""
        bad = []
        for (a, b), est in sorted(self.edges.items()):
            cap = min(self.entropy(a), self.entropy(b))
            tol = slack + max(0.0, est.point - est.ci_low)
            if est.point > cap + tol:
                bad.append((a, b))
        return bad

    def _check_subset(self, subset: Iterable[str]) -> list[str]:
        members = sorted(set(subset))
        unknown = [s for s in members if s not in self.nodes]
        if unknown:
            raise GraphError(f"unknown surfaces: {', '.join(unknown)}")
        return members

    def to_json(self) -> dict[str, Any]:
        nodes = []
        for s in sorted(self.nodes):
            est = self.nodes[s]
            rec: dict[str, Any] = {
                "surface": s,
                "h_bits": est.point,
                "ci": [est.ci_low, est.ci_high],
                "reliable": est.reliable,
                "n": est.n,
                "k_effective": est.k_effective,
            }
            if s in self.overrides:
                rec["entropy_override"] = self.overrides[s]
            nodes.append(rec)
        edges = [
            {
                "a": a,
                "b": b,
                "mi_bits": est.point,
                "ci": [est.ci_low, est.ci_high],
                "reliable": est.reliable,
                "n": est.n,
            }
            for (a, b), est in sorted(self.edges.items())
        ]
        return {"nodes": nodes, "edges": edges}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> MiGraph:
        nodes: dict[str, EntropyEstimate] = {}
        overrides: dict[str, float] = {}
        for rec in data["nodes"]:
            lo, hi = rec.get("ci", [rec["h_bits"], rec["h_bits"]])
            nodes[rec["surface"]] = EntropyEstimate(
                point=float(rec["h_bits"]),
                ci_low=float(lo),
                ci_high=float(hi),
                delta=float(rec.get("delta", 1.0)),
                n=int(rec.get("n", 0)),
                k_effective=int(rec.get("k_effective", 0)),
                reliable=bool(rec.get("reliable", True)),
            )
            if rec.get("entropy_override") is not None:
                overrides[rec["surface"]] = float(rec["entropy_override"])
        edges: dict[Pair, MiEstimate] = {}
        for rec in data.get("edges", []):
            lo, hi = rec.get("ci", [rec["mi_bits"], rec["mi_bits"]])
            edges[pair_key(rec["a"], rec["b"])] = MiEstimate(
                point=float(rec["mi_bits"]),
                ci_low=float(lo),
                ci_high=float(hi),
                n=int(rec.get("n", 0)),
                k1=0,
                k2=0,
                reliable=bool(rec.get("reliable", True)),
            )
        return cls(nodes, edges, overrides)


@dataclass(frozen=True)
class EntropyBound:
    upper_bits: float
    tree_edges: list[Pair]
    omitted_edges: int
    method: str
    clamped: bool = False
    # Conservative interval on the bound: node CI ends minus edge CI ends.
    ci_low_bits: float = 0.0
    ci_high_bits: float = 0.0
    chain_edges: list[Pair] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        return {
            "upper_bits": self.upper_bits,
            "ci_low_bits": self.ci_low_bits,
            "ci_high_bits": self.ci_high_bits,
            "method": self.method,
            "tree_edges": [list(e) for e in self.tree_edges],
            "chain_edges": [list(e) for e in self.chain_edges],
            "omitted_edges": self.omitted_edges,
            "clamped": self.clamped,
        }


def best_chain_lower_bound(graph: MiGraph, a: str, b: str) -> tuple[float, list[str]]:
    """Largest chain lower bound on I(a; b) over paths of reliable edges.

    A path's bound is the sum of consecutive MI minus the interior entropies.
    Splitting every interior entropy over its two incident edges turns this
    into a shortest-path problem with non-negative costs H_x/2 + H_y/2 - I_xy.
    Returns (0, []) when no path of length >= 2 edges exists.
    """
    adj: dict[str, list[tuple[str, float]]] = {}
    for (x, y), est in graph.edges.items():
        if not est.reliable or {x, y} == {a, b}:
            continue
        w = graph.weight(x, y)
        cost = 0.5 * (graph.entropy(x) + graph.entropy(y)) - w
        adj.setdefault(x, []).append((y, cost))
        adj.setdefault(y, []).append((x, cost))
    dist = {a: 0.0}
    prev: dict[str, str] = {}
    heap = [(0.0, a)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist.get(u, float("inf")):
            continue
        if u == b:
            break
        for v, c in sorted(adj.get(u, ())):
            nd = d + max(c, 0.0)
            if nd < dist.get(v, float("inf")) - 1e-15:
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    if b not in dist:
        return 0.0, []
    path = [b]
    while path[-1] != a:
        path.append(prev[path[-1]])
    path.reverse()
    return chain_lower_bound(graph, path), path


def chain_lower_bound(graph: MiGraph, path: Sequence[str]) -> float:
    """Lower bound on I(path[0]; path[-1]) from consecutive MI along ``path``."""
    if len(path) < 2:
        raise GraphError("path needs at least two surfaces")
    graph._check_subset(path)
    total = 0.0
    for x, y in zip(path, path[1:]):
        est = graph.edge(x, y)
        if est is None or not est.reliable:
            raise ChainBrokenError(f"chain broken between {x!r} and {y!r}")
        total += graph.weight(x, y)
    total -= sum(graph.entropy(s) for s in path[1:-1])
    return max(0.0, total)


def _candidate_weights(
    graph: MiGraph, members: list[str], use_chain_bounds: bool
) -> tuple[dict[Pair, float], int, set[Pair]]:
    weights: dict[Pair, float] = {}
    chained: set[Pair] = set()
    omitted = 0
    member_set = set(members)
    for (a, b), est in graph.edges.items():
        if a in member_set and b in member_set:
            if est.reliable:
                weights[(a, b)] = graph.weight(a, b)
            else:
                omitted += 1
    if use_chain_bounds:
        for i, a in enumerate(members):
            for b in members[i + 1 :]:
                key = (a, b)
                if key in weights:
                    continue
                lb, _ = best_chain_lower_bound(graph, a, b)
                if lb > 0.0:
                    weights[key] = min(lb, graph.entropy(a), graph.entropy(b))
                    chained.add(key)
    return weights, omitted, chained


def max_spanning_forest(
    graph: MiGraph, subset: Iterable[str], use_chain_bounds: bool = False
) -> list[Pair]:
    """Maximum-weight spanning forest over reliable edges inside ``subset``.

    Kruskal's algorithm; edges are considered by decreasing weight with ties
    broken by lexicographic pair order. Zero-weight edges are skipped.
    """
    members = graph._check_subset(subset)
    weights, _, _ = _candidate_weights(graph, members, use_chain_bounds)
    return _kruskal(members, weights)


def _kruskal(members: list[str], weights: Mapping[Pair, float]) -> list[Pair]:
    uf = _UnionFind(members)
    forest = []
    for (a, b), w in sorted(weights.items(), key=lambda kv: (-kv[1], kv[0])):
        if w <= 0.0:
            break
        if uf.union(a, b):
            forest.append((a, b))
    return forest


def naive_upper_bound(graph: MiGraph, subset: Iterable[str]) -> EntropyBound:
    members = graph._check_subset(subset)
    if not members:
        raise GraphError("empty subset")
    total = sum(graph.entropy(s) for s in members)
    hi = sum(_node_ci(graph, s)[1] for s in members)
    lo = sum(_node_ci(graph, s)[0] for s in members)
    return EntropyBound(total, [], 0, "naive_sum", False, lo, hi)


def _node_ci(graph: MiGraph, s: str) -> tuple[float, float]:
    if s in graph.overrides:
        v = graph.overrides[s]
        return v, v
    est = graph.nodes[s]
    return est.ci_low, est.ci_high


def chow_liu_upper_bound(
    graph: MiGraph, subset: Iterable[str], use_chain_bounds: bool = False
) -> EntropyBound:
    """Upper bound on the joint entropy of ``subset`` in bits.

    Unreliable edges are treated as absent. With ``use_chain_bounds`` the
    missing pairs may instead receive a chain lower bound through reliable
    paths anywhere in the graph.
    """
    members = graph._check_subset(subset)
    if not members:
        raise GraphError("empty subset")
    weights, omitted, chained = _candidate_weights(graph, members, use_chain_bounds)
    forest = _kruskal(members, weights)
    h_sum = sum(graph.entropy(s) for s in members)
    mi_sum = sum(weights[e] for e in forest)
    upper = h_sum - mi_sum
    clamped = upper < 0.0
    if clamped:
        log.warning("Chow-Liu bound %.6g < 0 for %d surfaces; clamped", upper, len(members))
        upper = 0.0

    hi = sum(_node_ci(graph, s)[1] for s in members)
    lo = sum(_node_ci(graph, s)[0] for s in members)
    for e in forest:
        if e in chained:
            hi -= weights[e]
            lo -= weights[e]
            continue
        est = graph.edges[e]
        hi -= min(est.ci_low, weights[e])
        lo -= est.ci_high
    return EntropyBound(
        upper_bits=upper,
        tree_edges=forest,
        omitted_edges=omitted,
        method="chow_liu",
        clamped=clamped,
        ci_low_bits=max(0.0, lo),
        ci_high_bits=max(hi, upper),
        chain_edges=sorted(e for e in forest if e in chained),
    )


def bound_for_tree(graph: MiGraph, subset: Iterable[str], tree: Iterable[Pair]) -> float:
    """Joint-entropy bound for a caller-supplied spanning forest (no clamping)."""
    members = graph._check_subset(subset)
    return sum(graph.entropy(s) for s in members) - sum(graph.weight(a, b) for a, b in tree)


def estimate_graph(
    samples: Mapping[str, Mapping[Any, Any]],
    delta: float = 0.05,
    pairs: Iterable[Pair] | None = None,
    sample_floor: int = MI_SAMPLE_FLOOR,
    min_pair_samples: int = 2,
) -> MiGraph:
    """Estimate a MiGraph from per-surface ``{client: value}`` samples.

    Node and edge reliability follow the domain-size and sample-count rules
    of :func:`fpentropy.estimation.mi_estimate`. Pairs with fewer than
    ``min_pair_samples`` co-reporting clients get no edge.
    """
    nodes = {}
    for s in sorted(samples):
        values = samples[s]
        if len(values) >= 2:
            nodes[s] = entropy_confidence_interval(build_distribution(values.values()), delta=delta)
    if pairs is None:
        names = sorted(nodes)
        pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1 :]]
    edges = {}
    for a, b in pairs:
        if a not in nodes or b not in nodes:
            continue
        va, vb = samples[a], samples[b]
        common = sorted(set(va) & set(vb), key=repr)
        if len(common) < max(2, min_pair_samples):
            continue
        joint = build_joint([va[c] for c in common], [vb[c] for c in common])
        edges[pair_key(a, b)] = mi_estimate(joint, delta, sample_floor=sample_floor)
    return MiGraph(nodes, edges)
