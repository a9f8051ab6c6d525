import itertools
import json

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpentropy.chowliu import (
    ChainBrokenError,
    GraphError,
    MiGraph,
    best_chain_lower_bound,
    bound_for_tree,
    chain_lower_bound,
    chow_liu_upper_bound,
    estimate_graph,
    max_spanning_forest,
    naive_upper_bound,
)
from fpentropy.schemas import validate
from fpentropy.simulator import exact_graph, exact_joint_entropy


def toy_graph():
    h = {"a": 2.0, "b": 1.5, "c": 1.0, "d": 0.5}
    mi = {("a", "b"): 1.2, ("b", "c"): 0.8, ("a", "c"): 0.7, ("c", "d"): 0.1}
    return MiGraph.from_values(h, mi)


@st.composite
def random_graphs(draw):
    n = draw(st.integers(1, 7))
    names = [f"n{i}" for i in range(n)]
    h = {s: draw(st.floats(0.0, 5.0)) for s in names}
    mi = {}
    for a, b in itertools.combinations(names, 2):
        if draw(st.booleans()):
            mi[(a, b)] = draw(st.floats(0.0, 1.0)) * min(h[a], h[b])
    unreliable = [p for p in mi if draw(st.integers(0, 4)) == 0]
    return MiGraph.from_values(h, mi, unreliable)


def test_toy_bound_value():
    g = toy_graph()
    b = chow_liu_upper_bound(g, ["a", "b", "c", "d"])
    # tree: ab (1.2), bc (0.8), cd (0.1)
    assert b.tree_edges == [("a", "b"), ("b", "c"), ("c", "d")]
    assert b.upper_bits == pytest.approx(5.0 - 2.1)
    assert naive_upper_bound(g, ["a", "b", "c", "d"]).upper_bits == pytest.approx(5.0)


def test_single_surface_and_errors():
    g = toy_graph()
    assert chow_liu_upper_bound(g, ["c"]).upper_bits == 1.0
    with pytest.raises(GraphError, match="unknown"):
        chow_liu_upper_bound(g, ["a", "zz"])
    with pytest.raises(GraphError):
        chow_liu_upper_bound(g, [])


def test_unreliable_edge_treated_as_absent():
    g = MiGraph.from_values({"a": 1.0, "b": 1.0}, {("a", "b"): 0.9}, unreliable=[("a", "b")])
    b = chow_liu_upper_bound(g, ["a", "b"])
    assert b.upper_bits == 2.0 and b.omitted_edges == 1 and b.tree_edges == []


def test_mi_capped_at_min_entropy():
    g = MiGraph.from_values({"a": 1.0, "b": 0.3}, {("a", "b"): 0.8})
    assert g.weight("a", "b") == pytest.approx(0.3)
    assert chow_liu_upper_bound(g, ["a", "b"]).upper_bits == pytest.approx(1.0)
    assert g.constraint_violations() == [("a", "b")]


def test_override_replaces_entropy():
    g = MiGraph.from_values({"a": 1.0, "b": 1.0}, {})
    g2 = MiGraph(g.nodes, g.edges, {"a": 3.0})
    assert chow_liu_upper_bound(g2, ["a", "b"]).upper_bits == 4.0


def test_tie_breaking_is_lexicographic():
    g = MiGraph.from_values({s: 1.0 for s in "abc"}, {("a", "b"): 0.5, ("a", "c"): 0.5, ("b", "c"): 0.5})
    assert max_spanning_forest(g, "abc") == [("a", "b"), ("a", "c")]


def test_chain_lower_bound_value():
    g = toy_graph().without_edge("a", "c")
    # I(a;b) + I(b;c) - H(b) = 1.2 + 0.8 - 1.5
    assert chain_lower_bound(g, ["a", "b", "c"]) == pytest.approx(0.5)
    lb, path = best_chain_lower_bound(g, "a", "c")
    assert path == ["a", "b", "c"] and lb == pytest.approx(0.5)
    with pytest.raises(ChainBrokenError):
        chain_lower_bound(g, ["a", "c", "d"])


def test_chain_bounds_tighten_bound():
    g = toy_graph().without_edge("a", "b")
    plain = chow_liu_upper_bound(g, ["a", "b"])
    chained = chow_liu_upper_bound(g, ["a", "b"], use_chain_bounds=True)
    assert plain.upper_bits == pytest.approx(3.5)
    # a-c-b chain: 0.7 + 0.8 - 1.0 = 0.5
    assert chained.upper_bits == pytest.approx(3.0)
    assert chained.chain_edges == [("a", "b")]


def test_json_roundtrip_and_schema():
    rng = np.random.default_rng(0)
    x = rng.integers(0, 3, 2000)
    samples = {"p": dict(enumerate(x.tolist())), "q": dict(enumerate(((x + rng.integers(0, 2, 2000)) % 3).tolist()))}
    g = estimate_graph(samples, sample_floor=1000)
    data = json.loads(json.dumps(g.to_json()))
    validate("graph", data)
    g2 = MiGraph.from_json(data)
    assert chow_liu_upper_bound(g2, ["p", "q"]).upper_bits == pytest.approx(chow_liu_upper_bound(g, ["p", "q"]).upper_bits)
    validate("bound", {"subset": ["p", "q"], "chow_liu": chow_liu_upper_bound(g, "pq").to_json(), "naive": naive_upper_bound(g, "pq").to_json()})


def test_exact_on_true_forest(small_model):
    g = exact_graph(small_model)
    h_true = exact_joint_entropy(small_model, small_model.ids)
    tree = [tuple(sorted(e)) for e in small_model.parents.items()]
    assert bound_for_tree(g, small_model.ids, tree) == pytest.approx(h_true, abs=1e-9)
    assert chow_liu_upper_bound(g, small_model.ids).upper_bits == pytest.approx(h_true, abs=1e-9)


@given(random_graphs())
def test_forest_weight_matches_networkx(g):
    members = sorted(g.nodes)
    forest = max_spanning_forest(g, members)
    ref = nx.Graph()
    ref.add_nodes_from(members)
    for (a, b), est in g.edges.items():
        if est.reliable and g.weight(a, b) > 0:
            ref.add_edge(a, b, weight=g.weight(a, b))
    best = nx.maximum_spanning_tree(ref)
    assert sum(g.weight(*e) for e in forest) == pytest.approx(best.size(weight="weight"), abs=1e-9)
    if forest:
        assert nx.is_forest(nx.Graph(forest))


@given(random_graphs())
def test_bound_sandwich_properties(g):
    members = sorted(g.nodes)
    cl = chow_liu_upper_bound(g, members)
    assert 0.0 <= cl.upper_bits <= naive_upper_bound(g, members).upper_bits + 1e-9
    assert cl.ci_low_bits <= cl.upper_bits + 1e-9
    assert cl.upper_bits <= cl.ci_high_bits + 1e-9


@given(random_graphs(), st.data())
def test_subset_monotone(g, data):
    members = sorted(g.nodes)
    sub = data.draw(st.lists(st.sampled_from(members), min_size=1, unique=True))
    extra = data.draw(st.sampled_from(members))
    assert chow_liu_upper_bound(g, sub).upper_bits <= chow_liu_upper_bound(g, set(sub) | {extra}).upper_bits + 1e-9


@settings(max_examples=60)
@given(random_graphs(), st.data())
def test_best_chain_matches_brute_force(g, data):
    members = sorted(g.nodes)
    if len(members) < 3:
        return
    a, b = data.draw(st.lists(st.sampled_from(members), min_size=2, max_size=2, unique=True))
    ref = nx.Graph([e for e, est in g.edges.items() if est.reliable and set(e) != {a, b}])
    best = 0.0
    if a in ref and b in ref:
        for path in nx.all_simple_paths(ref, a, b):
            best = max(best, chain_lower_bound(g, path))
    lb, path = best_chain_lower_bound(g, a, b)
    assert lb == pytest.approx(best, abs=1e-9)
