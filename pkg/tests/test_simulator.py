import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpentropy.estimation import build_distribution, plugin_entropy
from fpentropy.schemas import validate
from fpentropy.simulator import (
    PHASE2_REPORT_CAP,
    BudgetExceededError,
    HashCollisionError,
    ModelError,
    PopulationModel,
    ReportRecord,
    SurfaceSpec,
    VisitSchedule,
    client_values,
    distinct_client_counts,
    exact_joint_entropy,
    exact_mutual_information,
    expected_family_calls,
    filter_records,
    full_reports,
    generate_population,
    hash_values,
    joint_table,
    k_anonymity_filter,
    random_forest_model,
    reporting_probability,
    run_phase1,
    run_phase2,
    run_phase3,
)


def brute_force_joint_entropy(model, subset):
    """Enumerate every full assignment and marginalize; independent of message passing."""
    ids = model.ids
    pos = {s: i for i, s in enumerate(ids)}
    marg = {}
    for assignment in itertools.product(*(range(len(model.spec(s).domain)) for s in ids)):
        p = 1.0
        for s in ids:
            t = model.tables[s]
            v = assignment[pos[s]]
            p *= t[assignment[pos[model.parents[s]]], v] if s in model.parents else t[v]
        key = tuple(assignment[pos[s]] for s in subset)
        marg[key] = marg.get(key, 0.0) + p
    q = np.array([v for v in marg.values() if v > 0])
    return float(-(q * np.log2(q)).sum())


def two_bit_model(copy=0.9):
    s = (SurfaceSpec("a", ("0", "1")), SurfaceSpec("b", ("0", "1")))
    return PopulationModel(s, {"b": "a"}, {"a": [0.5, 0.5], "b": [[copy, 1 - copy], [1 - copy, copy]]})


def test_two_bit_exact_values():
    m = two_bit_model(0.9)
    h_b_given_a = -(0.9 * np.log2(0.9) + 0.1 * np.log2(0.1))
    assert exact_joint_entropy(m, ["a", "b"]) == pytest.approx(1 + h_b_given_a, abs=1e-12)
    assert exact_mutual_information(m, "a", "b") == pytest.approx(1 - h_b_given_a, abs=1e-12)
    table, axes = joint_table(m, ["b", "a"])
    assert table.sum() == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(2, 3), st.integers(0, 2**31))
def test_exact_entropy_matches_enumeration(n, k, seed):
    model = random_forest_model(n, k, np.random.default_rng(seed))
    rnd = np.random.default_rng(seed + 1)
    subset = [s for s in model.ids if rnd.random() < 0.6] or model.ids[:1]
    assert exact_joint_entropy(model, subset) == pytest.approx(brute_force_joint_entropy(model, subset), abs=1e-9)


def test_model_validation():
    s = (SurfaceSpec("a", ("0", "1")),)
    with pytest.raises(ModelError, match="rows must sum to 1"):
        PopulationModel(s, {}, {"a": [0.5, 0.6]})
    with pytest.raises(ModelError, match="cycle"):
        two = (SurfaceSpec("a", ("0",)), SurfaceSpec("b", ("0",)))
        PopulationModel(two, {"a": "b", "b": "a"}, {"a": [[1.0]], "b": [[1.0]]})
    with pytest.raises(ModelError):
        PopulationModel((SurfaceSpec("a", ("0", "0")),), {}, {"a": [0.5, 0.5]})


def test_model_json_roundtrip(small_model):
    data = json.loads(json.dumps(small_model.to_json()))
    m2 = PopulationModel.from_json(data)
    assert m2.ids == small_model.ids and m2.parents == small_model.parents
    for s in m2.ids:
        assert np.array_equal(m2.tables[s], small_model.tables[s])


def test_population_deterministic_and_faithful(small_model):
    p1 = generate_population(small_model, 20_000, seed=3)
    p2 = generate_population(small_model, 20_000, seed=3)
    p3 = generate_population(small_model, 20_000, seed=4)
    for s in small_model.ids:
        assert np.array_equal(p1.values[s], p2.values[s])
    assert any(not np.array_equal(p1.values[s], p3.values[s]) for s in small_model.ids)
    for s in small_model.ids:
        h = plugin_entropy(build_distribution(p1.values[s]))
        assert h == pytest.approx(exact_joint_entropy(small_model, [s]), abs=0.02)


def test_phase1_has_no_values(small_model):
    pop = generate_population(small_model, 500, seed=1)
    res = run_phase1(pop, VisitSchedule(("x.example",), 3), seed=1)
    assert res.records and not hasattr(res.records[0], "value")


def test_phase2_caps_and_lists(small_model):
    pop = generate_population(small_model, 3000, seed=2)
    sched = VisitSchedule(("x.example", "y.example"), 60)
    res = run_phase2(pop, sched, seed=2)
    assert res.max_reports() <= PHASE2_REPORT_CAP
    per_client = {}
    for r in res.records:
        per_client[r.client_id] = per_client.get(r.client_id, 0) + 1
    assert max(per_client.values()) <= PHASE2_REPORT_CAP
    lists = {c.client_id: c.assigned_list for c in res.clients}
    assert all(r.surface in lists[r.client_id] for r in res.records)
    for r in res.records[:10]:
        validate("report_record", r.to_json())


def test_reporting_probability():
    assert reporting_probability(20) == 1.0
    assert reporting_probability(80) == 0.5
    assert reporting_probability(0) == 1.0
    m = two_bit_model()
    assert expected_family_calls(m, VisitSchedule(visits_per_client=10)) == {"family-0": 20.0}


def test_phase3_budget_refusal(small_model):
    pop = generate_population(small_model, 200, seed=5)
    h_all = exact_joint_entropy(small_model, small_model.ids)
    with pytest.raises(BudgetExceededError):
        run_phase3(pop, [(small_model.ids, 10)], budget=h_all - 0.01)
    res = run_phase3(pop, [(small_model.ids[:2], 50), (small_model.ids[2:4], 50)], seed=5)
    assert all(c.exposure_bits <= 20.0 for c in res.clients)
    assert {r.client_id for r in res.records} <= set(range(100))


def test_phase3_excludes_clients(small_model):
    pop = generate_population(small_model, 300, seed=6)
    res = run_phase3(pop, [(small_model.ids[:2], 100)], exclude_clients=range(100), seed=6)
    assert min(c.client_id for c in res.clients) >= 100
    with pytest.raises(ValueError):
        run_phase3(pop, [(small_model.ids[:2], 250)], exclude_clients=range(100))


def test_hashing_preserves_entropy(small_model):
    pop = generate_population(small_model, 5000, seed=8)
    raw = full_reports(pop)
    hashed = hash_values(raw, "salt")
    assert {r.value for r in hashed}.isdisjoint({r.value for r in raw})
    before, after = client_values(raw), client_values(hashed)
    for s in small_model.ids:
        assert plugin_entropy(build_distribution(after[s].values())) == pytest.approx(
            plugin_entropy(build_distribution(before[s].values())), abs=1e-12
        )


def test_hash_collision_detected(monkeypatch):
    import fpentropy.simulator as sim

    monkeypatch.setattr(sim, "_digest", lambda salt, s, v: "same")
    recs = [ReportRecord(0, "a", "x", "", 0), ReportRecord(1, "a", "y", "", 0)]
    with pytest.raises(HashCollisionError):
        hash_values(recs, "k")


def test_k_anonymity_boundary():
    recs = [ReportRecord(c, "a", "rare", "", 0) for c in range(49)]
    recs += [ReportRecord(100 + c, "a", "common", "", 0) for c in range(50)]
    recs += [ReportRecord(0, "a", "rare", "", 1)]  # repeat reports do not add clients
    counts = distinct_client_counts(recs)
    assert counts == {("a", "rare"): 49, ("a", "common"): 50}
    assert k_anonymity_filter(counts) == {("a", "common"): 50}
    assert {r.value for r in filter_records(recs)} == {"common"}
