"""Collecting enough pairwise data without over-exposing any client.

Every pair of core surfaces needs a number of co-reporting clients, but no
client may report a set of surfaces worth more than the bit budget. The
greedy planner packs pairs into rounds and the verifier checks the result.
"""

import itertools

import numpy as np

from fpentropy.estimation import required_samples
from fpentropy.planner import PlanningInput, greedy_assign, verify_plan

rng = np.random.default_rng(4)
surfaces = [f"api{i}" for i in range(9)]
h = {s: round(float(rng.uniform(1.0, 7.0)), 2) for s in surfaces}
k = {s: int(rng.integers(2, 120)) for s in surfaces}
need = {(a, b): required_samples(k[a], k[b]) for a, b in itertools.combinations(surfaces, 2)}

inp = PlanningInput(surfaces, h, need, budget=20.0, pool_size=2_000_000)
plan = greedy_assign(inp)
for i, r in enumerate(plan.rounds, 1):
    bits = sum(h[s] for s in r.subset)
    print(f"round {i}: {r.clients:>6} clients report {', '.join(r.subset)} ({bits:.1f} bits)")
print(verify_plan(inp, plan))
print(f"one round per pair would need {sum(need.values())} clients")
