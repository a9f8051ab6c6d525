"""Greedy assignment of surface subsets to clients under an entropy budget.

Every surface pair {i, j} needs ``n_ij`` clients that report both surfaces,
and no client may be handed a subset whose summed marginal entropy exceeds
the budget. Each round picks the feasible subset covering the most
outstanding samples, assigns it to as many fresh clients as its most
demanding pair requires, and clears every pair it contains.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)

Pair = tuple[str, str]

#: Candidate count up to which the inner subset search is exact.
EXACT_LIMIT = 15
_EPS = 1e-12


class PlanningError(ValueError):
    pass


class UnsatisfiablePairError(PlanningError):
    def __init__(self, pair: Pair, h_sum: float, budget: float):
        super().__init__(f"pair {pair[0]!r}/{pair[1]!r} needs {h_sum:.4g} bits > budget {budget:.4g}")
        self.pair = pair


class PoolExhaustedError(PlanningError):
    def __init__(self, needed: int, pool: int, partial: AssignmentPlan):
        super().__init__(f"plan needs {needed} clients but the pool holds {pool}")
        self.partial = partial


def _pair(a: str, b: str) -> Pair:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class PlanningInput:
    surfaces: list[str]
    h: Mapping[str, float]
    n_required: Mapping[Pair, int]
    budget: float
    pool_size: int

    def __post_init__(self) -> None:
        if self.budget <= 0:
            raise PlanningError("budget must be positive")
        if len(set(self.surfaces)) != len(self.surfaces):
            raise PlanningError("duplicate surfaces")
        known = set(self.surfaces)
        for s in self.surfaces:
            if self.h.get(s, -1.0) < 0:
                raise PlanningError(f"missing or negative entropy for {s!r}")
        normalized = {}
        for (a, b), n in self.n_required.items():
            if a not in known or b not in known:
                raise PlanningError(f"pair {a!r}/{b!r} references unknown surface")
            if n < 0:
                raise PlanningError("sample requirements must be >= 0")
            normalized[_pair(a, b)] = int(n)
        object.__setattr__(self, "n_required", normalized)

    def to_json(self) -> dict[str, Any]:
        return {
            "surfaces": list(self.surfaces),
            "h": {s: self.h[s] for s in self.surfaces},
            "n_required": [{"a": a, "b": b, "n": n} for (a, b), n in sorted(self.n_required.items())],
            "budget": self.budget,
            "pool_size": self.pool_size,
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any], budget: float | None = None, pool_size: int | None = None):
        return cls(
            surfaces=list(data["surfaces"]),
            h={k: float(v) for k, v in data["h"].items()},
            n_required={(r["a"], r["b"]): int(r["n"]) for r in data["n_required"]},
            budget=float(budget if budget is not None else data["budget"]),
            pool_size=int(pool_size if pool_size is not None else data["pool_size"]),
        )


@dataclass(frozen=True)
class Round:
    subset: tuple[str, ...]
    clients: int


@dataclass
class AssignmentPlan:
    rounds: list[Round] = field(default_factory=list)
    residual: dict[Pair, int] = field(default_factory=dict)

    @property
    def total_clients(self) -> int:
        return sum(r.clients for r in self.rounds)

    def to_json(self) -> dict[str, Any]:
        return {
            "rounds": [{"subset": list(r.subset), "clients": r.clients} for r in self.rounds],
            "residual": [{"a": a, "b": b, "n": n} for (a, b), n in sorted(self.residual.items())],
            "total_clients": self.total_clients,
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> AssignmentPlan:
        return cls(
            rounds=[Round(tuple(r["subset"]), int(r["clients"])) for r in data["rounds"]],
            residual={(r["a"], r["b"]): int(r["n"]) for r in data.get("residual", [])},
        )


def _subset_score(subset: Sequence[str], residual: Mapping[Pair, int]) -> int:
    return sum(residual.get(_pair(a, b), 0) for a, b in itertools.combinations(subset, 2))


def _candidates(residual: Mapping[Pair, int], h: Mapping[str, float], budget: float) -> list[str]:
    out = set()
    for (a, b), n in residual.items():
        if n > 0 and h[a] + h[b] <= budget + _EPS:
            out.update((a, b))
    return sorted(out)


def _exact_subset(cands: list[str], residual: Mapping[Pair, int], h: Mapping[str, float], budget: float):
    m = len(cands)
    masks = np.arange(1 << m, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(m)) & 1).astype(np.int64)
    hv = np.array([h[s] for s in cands])
    weights = np.zeros((m, m), dtype=np.int64)
    for i, j in itertools.combinations(range(m), 2):
        weights[i, j] = residual.get(_pair(cands[i], cands[j]), 0)
    hsum = bits @ hv
    score = np.einsum("ki,ij,kj->k", bits, weights, bits)
    feasible = hsum <= budget + _EPS
    score = np.where(feasible, score, -1)
    best = score.max()
    if best <= 0:
        return None
    tied = np.flatnonzero(score == best)
    # smaller entropy, then fewer surfaces, then lexicographic
    options = [
        (float(hsum[t]), int(bits[t].sum()), tuple(cands[i] for i in range(m) if bits[t, i]))
        for t in tied
    ]
    return min(options)[2]


def _heuristic_subset(cands: list[str], residual: Mapping[Pair, int], h: Mapping[str, float], budget: float):
    feasible_pairs = [
        (n, p) for p, n in residual.items() if n > 0 and h[p[0]] + h[p[1]] <= budget + _EPS
    ]
    if not feasible_pairs:
        return None
    top = max(n for n, _ in feasible_pairs)
    seed_pair = min(p for n, p in feasible_pairs if n == top)
    chosen = list(seed_pair)
    used = h[chosen[0]] + h[chosen[1]]

    def gain(s: str, members: Sequence[str]) -> int:
        return sum(residual.get(_pair(s, t), 0) for t in members if t != s)

    while True:
        best = None
        for s in cands:
            if s in chosen or used + h[s] > budget + _EPS:
                continue
            g = gain(s, chosen)
            if g <= 0:
                continue
            ratio = g / h[s] if h[s] > 0 else float("inf")
            # cands are sorted, so strict > keeps the lexicographically first on ties
            if best is None or (ratio, g) > best[0]:
                best = ((ratio, g), s)
        if best is None:
            break
        chosen.append(best[1])
        used += h[best[1]]

    # one-swap local improvement
    improved = True
    rounds = 0
    while improved and rounds < 10 * len(cands):
        improved = False
        rounds += 1
        current = _subset_score(chosen, residual)
        for out in sorted(chosen):
            rest = [t for t in chosen if t != out]
            for s in cands:
                if s in chosen:
                    continue
                new_h = used - h[out] + h[s]
                if new_h > budget + _EPS:
                    continue
                trial = rest + [s]
                if _subset_score(trial, residual) > current:
                    chosen, used, improved = trial, new_h, True
                    break
            if improved:
                break
    return tuple(sorted(chosen))


def select_subset(
    residual: Mapping[Pair, int],
    h: Mapping[str, float],
    budget: float,
    exact_limit: int = EXACT_LIMIT,
) -> tuple[str, ...]:
    """Subset L with sum(h) <= budget maximizing the outstanding pair samples.

    Exact over all subsets of the candidate surfaces when there are at most
    ``exact_limit`` of them; otherwise a ratio-greedy construction followed by
    single-swap improvement.
    """
    cands = _candidates(residual, h, budget)
    if not cands:
        raise PlanningError("no feasible subset with outstanding samples")
    if len(cands) <= exact_limit:
        subset = _exact_subset(cands, residual, h, budget)
    else:
        subset = _heuristic_subset(cands, residual, h, budget)
    if subset is None or _subset_score(subset, residual) <= 0:
        raise PlanningError("no feasible subset with outstanding samples")
    return tuple(sorted(subset))


def greedy_assign(inp: PlanningInput, exact_limit: int = EXACT_LIMIT) -> AssignmentPlan:
    residual = {p: n for p, n in inp.n_required.items() if n > 0}
    for (a, b) in sorted(residual):
        hs = inp.h[a] + inp.h[b]
        if hs > inp.budget + _EPS:
            raise UnsatisfiablePairError((a, b), hs, inp.budget)
    plan = AssignmentPlan(residual=dict(inp.n_required))
    used = 0
    while any(n > 0 for n in residual.values()):
        subset = select_subset(residual, inp.h, inp.budget, exact_limit)
        covered = [_pair(a, b) for a, b in itertools.combinations(subset, 2)]
        m = max(residual.get(p, 0) for p in covered)
        if used + m > inp.pool_size:
            raise PoolExhaustedError(used + m, inp.pool_size, plan)
        plan.rounds.append(Round(subset, m))
        used += m
        for p in covered:
            if p in residual:
                residual[p] = 0
                plan.residual[p] = 0
        log.debug("round %d: %s -> %d clients", len(plan.rounds), subset, m)
    return plan


@dataclass(frozen=True)
class PlanReport:
    ok: bool
    total_clients: int
    uncovered: list[Pair]
    over_budget_rounds: list[int]
    pool_exceeded: bool

    def __str__(self) -> str:
        if self.ok:
            return f"plan ok: {self.total_clients} clients"
        parts = []
        if self.uncovered:
            parts.append("uncovered pairs: " + ", ".join(f"{a}/{b}" for a, b in self.uncovered))
        if self.over_budget_rounds:
            parts.append("over-budget rounds: " + ", ".join(map(str, self.over_budget_rounds)))
        if self.pool_exceeded:
            parts.append(f"pool exceeded ({self.total_clients} clients)")
        return "plan failed: " + "; ".join(parts)


def verify_plan(inp: PlanningInput, plan: AssignmentPlan) -> PlanReport:
    coverage: dict[Pair, int] = {}
    over = []
    for i, r in enumerate(plan.rounds):
        if sum(inp.h[s] for s in r.subset) > inp.budget + _EPS:
            over.append(i)
        for a, b in itertools.combinations(sorted(set(r.subset)), 2):
            coverage[(a, b)] = coverage.get((a, b), 0) + r.clients
    uncovered = sorted(p for p, n in inp.n_required.items() if coverage.get(p, 0) < n)
    total = plan.total_clients
    pool_exceeded = total > inp.pool_size
    return PlanReport(not (uncovered or over or pool_exceeded), total, uncovered, over, pool_exceeded)
