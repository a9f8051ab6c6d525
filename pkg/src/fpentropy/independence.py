"""Three-way dependence verdicts from total-variation distance.

A pair of surfaces is compared against independence through the total
variation between its joint distribution and the product of its marginals.
A bootstrap percentile interval decides whether the distance is clearly above
the correlation threshold, clearly below it, or undetermined.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .estimation import EstimationError, JointDistribution


class Verdict(str, enum.Enum):
    CORRELATED = "Correlated"
    INDEPENDENT = "Independent"
    INSUFFICIENT = "Insufficient"

    @property
    def symbol(self) -> str:
        return {"Correlated": "C", "Independent": "I", "Insufficient": "?"}[self.value]


@dataclass(frozen=True)
class PairVerdict:
    pair: tuple[str, str]
    verdict: Verdict
    tv_estimate: float
    tv_low: float
    tv_high: float
    confidence: float
    n: int

    def to_json(self) -> dict[str, Any]:
        return {
            "a": self.pair[0],
            "b": self.pair[1],
            "verdict": self.verdict.value,
            "tv": self.tv_estimate,
            "tv_interval": [self.tv_low, self.tv_high],
            "confidence": self.confidence,
            "n": self.n,
        }


def _tv_of_tables(tables: np.ndarray) -> np.ndarray:
    """TV from independence for a stack of count tables shaped (..., r, c)."""
    n = tables.sum(axis=(-2, -1), keepdims=True).astype(float)
    p = tables / n
    prod = p.sum(axis=-1, keepdims=True) * p.sum(axis=-2, keepdims=True)
    return 0.5 * np.abs(p - prod).sum(axis=(-2, -1))


def total_variation_from_independence(joint: JointDistribution) -> float:
    if joint.n < 1:
        raise EstimationError("no samples")
    table, _, _ = joint.table()
    return float(min(1.0, max(0.0, _tv_of_tables(table))))


def _canonical_table(joint: JointDistribution) -> np.ndarray:
    # Orientation-free layout so swapping the pair's coordinates resamples
    # identically.
    t, _, _ = joint.table()
    tt = t.T
    key_t = (t.shape, t.ravel().tolist())
    key_tt = (tt.shape, tt.ravel().tolist())
    return t if key_t <= key_tt else np.ascontiguousarray(tt)


def bootstrap_tv(
    joint: JointDistribution, rounds: int = 1000, seed: int | np.random.Generator | None = 0
) -> np.ndarray:
    """TV statistic on ``rounds`` nonparametric bootstrap resamples of the pairs."""
    if joint.n < 1:
        raise EstimationError("no samples")
    table = _canonical_table(joint)
    rng = np.random.default_rng(seed)
    flat = table.ravel()
    draws = rng.multinomial(joint.n, flat / flat.sum(), size=rounds)
    return _tv_of_tables(draws.reshape(rounds, *table.shape))


def classify_pair(
    joint: JointDistribution,
    pair: tuple[str, str] = ("", ""),
    threshold: float = 0.05,
    confidence: float = 0.90,
    bootstrap_rounds: int = 1000,
    seed: int | np.random.Generator | None = 0,
) -> PairVerdict:
    """Classify a pair as Correlated, Independent or Insufficient.

    Correlated when the lower end of the central ``confidence`` bootstrap
    interval reaches ``threshold``; Independent when the upper end is below it.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    if joint.n < 1:
        raise EstimationError("no samples")
    tv = total_variation_from_independence(joint)
    boot = bootstrap_tv(joint, bootstrap_rounds, seed)
    alpha = 1.0 - confidence
    lo, hi = np.quantile(boot, [alpha / 2, 1.0 - alpha / 2])
    if lo >= threshold:
        verdict = Verdict.CORRELATED
    elif hi < threshold:
        verdict = Verdict.INDEPENDENT
    else:
        verdict = Verdict.INSUFFICIENT
    return PairVerdict(pair, verdict, tv, float(lo), float(hi), confidence, joint.n)


@dataclass(frozen=True)
class VerdictMatrix:
    order: list[str]
    verdicts: Mapping[tuple[str, str], PairVerdict]

    def get(self, a: str, b: str) -> Verdict | None:
        v = self.verdicts.get((a, b)) or self.verdicts.get((b, a))
        return v.verdict if v else None

    def symbol(self, a: str, b: str) -> str:
        if a == b:
            return "C"
        v = self.get(a, b)
        return v.symbol if v else "?"

    def to_json(self) -> dict[str, Any]:
        return {
            "surfaces": list(self.order),
            "pairs": [self.verdicts[k].to_json() for k in sorted(self.verdicts)],
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> VerdictMatrix:
        verdicts = {}
        for rec in data["pairs"]:
            key = (rec["a"], rec["b"])
            lo, hi = rec.get("tv_interval", [rec["tv"], rec["tv"]])
            verdicts[key] = PairVerdict(
                key, Verdict(rec["verdict"]), rec["tv"], lo, hi, rec.get("confidence", 0.9), rec.get("n", 0)
            )
        return cls(list(data["surfaces"]), verdicts)

    def to_csv(self, order: Sequence[str] | None = None) -> str:
        order = list(order or self.order)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([""] + order)
        for a in order:
            w.writerow([a] + [self.symbol(a, b) for b in order])
        return buf.getvalue()


def classify_pairs(
    joints: Mapping[tuple[str, str], JointDistribution],
    threshold: float = 0.05,
    confidence: float = 0.90,
    bootstrap_rounds: int = 1000,
    seed: int = 0,
) -> VerdictMatrix:
    """Classify every pair; each pair gets its own seeded sub-stream."""
    ss = np.random.SeedSequence(seed)
    keys = sorted(joints)
    children = ss.spawn(len(keys))
    verdicts = {}
    for key, child in zip(keys, children):
        verdicts[key] = classify_pair(
            joints[key], key, threshold, confidence, bootstrap_rounds, np.random.default_rng(child)
        )
    order = sorted({s for k in keys for s in k})
    return VerdictMatrix(order, verdicts)
