"""Plug-in estimators for entropy, mutual information and KL divergence.

Point estimates are reported in bits. The finite-sample error bounds are
evaluated with natural logarithms and converted to bits at the end, since
that is the form in which they are proven.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Mapping, Sequence

import numpy as np

LN2 = math.log(2.0)

#: Sample floor for a pairwise MI estimate with 1-bit additive error at delta=0.05.
MI_SAMPLE_FLOOR = 30_000
#: Samples must exceed observed distinct values by this factor to trust k.
DOMAIN_SAFETY_FACTOR = 30


class EstimationError(ValueError):
    """Raised when an estimator's preconditions are not met."""


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Observed value frequencies for a single surface."""

    counts: Mapping[Hashable, int]
    n: int

    def __post_init__(self) -> None:
        total = 0
        for value, c in self.counts.items():
            if c < 1:
                raise EstimationError(f"count for {value!r} must be >= 1, got {c}")
            total += c
        if total != self.n:
            raise EstimationError(f"n={self.n} does not match sum of counts {total}")

    @property
    def k(self) -> int:
        return len(self.counts)

    def probabilities(self) -> np.ndarray:
        if self.n == 0:
            return np.zeros(0)
        return np.fromiter(self.counts.values(), dtype=float, count=self.k) / self.n

    def renamed(self, mapping: Mapping[Hashable, Hashable]) -> EmpiricalDistribution:
        return EmpiricalDistribution({mapping[v]: c for v, c in self.counts.items()}, self.n)


@dataclass(frozen=True)
class JointDistribution:
    """Observed frequencies of value pairs for two surfaces."""

    counts: Mapping[tuple[Hashable, Hashable], int]
    n: int

    def __post_init__(self) -> None:
        total = sum(self.counts.values())
        if any(c < 1 for c in self.counts.values()):
            raise EstimationError("joint counts must be >= 1")
        if total != self.n:
            raise EstimationError(f"n={self.n} does not match sum of counts {total}")

    def marginal(self, axis: int) -> EmpiricalDistribution:
        if axis not in (0, 1):
            raise ValueError("axis must be 0 or 1")
        acc: Counter = Counter()
        for key, c in self.counts.items():
            acc[key[axis]] += c
        return EmpiricalDistribution(dict(acc), self.n)

    def swapped(self) -> JointDistribution:
        return JointDistribution({(b, a): c for (a, b), c in self.counts.items()}, self.n)

    def as_single(self) -> EmpiricalDistribution:
        """View the pair as one variable whose values are the value tuples."""
        return EmpiricalDistribution(dict(self.counts), self.n)

    def table(self) -> tuple[np.ndarray, list, list]:
        """Dense contingency table with rows/cols ordered by ``repr`` of the values."""
        rows = sorted({a for a, _ in self.counts}, key=repr)
        cols = sorted({b for _, b in self.counts}, key=repr)
        ri = {v: i for i, v in enumerate(rows)}
        ci = {v: i for i, v in enumerate(cols)}
        t = np.zeros((len(rows), len(cols)), dtype=np.int64)
        for (a, b), c in self.counts.items():
            t[ri[a], ci[b]] = c
        return t, rows, cols


@dataclass(frozen=True)
class EntropyEstimate:
    point: float
    ci_low: float
    ci_high: float
    delta: float
    n: int
    k_effective: int
    reliable: bool

    @classmethod
    def exact(cls, bits: float) -> EntropyEstimate:
        """A degenerate estimate for a known entropy (zero-width interval)."""
        return cls(bits, bits, bits, 1.0, 0, 0, True)

    def to_json(self, surface: str) -> dict[str, Any]:
        return {
            "surface": surface,
            "point_bits": self.point,
            "ci_low_bits": self.ci_low,
            "ci_high_bits": self.ci_high,
            "n": self.n,
            "k_effective": self.k_effective,
            "reliable": self.reliable,
        }


@dataclass(frozen=True)
class MiEstimate:
    point: float
    ci_low: float
    ci_high: float
    n: int
    k1: int
    k2: int
    reliable: bool
    delta: float = field(default=0.05)

    @classmethod
    def exact(cls, bits: float, reliable: bool = True) -> MiEstimate:
        return cls(bits, bits, bits, 0, 0, 0, reliable, 1.0)


def build_distribution(samples: Iterable[Hashable]) -> EmpiricalDistribution:
    if isinstance(samples, np.ndarray):
        if samples.size == 0:
            return EmpiricalDistribution({}, 0)
        values, counts = np.unique(samples, return_counts=True)
        return EmpiricalDistribution(dict(zip(values.tolist(), counts.tolist())), int(samples.size))
    counts = Counter(samples)
    return EmpiricalDistribution(dict(counts), sum(counts.values()))


def build_joint(
    first: Sequence[Hashable] | np.ndarray, second: Sequence[Hashable] | np.ndarray
) -> JointDistribution:
    """Joint distribution from two aligned sample sequences."""
    if len(first) != len(second):
        raise EstimationError("paired samples must have equal length")
    if isinstance(first, np.ndarray) and isinstance(second, np.ndarray) and first.size:
        stacked = np.stack([first, second], axis=1)
        pairs, counts = np.unique(stacked, axis=0, return_counts=True)
        keys = [tuple(p) for p in pairs.tolist()]
        return JointDistribution(dict(zip(keys, counts.tolist())), len(first))
    counts = Counter(zip(list(first), list(second)))
    return JointDistribution(dict(counts), len(first))


def _entropy_bits(p: np.ndarray) -> float:
    p = p[p > 0]
    if p.size == 0:
        return 0.0
    return float(max(0.0, -np.sum(p * np.log2(p))))


def plugin_entropy(dist: EmpiricalDistribution) -> float:
    """Plug-in Shannon entropy in bits."""
    if dist.n < 1:
        raise EstimationError("no samples")
    return _entropy_bits(dist.probabilities())


def kl_divergence(p: EmpiricalDistribution, q: EmpiricalDistribution) -> float:
    """KL divergence d(p || q) in nats."""
    if p.n < 1 or q.n < 1:
        raise EstimationError("no samples")
    total = 0.0
    for value, c in p.counts.items():
        qc = q.counts.get(value, 0)
        if qc == 0:
            raise EstimationError("absolute continuity violated")
        pi = c / p.n
        total += pi * math.log(pi / (qc / q.n))
    return max(0.0, total)


def _statistical_term_nats(n: int, delta: float) -> float:
    return math.sqrt(2.0 * math.log(2.0 / delta) * math.log(n) / n)


def entropy_error_bounds(n: int, k: int, delta: float) -> tuple[float, float]:
    """(downward, upward) error bounds in bits for a plug-in entropy estimate.

    ``downward`` bounds how far the estimate can sit below the true entropy,
    ``upward`` how far above it, each holding with probability >= 1 - delta.
    """
    if n < 2:
        raise EstimationError("insufficient samples")
    if k < 1:
        raise EstimationError("domain size must be >= 1")
    _check_delta(delta)
    stat = _statistical_term_nats(n, delta)
    down = math.log1p((k - 1) / n) + stat
    return down / LN2, stat / LN2


def effective_domain_size(dist: EmpiricalDistribution) -> tuple[int, bool]:
    """Observed distinct values and whether n is large enough to trust them."""
    if dist.n < 1:
        raise EstimationError("no samples")
    k = dist.k
    return k, dist.n >= DOMAIN_SAFETY_FACTOR * k


def entropy_confidence_interval(
    dist: EmpiricalDistribution, k: int | None = None, delta: float = 0.1
) -> EntropyEstimate:
    """Plug-in entropy with its finite-sample confidence interval.

    When ``k`` is omitted the observed number of distinct values is used.
    ``reliable`` reflects the 30x samples-per-value heuristic either way.
    """
    if dist.n < 2:
        raise EstimationError("insufficient samples")
    k_obs, reliable = effective_domain_size(dist)
    k = k_obs if k is None else k
    point = plugin_entropy(dist)
    down, up = entropy_error_bounds(dist.n, k, delta)
    return EntropyEstimate(
        point=point,
        ci_low=max(0.0, point - up),
        ci_high=point + down,
        delta=delta,
        n=dist.n,
        k_effective=k,
        reliable=reliable,
    )


def mutual_information(joint: JointDistribution) -> float:
    """Plug-in MI in bits via H(X) + H(Y) - H(X, Y), clamped at 0."""
    if joint.n < 1:
        raise EstimationError("no samples")
    h1 = plugin_entropy(joint.marginal(0))
    h2 = plugin_entropy(joint.marginal(1))
    h12 = plugin_entropy(joint.as_single())
    return max(0.0, h1 + h2 - h12)


def mi_statistical_error(n: int, delta: float) -> float:
    """Statistical part of the MI error bound, in nats."""
    return 3.0 * math.sqrt(6.0 * math.log(2.0 / delta) * math.log(n) / n)


def mi_confidence_interval(n: int, k1: int, k2: int, delta: float) -> tuple[float, float]:
    """(downward, upward) MI error bounds in bits."""
    if n < 2:
        raise EstimationError("insufficient samples")
    if k1 < 1 or k2 < 1:
        raise EstimationError("domain sizes must be >= 1")
    _check_delta(delta)
    stat = mi_statistical_error(n, delta)
    down = math.log1p((k1 - 1) / n) + math.log1p((k2 - 1) / n) + stat
    up = math.log1p((k1 * k2 - 1) / n) + stat
    return down / LN2, up / LN2


def required_samples(k1: int, k2: int, floor: int = MI_SAMPLE_FLOOR) -> int:
    if k1 < 1 or k2 < 1:
        raise EstimationError("domain sizes must be >= 1")
    return max(3 * k1 * k2, floor)


def mi_estimate(
    joint: JointDistribution,
    delta: float = 0.05,
    k1: int | None = None,
    k2: int | None = None,
    sample_floor: int = MI_SAMPLE_FLOOR,
) -> MiEstimate:
    """MI point estimate plus interval.

    The estimate is marked unreliable when either marginal fails the
    domain-size heuristic or the pair has fewer than ``required_samples``.
    """
    if joint.n < 2:
        raise EstimationError("insufficient samples")
    m1, m2 = joint.marginal(0), joint.marginal(1)
    obs1, ok1 = effective_domain_size(m1)
    obs2, ok2 = effective_domain_size(m2)
    k1 = obs1 if k1 is None else k1
    k2 = obs2 if k2 is None else k2
    point = mutual_information(joint)
    down, up = mi_confidence_interval(joint.n, k1, k2, delta)
    reliable = ok1 and ok2 and joint.n >= required_samples(k1, k2, sample_floor)
    return MiEstimate(
        point=point,
        ci_low=max(0.0, point - up),
        ci_high=point + down,
        n=joint.n,
        k1=k1,
        k2=k2,
        reliable=reliable,
        delta=delta,
    )


def _check_delta(delta: float) -> None:
    if not 0.0 < delta <= 1.0:
        raise EstimationError(f"delta must lie in (0, 1], got {delta}")
