"""How much does one surface reveal, and how sure can we be?

Draws values for a skewed surface, estimates its entropy with a confidence
interval, then shows how pairwise mutual information shrinks the bits that
two surfaces reveal together.
"""

import numpy as np

from fpentropy.estimation import (
    build_distribution,
    build_joint,
    entropy_confidence_interval,
    mi_estimate,
    required_samples,
)

rng = np.random.default_rng(0)

# A surface with 16 possible values, most clients sharing a few of them.
probs = rng.dirichlet(np.full(16, 0.4))
true_h = float(-(probs[probs > 0] * np.log2(probs[probs > 0])).sum())
print(f"true entropy: {true_h:.3f} bits")

for n in (500, 5_000, 50_000):
    sample = rng.choice(16, size=n, p=probs)
    est = entropy_confidence_interval(build_distribution(sample), delta=0.1)
    flag = "" if est.reliable else "  (too few samples per value)"
    print(f"n={n:>6}: {est.point:.3f} bits, 90% interval [{est.ci_low:.3f}, {est.ci_high:.3f}]{flag}")

# Two surfaces that usually agree, e.g. a GPU vendor and a renderer string.
n = required_samples(4, 4)
a = rng.integers(0, 4, n)
b = np.where(rng.random(n) < 0.8, a, rng.integers(0, 4, n))
mi = mi_estimate(build_joint(a, b))
h_a = entropy_confidence_interval(build_distribution(a)).point
h_b = entropy_confidence_interval(build_distribution(b)).point
print(f"\nrequired samples for a 4x4 pair: {n}")
print(f"H(a)={h_a:.3f}, H(b)={h_b:.3f}, I(a;b)={mi.point:.3f} bits (reliable: {mi.reliable})")
print(f"together they reveal about {h_a + h_b - mi.point:.3f} bits, not {h_a + h_b:.3f}")
