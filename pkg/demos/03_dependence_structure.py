"""Which surfaces move together?

Classifies every pair as correlated, independent or undetermined, reorders
the verdict matrix so correlated blocks sit near the diagonal, and clusters
surfaces by mutual information.
"""

import numpy as np

from fpentropy.chowliu import estimate_graph
from fpentropy.independence import classify_pairs
from fpentropy.io import samples_from_reports
from fpentropy.simulator import client_values, full_reports, generate_population, random_forest_model
from fpentropy.structure import AdjacencyMatrix, bandwidth, cuthill_mckee_order, single_linkage_clusters

model = random_forest_model(10, 4, np.random.default_rng(11), edge_probability=0.6)
pop = generate_population(model, 10_000, seed=2)
reports = full_reports(pop)

samples = samples_from_reports(reports)
joints = {pair: samples.joint_distribution(*pair) for pair in sorted(samples.joint)}
verdicts = classify_pairs(joints, bootstrap_rounds=300, seed=5)

adj = AdjacencyMatrix.from_verdicts(verdicts)
order = cuthill_mckee_order(adj)
print(f"bandwidth {bandwidth(adj)} in id order, {bandwidth(adj, order)} after reordering\n")
print(verdicts.to_csv(order))

clusters = single_linkage_clusters(estimate_graph(client_values(reports), sample_floor=5000), mi_threshold=0.05)
print("clusters at MI >= 0.05 bits:", clusters.clusters)
print("true dependency edges:", sorted(f"{p}-{c}" for c, p in model.parents.items()))
