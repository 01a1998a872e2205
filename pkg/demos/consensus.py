"""Aggregating per-dataset dominance relations into a consensus ranking.

Each dataset yields a relation "encoder A significantly beats encoder B"
(corrected resampled t-test). The consensus weak order minimizes the summed
symmetric-difference distance to those relations; complete-linkage clustering
groups datasets whose relations disagree the most.
"""

import numpy as np

from catenc.consensus import complete_linkage, consensus_weak_order
from catenc.evaluation import build_relation

rng = np.random.default_rng(3)
labels = ["glmm-5CV", "impact", "one_hot", "integer"]

# simulate fold AUCs on six datasets: glmm best, integer worst, with noise
relations = []
for d in range(6):
    base = {"glmm-5CV": 0.80, "impact": 0.76, "one_hot": 0.72,
            "integer": 0.66}
    fold_values = {name: list(v + rng.normal(0, 0.015, 5))
                   for name, v in base.items()}
    rel, excluded = build_relation(fold_values, n_train=800, n_test=200)
    relations.append(rel)
    wins = {lab: int(rel.beats[i].sum()) for i, lab in enumerate(rel.labels)}
    print(f"dataset {d}: significant wins {wins}")

order, total, exact = consensus_weak_order(relations)
print(f"\nconsensus (exact search: {exact}), total distance {total}:")
for tier in range(1, max(order.tiers) + 1):
    tied = [l for l, t in zip(order.labels, order.tiers) if t == tier]
    print(f"  rank {tier}: {', '.join(tied)}")

# pairwise disagreement between datasets -> complete-linkage dendrogram
dendro = complete_linkage(relations)
print("\ncomplete-linkage merges:")
for step in dendro.merges:
    print(f"  {step}")
