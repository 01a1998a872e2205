"""Aggregation of benchmark records into report tables: best-HCT performance
summaries, consensus rankings per learner, runtime ratios against the
one-hot condition, and the dataset dendrogram."""

from __future__ import annotations

import statistics
from collections import defaultdict

import numpy as np

from .consensus import complete_linkage, consensus_weak_order
from .evaluation import (BenchmarkRecord, Relation, build_relation,
                         higher_is_better)

ONE_HOT_CONDITION = "one_hot"


def _group_folds(records):
    """(dataset, condition, learner, hct) -> list of records sorted by fold."""
    groups = defaultdict(list)
    for r in records:
        groups[(r.dataset, r.condition, r.learner, r.hct)].append(r)
    for recs in groups.values():
        recs.sort(key=lambda r: r.fold)
    return groups


def _mean_value(recs):
    vals = [r.value for r in recs if not r.failed and not r.degenerate
            and r.value is not None]
    if not vals:
        return None
    return sum(vals) / len(vals)


def best_hct(records):
    """Pick, per (dataset, condition, learner), the HCT with the best mean
    metric. Returns that mapping plus the grouped records."""
    groups = _group_folds(records)
    candidates = defaultdict(list)
    for (dataset, condition, learner, hct), recs in groups.items():
        mean = _mean_value(recs)
        if mean is None:
            continue
        better = higher_is_better(recs[0].metric)
        candidates[(dataset, condition, learner)].append(
            ((-mean if better else mean), hct))
    chosen = {}
    for key, opts in candidates.items():
        opts.sort()
        chosen[key] = opts[0][1]
    return chosen, groups


def performance_summary(records):
    """Rows of (dataset, condition, learner, metric, hct, mean, min, max) at
    the best HCT per combination."""
    chosen, groups = best_hct(records)
    rows = []
    for (dataset, condition, learner), hct in sorted(chosen.items()):
        recs = groups[(dataset, condition, learner, hct)]
        vals = [r.value for r in recs if not r.failed and not r.degenerate]
        rows.append({
            "dataset": dataset, "condition": condition, "learner": learner,
            "metric": recs[0].metric, "hct": hct,
            "mean": sum(vals) / len(vals), "min": min(vals), "max": max(vals),
        })
    return rows


def _relation_for(records_by_condition, alpha):
    any_rec = next(iter(records_by_condition.values()))[0]
    better = higher_is_better(any_rec.metric)
    fold_values = {}
    for cond, recs in records_by_condition.items():
        fold_values[cond] = [None if (r.failed or r.degenerate) else r.value
                             for r in recs]
    n_train = any_rec.n_train
    n_test = any_rec.n_test
    return build_relation(fold_values, n_train, n_test, alpha=alpha,
                          higher_better=better)


def dataset_relations(records, alpha=0.05, per_learner=True):
    """Best-HCT dominance relations, keyed by (learner, dataset) when
    per_learner else by dataset (conditions then span learners)."""
    chosen, groups = best_hct(records)
    buckets = defaultdict(dict)
    for (dataset, condition, learner), hct in chosen.items():
        recs = groups[(dataset, condition, learner, hct)]
        if per_learner:
            buckets[(learner, dataset)][condition] = recs
        else:
            buckets[dataset][f"{condition}+{learner}"] = recs
    relations = {}
    for key, by_cond in buckets.items():
        if len(by_cond) < 2:
            continue
        try:
            rel, _ = _relation_for(by_cond, alpha)
        except ValueError:
            continue
        relations[key] = rel
    return relations


def _align(relations):
    """Restrict a list of relations to their shared condition labels."""
    shared = set(relations[0].labels)
    for r in relations[1:]:
        shared &= set(r.labels)
    shared = sorted(shared)
    out = []
    for r in relations:
        idx = [r.labels.index(lab) for lab in shared]
        out.append(Relation(shared, r.beats[np.ix_(idx, idx)]))
    return out


def consensus_rankings(records, alpha=0.05, seed=0):
    """Per learner: weak-order consensus of the per-dataset relations."""
    relations = dataset_relations(records, alpha=alpha, per_learner=True)
    by_learner = defaultdict(list)
    for (learner, dataset), rel in sorted(relations.items()):
        by_learner[learner].append(rel)
    out = {}
    for learner, rels in by_learner.items():
        aligned = _align(rels)
        if not aligned or len(aligned[0].labels) < 1:
            continue
        if len(aligned[0].labels) == 1:
            out[learner] = {"labels": aligned[0].labels, "tiers": [1],
                            "total_distance": 0, "exact": True,
                            "n_datasets": len(aligned)}
            continue
        order, dist, exact = consensus_weak_order(aligned, seed=seed)
        out[learner] = {"labels": list(order.labels),
                        "tiers": list(order.tiers),
                        "total_distance": dist, "exact": exact,
                        "n_datasets": len(aligned)}
    return out


def dataset_dendrogram(records, alpha=0.05, seed=0):
    """Per-dataset consensus relations across learners, clustered by
    complete linkage on the symmetric-difference distance."""
    relations = dataset_relations(records, alpha=alpha, per_learner=True)
    by_dataset = defaultdict(list)
    for (learner, dataset), rel in sorted(relations.items()):
        by_dataset[dataset].append(rel)
    names = sorted(by_dataset)
    consensus_rels = []
    for name in names:
        aligned = _align(by_dataset[name])
        order, _, _ = consensus_weak_order(aligned, seed=seed)
        consensus_rels.append(Relation(list(order.labels), order.dominance()))
    if len(consensus_rels) < 2:
        raise ValueError("need at least 2 datasets for clustering")
    dendro = complete_linkage(_align(consensus_rels))
    return {"datasets": names,
            "merges": [{"a": a, "b": b, "height": h}
                       for a, b, h in dendro.merges]}


def runtime_ratios(records):
    """Per learner and condition: median/min/max across datasets of the
    total pipeline runtime relative to the one-hot condition (best HCT by
    metric). The one-hot row is identically 1."""
    chosen, groups = best_hct(records)
    totals = {}
    for (dataset, condition, learner), hct in chosen.items():
        recs = groups[(dataset, condition, learner, hct)]
        totals[(dataset, condition, learner)] = sum(
            r.encode_fit_s + r.transform_s + r.learner_fit_s + r.predict_s
            for r in recs)
    ratios = defaultdict(list)
    for (dataset, condition, learner), total in totals.items():
        base = totals.get((dataset, ONE_HOT_CONDITION, learner))
        if base is None or base <= 0:
            continue
        if condition == ONE_HOT_CONDITION:
            ratios[(learner, condition)].append(1.0)
        else:
            ratios[(learner, condition)].append(total / base)
    rows = []
    for (learner, condition), vals in sorted(ratios.items()):
        rows.append({
            "learner": learner, "condition": condition,
            "median": statistics.median(vals),
            "min": min(vals), "max": max(vals),
            "n_datasets": len(vals),
        })
    return rows
