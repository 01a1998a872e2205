"""Metrics (RMSE, AUC, AUNU), the outer cross-validated benchmark loop,
corrected resample t-tests, and per-dataset dominance relations between
encoder conditions."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, asdict, field

import numpy as np
from scipy import stats

from .encoders import EncoderSpec, apply_hct_routing
from .learners import LearnerSpec
from .pipeline import fit_pipeline
from .tabular import DataTable, stratified_kfold

RECORD_SCHEMA_VERSION = 1


class DegenerateFold(Exception):
    """Test fold unusable for the metric (a class is absent)."""


def rmse(pred, truth) -> float:
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape or pred.size == 0:
        raise ValueError("inputs must be non-empty and equal length")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def auc(scores, labels) -> float:
    """Mann-Whitney AUC; tied positive-negative score pairs count 0.5."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateFold("both classes must be present")
    ranks = stats.rankdata(scores)
    wins = float(ranks[pos].sum()) - n_pos * (n_pos + 1) / 2.0
    return wins / (n_pos * n_neg)


def aunu(scores, labels, n_classes: int | None = None) -> float:
    """Unweighted mean of one-vs-rest AUCs over all classes."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if n_classes is None:
        n_classes = scores.shape[1]
    row_sums = scores.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > 1e-9):
        raise ValueError("score rows must sum to 1")
    aucs = []
    for c in range(n_classes):
        onevs = (labels == c).astype(int)
        if onevs.sum() == 0:
            raise DegenerateFold(f"class {c} absent from fold")
        aucs.append(auc(scores[:, c], onevs))
    return float(np.mean(aucs))


def corrected_ttest(diffs, n_train: int, n_test: int) -> tuple[float, float]:
    """Corrected resampled t-test: the variance of fold-wise differences is
    inflated by (1/J + n_test/n_train). Returns (t, one-sided p)."""
    diffs = np.asarray(diffs, dtype=float)
    J = len(diffs)
    if J < 2:
        raise ValueError("need at least 2 fold differences")
    dbar = float(diffs.mean())
    s2 = float(diffs.var(ddof=1))
    if np.all(diffs == diffs[0]):  # identical folds: fp-safe zero variance
        dbar = float(diffs[0])
        s2 = 0.0
    if s2 == 0.0:
        if dbar > 0:
            return math.inf, 0.0
        if dbar < 0:
            return -math.inf, 1.0
        return 0.0, 0.5
    t = dbar / math.sqrt((1.0 / J + n_test / n_train) * s2)
    p = float(stats.t.sf(t, df=J - 1))
    return t, p


# ---------------------------------------------------------------------------
# Benchmark loop


@dataclass
class BenchmarkRecord:
    dataset: str
    strategy: str
    hct: int
    glmm_folds: int
    condition: str
    learner: str
    fold: int
    metric: str
    value: float | None
    failed: bool
    error: str | None
    degenerate: bool
    n_train: int
    n_test: int
    encode_fit_s: float
    transform_s: float
    learner_fit_s: float
    predict_s: float
    seed: int
    schema_version: int = RECORD_SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @staticmethod
    def from_json(line: str) -> "BenchmarkRecord":
        return BenchmarkRecord(**json.loads(line))


def metric_name_for(task) -> str:
    return {"regression": "rmse", "binary": "auc",
            "multiclass": "aunu"}[task.kind]


def higher_is_better(metric: str) -> bool:
    return metric in ("auc", "aunu")


def hct_feasibility(table: DataTable, spec: EncoderSpec) -> str | None:
    """None when the condition is runnable, else a skip reason. Thresholded
    encoders must touch at least one feature; remove must delete at least
    one feature."""
    routing = apply_hct_routing(table, spec)
    if spec.strategy == "remove":
        if not any(a == "delete" for a in routing.actions.values()):
            return "hct-infeasible"
    elif spec.strategy not in ("one_hot", "dummy"):
        if not any(a == "encode" for a in routing.actions.values()):
            return "hct-infeasible"
    else:
        if not routing.actions:
            return "hct-infeasible"
    return None


def _evaluate_fold(table, train_idx, test_idx, enc_spec, learner_spec):
    train = table.take_rows(train_idx)
    test = table.take_rows(test_idx)
    fp = fit_pipeline(train, enc_spec, learner_spec)
    pred = fp.predict(test)
    truth = test.target.values
    metric = metric_name_for(table.task)
    degenerate = False
    if metric == "rmse":
        value = rmse(pred, truth)
    else:
        classes = fp.learner.classes
        code_of = {c: j for j, c in enumerate(classes)}
        try:
            if metric == "auc":
                pos = classes[1]
                value = auc(pred[:, code_of[pos]],
                            (truth == pos).astype(int))
            else:
                labels = np.array([code_of.get(int(c), -1) for c in truth])
                if np.any(labels < 0):
                    raise DegenerateFold("test class unseen in training")
                value = aunu(pred, labels, n_classes=len(classes))
        except DegenerateFold:
            value = None
            degenerate = True
    timings = dict(fp.timings)
    return value, degenerate, timings


def run_benchmark(datasets, encoder_specs, learner_specs, n_folds: int,
                  seed: int, record_timings: bool = True,
                  workers: int = 1) -> tuple[list[BenchmarkRecord], list[dict]]:
    """Run the full (dataset x encoder x learner x fold) grid.

    ``datasets`` is a list of (name, DataTable). Per-condition failures are
    recorded with a failure flag and the run continues. Returns the records
    plus a list of skipped conditions with reasons.
    """
    tasks = []
    skipped = []
    for d_idx, (name, table) in enumerate(datasets):
        fold_seed = _derive_seed(seed, d_idx)
        assignment = stratified_kfold(table, n_folds, fold_seed)
        for e_idx, enc in enumerate(encoder_specs):
            reason = hct_feasibility(table, enc)
            if reason is not None:
                skipped.append({"dataset": name, "condition": enc.label,
                                "hct": enc.hct, "reason": reason})
                continue
            for l_idx, lrn in enumerate(learner_specs):
                for fold in range(n_folds):
                    cond_seed = _derive_seed(seed, d_idx, e_idx, l_idx, fold)
                    tasks.append((name, table, assignment, enc, lrn, fold,
                                  cond_seed, record_timings))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_task, tasks))
    else:
        records = [_run_task(t) for t in tasks]
    return records, skipped


def _derive_seed(*parts) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _run_task(task) -> BenchmarkRecord:
    (name, table, assignment, enc, lrn, fold, cond_seed,
     record_timings) = task
    train_idx, test_idx = assignment.train_test(fold)
    enc_seeded = EncoderSpec(enc.strategy, enc.hct, enc.glmm_folds,
                             seed=cond_seed,
                             relative_frequency=enc.relative_frequency,
                             impact_epsilon=enc.impact_epsilon,
                             shuffle_integers=enc.shuffle_integers)
    metric = metric_name_for(table.task)
    base = dict(dataset=name, strategy=enc.strategy, hct=enc.hct,
                glmm_folds=enc.glmm_folds, condition=enc.label,
                learner=lrn.kind, fold=fold, metric=metric,
                n_train=len(train_idx), n_test=len(test_idx), seed=cond_seed)
    t0 = time.perf_counter()
    try:
        value, degenerate, timings = _evaluate_fold(
            table, train_idx, test_idx, enc_seeded, lrn)
        rec = BenchmarkRecord(
            value=value, failed=False, error=None, degenerate=degenerate,
            encode_fit_s=timings.get("encode_fit_s", 0.0),
            transform_s=timings.get("predict_transform_s", 0.0),
            learner_fit_s=timings.get("learner_fit_s", 0.0),
            predict_s=timings.get("predict_s", 0.0), **base)
    except Exception as exc:  # per-condition failure, run continues
        rec = BenchmarkRecord(
            value=None, failed=True, error=f"{type(exc).__name__}: {exc}",
            degenerate=False, encode_fit_s=0.0, transform_s=0.0,
            learner_fit_s=0.0, predict_s=0.0, **base)
    if not record_timings:
        rec.encode_fit_s = rec.transform_s = 0.0
        rec.learner_fit_s = rec.predict_s = 0.0
    return rec


def write_records(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


def read_records(path) -> list[BenchmarkRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return [BenchmarkRecord.from_json(line) for line in fh
                if line.strip()]


# ---------------------------------------------------------------------------
# Dominance relations


@dataclass
class Relation:
    labels: list[str]
    beats: np.ndarray  # beats[i, j] = condition i significantly beats j

    def __post_init__(self):
        self.beats = np.asarray(self.beats, dtype=bool)
        if np.any(np.diag(self.beats)):
            raise ValueError("relation diagonal must be false")
        if np.any(self.beats & self.beats.T):
            raise ValueError("mutual dominance is impossible")


def build_relation(fold_values: dict, n_train: int, n_test: int,
                   alpha: float = 0.05,
                   higher_better: bool = True) -> tuple[Relation, list[str]]:
    """Pairwise corrected t-tests between conditions sharing fold splits.

    ``fold_values`` maps condition label -> per-fold metric values (or None
    for failed/degenerate folds, which exclude the condition). Returns the
    relation plus the excluded labels.
    """
    excluded = [lab for lab, vals in fold_values.items()
                if any(v is None for v in vals)]
    labels = [lab for lab in fold_values if lab not in excluded]
    if len(labels) < 2:
        raise ValueError("need at least 2 complete conditions")
    m = len(labels)
    beats = np.zeros((m, m), dtype=bool)
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            vi = np.asarray(fold_values[labels[i]], dtype=float)
            vj = np.asarray(fold_values[labels[j]], dtype=float)
            diffs = vi - vj if higher_better else vj - vi
            _, p = corrected_ttest(diffs, n_train, n_test)
            beats[i, j] = p < alpha
    return Relation(labels, beats), excluded
