"""A small benchmark grid end to end: encoders x learners x CV folds.

Builds one synthetic regression dataset with a high-cardinality signal
column, runs the grid, and prints the per-condition summary plus the
runtime-ratio table (one-hot is the reference, its row is identically 1).
"""

import numpy as np

from catenc.encoders import EncoderSpec
from catenc.evaluation import run_benchmark
from catenc.learners import LearnerSpec
from catenc.reports import performance_summary, runtime_ratios
from catenc.tabular import Column, DataTable, Task

rng = np.random.default_rng(11)


def make_dataset(seed):
    r = np.random.default_rng(seed)
    n = 600
    codes = r.integers(0, 40, n)
    effects = r.normal(0, 2, 40)
    y = effects[codes] + r.normal(0, 1, n)
    cat = Column("group", "cat", codes, [f"g{i}" for i in range(40)])
    num = Column("x", "num", r.normal(size=n))
    target = Column("y", "num", y)
    return DataTable([cat, num, target], 2, Task("regression"))


datasets = [("d0", make_dataset(1)), ("d1", make_dataset(2))]
encoders = [EncoderSpec("one_hot", hct=25),
            EncoderSpec("integer", hct=25),
            EncoderSpec("impact", hct=25),
            EncoderSpec("glmm", hct=25, glmm_folds=5)]
learners = [LearnerSpec("ridge"), LearnerSpec.knn()]

records, skipped = run_benchmark(datasets, encoders, learners,
                                 n_folds=5, seed=0)
print(f"{len(records)} fold records, {len(skipped)} skipped conditions\n")

print(f"{'dataset':8} {'condition':10} {'learner':12} {'mean RMSE':>10}")
for row in performance_summary(records):
    print(f"{row['dataset']:8} {row['condition']:10} {row['learner']:12} "
          f"{row['mean']:>10.4f}")

print("\nRuntime relative to one-hot (median over datasets)")
for row in runtime_ratios(records):
    print(f"  {row['learner']:12} {row['condition']:10} "
          f"median {row['median']:.2f}  min {row['min']:.2f}  "
          f"max {row['max']:.2f}")
