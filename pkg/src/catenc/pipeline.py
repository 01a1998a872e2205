"""The six-stage preprocessing-plus-learner pipeline: Imputation I, encoding,
Imputation II, constant dropping, final one-hot, learner."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import learners, tabular
from .encoders import EncoderSpec, FittedEncoder, fit_encoder
from .learners import LearnerSpec
from .tabular import DataTable


@dataclass
class FittedPipeline:
    imputation: tabular.ImputationPlan
    encoder: FittedEncoder
    drop: tabular.DropPlan
    onehot: tabular.OneHotPlan
    learner: object
    feature_names: list[str]
    timings: dict

    def transform(self, table: DataTable) -> DataTable:
        """Replay the preprocessing stages on new data; the result is fully
        numeric with zero missing values."""
        out = self.imputation.apply(table)
        out = self.encoder.transform(out)
        out = tabular.impute_stage2(out, self.encoder.fallbacks())
        out = self.drop.apply(out)
        out = self.onehot.apply(out)
        return out

    def predict(self, table: DataTable) -> np.ndarray:
        t0 = time.perf_counter()
        transformed = self.transform(table)
        t1 = time.perf_counter()
        X, _ = tabular.feature_matrix(transformed)
        pred = self.learner.predict(X)
        self.timings["predict_transform_s"] = t1 - t0
        self.timings["predict_s"] = time.perf_counter() - t1
        return pred


def fit_pipeline(train: DataTable, enc_spec: EncoderSpec,
                 learner_spec: LearnerSpec) -> FittedPipeline:
    out, plan1 = tabular.impute_stage1(train)
    t0 = time.perf_counter()
    fitted_enc, out = fit_encoder(out, enc_spec)
    t1 = time.perf_counter()
    out = tabular.impute_stage2(out, fitted_enc.fallbacks())
    out, drop = tabular.drop_constant_columns(out)
    out, onehot = tabular.final_one_hot(out)
    X, names = tabular.feature_matrix(out)
    t2 = time.perf_counter()
    learner = learners.fit_learner(X, out.target, out.task, learner_spec)
    t3 = time.perf_counter()
    return FittedPipeline(plan1, fitted_enc, drop, onehot, learner, names,
                          {"encode_fit_s": t1 - t0, "learner_fit_s": t3 - t2})
