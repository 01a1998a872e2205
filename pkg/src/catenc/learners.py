"""Post-encoding learners: featureless baseline, kNN with an information
gain feature filter, and ridge (linear / logistic) with internal CV over the
penalty grid."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tabular import Column, Task

LEARNER_KINDS = ("featureless", "knn", "ridge")


@dataclass(frozen=True)
class LearnerSpec:
    kind: str
    k: int = 15
    filter_top: int | None = None
    ridge_cv_folds: int = 5
    n_lambdas: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.kind not in LEARNER_KINDS:
            raise ValueError(f"unknown learner {self.kind!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.filter_top is not None and self.filter_top < 1:
            raise ValueError("filter_top must be >= 1")

    @staticmethod
    def knn(k: int = 15, filter_top: int | None = 25, seed: int = 0):
        return LearnerSpec("knn", k=k, filter_top=filter_top, seed=seed)


def _class_codes(target: Column) -> tuple[np.ndarray, list[int]]:
    counts = target.level_counts()
    classes = [i for i in range(len(target.levels)) if counts[i] > 0]
    return target.values, classes


def info_gain_filter(X: np.ndarray, target: Column, task: Task,
                     top: int) -> list[int]:
    """Indices of the ``top`` features by mutual information with the target.

    Features (and a regression target) are discretized into 10
    equal-frequency bins; MI is computed in nats. Ties keep column order.
    """
    n, p = X.shape
    if top >= p:
        return list(range(p))
    if task.is_classification:
        ybins = target.values.astype(int)
    else:
        ybins = _equal_frequency_bins(target.values)
    mis = [_mutual_information(_equal_frequency_bins(X[:, j]), ybins)
           for j in range(p)]
    order = sorted(range(p), key=lambda j: (-mis[j], j))
    return sorted(order[:top])


def _equal_frequency_bins(x: np.ndarray, n_bins: int = 10) -> np.ndarray:
    qs = np.quantile(x, np.linspace(0, 1, n_bins + 1)[1:-1])
    return np.searchsorted(qs, x, side="left")


def _mutual_information(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.int64) - a.min()
    b = np.asarray(b, dtype=np.int64) - b.min()
    na, nb = a.max() + 1, b.max() + 1
    joint = np.bincount(a * nb + b, minlength=na * nb).reshape(na, nb)
    joint = joint / joint.sum()
    pa = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    mask = joint > 0
    return float(np.sum(joint[mask] * np.log(joint[mask]
                                             / (pa @ pb)[mask])))


class FeaturelessLearner:
    """Predicts the training mean (regression) or the training class
    frequencies (classification), ignoring all features."""

    def __init__(self, X, target: Column, task: Task, spec: LearnerSpec):
        self.task = task
        if task.is_classification:
            _, classes = _class_codes(target)
            counts = target.level_counts()[classes].astype(float)
            self.scores = counts / counts.sum()
            self.classes = classes
        else:
            self.mean = float(target.values.mean())

    def predict(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        if self.task.is_classification:
            return np.tile(self.scores, (n, 1))
        return np.full(n, self.mean)


class KnnLearner:
    """Brute-force kNN on z-standardized features (zero-variance columns map
    to 0); distance ties break by training row order."""

    def __init__(self, X, target: Column, task: Task, spec: LearnerSpec):
        if spec.k > X.shape[0]:
            raise ValueError("k exceeds number of training rows")
        self.task = task
        self.k = spec.k
        if spec.filter_top is not None and X.shape[1] > 0:
            self.selected = info_gain_filter(X, target, task, spec.filter_top)
        else:
            self.selected = list(range(X.shape[1]))
        Xs = X[:, self.selected]
        self.mu = Xs.mean(axis=0) if Xs.size else np.zeros(0)
        sd = Xs.std(axis=0) if Xs.size else np.zeros(0)
        self.sd = np.where(sd > 0, sd, 1.0)
        self.zero_var = sd == 0
        self.train = self._standardize(Xs)
        if task.is_classification:
            self.y, self.classes = _class_codes(target)
        else:
            self.y = target.values

    def _standardize(self, Xs):
        Z = (Xs - self.mu) / self.sd
        if Z.size:
            Z[:, self.zero_var] = 0.0
        return Z

    def predict(self, X: np.ndarray) -> np.ndarray:
        Z = self._standardize(X[:, self.selected])
        n = Z.shape[0]
        sq = (np.sum(Z ** 2, axis=1)[:, None]
              + np.sum(self.train ** 2, axis=1)[None, :]
              - 2.0 * Z @ self.train.T)
        d = np.sqrt(np.maximum(sq, 0.0))
        nn = np.argsort(d, axis=1, kind="stable")[:, :self.k]
        if self.task.is_classification:
            out = np.zeros((n, len(self.classes)))
            ynn = self.y[nn]
            for j, cls in enumerate(self.classes):
                out[:, j] = np.mean(ynn == cls, axis=1)
            return out
        return self.y[nn].mean(axis=1)


class RidgeLearner:
    """L2-penalized linear (regression) or logistic (classification, one vs
    rest) model with an unpenalized intercept; the penalty comes from a
    20-point log grid by internal 5-fold CV."""

    def __init__(self, X, target: Column, task: Task, spec: LearnerSpec):
        self.task = task
        n, p = X.shape
        self.mu = X.mean(axis=0) if p else np.zeros(0)
        sd = X.std(axis=0) if p else np.zeros(0)
        self.sd = np.where(sd > 0, sd, 1.0)
        Z = (X - self.mu) / self.sd
        scale = float(np.trace(Z.T @ Z)) / max(p, 1) if p else 1.0
        scale = max(scale, 1e-12)
        lambdas = scale * np.logspace(-6, 3, spec.n_lambdas)
        rng = np.random.default_rng(spec.seed)
        folds = rng.permutation(n) % min(spec.ridge_cv_folds, n)
        if task.is_classification:
            _, self.classes = _class_codes(target)
            ys = [(target.values == c).astype(float) for c in self.classes]
            best = self._cv_select(Z, ys, folds, lambdas, logistic=True)
            self.coefs = [self._fit_logistic(Z, y01, best) for y01 in ys]
        else:
            y = target.values.astype(float)
            best = self._cv_select(Z, [y], folds, lambdas, logistic=False)
            self.coefs = [self._fit_linear(Z, y, best)]
        self.lambda_ = best

    def _cv_select(self, Z, ys, folds, lambdas, logistic):
        n_folds = folds.max() + 1
        losses = np.zeros(len(lambdas))
        for f in range(n_folds):
            tr, te = folds != f, folds == f
            for k, lam in enumerate(lambdas):
                for y in ys:
                    if logistic:
                        if y[tr].min() == y[tr].max():
                            continue
                        b = self._fit_logistic(Z[tr], y[tr], lam)
                        eta = b[0] + Z[te] @ b[1:]
                        p = 1 / (1 + np.exp(-eta))
                        p = np.clip(p, 1e-12, 1 - 1e-12)
                        losses[k] -= float(np.sum(y[te] * np.log(p)
                                                  + (1 - y[te]) * np.log(1 - p)))
                    else:
                        b = self._fit_linear(Z[tr], y[tr], lam)
                        r = y[te] - (b[0] + Z[te] @ b[1:])
                        losses[k] += float(np.sum(r ** 2))
        return lambdas[int(np.argmin(losses))]

    @staticmethod
    def _fit_linear(Z, y, lam):
        n, p = Z.shape
        A = np.column_stack([np.ones(n), Z])
        G = A.T @ A
        G[1:, 1:] += lam * np.eye(p)
        return np.linalg.solve(G, A.T @ y)

    @staticmethod
    def _fit_logistic(Z, y, lam, max_iter=50, tol=1e-10):
        n, p = Z.shape
        A = np.column_stack([np.ones(n), Z])
        b = np.zeros(p + 1)
        pen = lam * np.eye(p + 1)
        pen[0, 0] = 0.0
        for _ in range(max_iter):
            eta = A @ b
            prob = 1 / (1 + np.exp(-eta))
            w = np.maximum(prob * (1 - prob), 1e-10)
            g = A.T @ (y - prob) - pen @ b
            H = (A * w[:, None]).T @ A + pen
            step = np.linalg.solve(H, g)
            b = b + step
            if np.max(np.abs(step)) < tol:
                break
        return b

    def predict(self, X: np.ndarray) -> np.ndarray:
        Z = (X - self.mu) / self.sd
        if not self.task.is_classification:
            b = self.coefs[0]
            return b[0] + Z @ b[1:]
        scores = np.column_stack(
            [1 / (1 + np.exp(-(b[0] + Z @ b[1:]))) for b in self.coefs])
        total = scores.sum(axis=1, keepdims=True)
        uniform = np.full_like(scores, 1.0 / scores.shape[1])
        return np.where(total > 0, scores / np.where(total > 0, total, 1),
                        uniform)


_LEARNERS = {
    "featureless": FeaturelessLearner,
    "knn": KnnLearner,
    "ridge": RidgeLearner,
}


def fit_learner(X: np.ndarray, target: Column, task: Task,
                spec: LearnerSpec):
    return _LEARNERS[spec.kind](X, target, task, spec)
