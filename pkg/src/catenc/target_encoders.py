"""Target-based encoders: impact encoding, leaf encoding (via cart), and
GLMM encoding (via glmm) with the cross-fitting wrapper that breaks
encoder-induced target leakage on the training data."""

from __future__ import annotations

import math

import numpy as np

from . import cart, glmm
from .tabular import Column, DataTable, Task


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def _observed_classes(target: Column, task: Task) -> list[int]:
    counts = target.level_counts()
    classes = [i for i in range(len(target.levels)) if counts[i] > 0]
    if len(classes) < task.n_classes:
        raise ValueError("a target class is absent from training data")
    return classes


def _encoder_folds(target: Column, task: Task, n_folds: int,
                   seed: int) -> np.ndarray:
    """Fold ids for cross-fitting; stratified for classification."""
    n = target.n_rows
    rng = np.random.default_rng(seed)
    fold_of_row = np.empty(n, dtype=np.int64)
    if task.is_classification:
        t = 0
        for cls in range(len(target.levels)):
            members = np.flatnonzero(target.values == cls)
            if members.size == 0:
                continue
            for row in rng.permutation(members):
                fold_of_row[row] = t % n_folds
                t += 1
    else:
        for t, row in enumerate(rng.permutation(n)):
            fold_of_row[row] = t % n_folds
    return fold_of_row


class ImpactSubEncoder:
    """Smoothed, centered conditional target statistics per level.

    Regression encodes the shrunken centered level mean; classification
    encodes, per class, the smoothed centered log-odds. Unseen levels map to
    0, the centered global value.
    """

    def __init__(self, col: Column, target: Column, task: Task,
                 epsilon: float):
        if epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        self.base = col.name
        codes = col.values
        counts = col.level_counts()
        observed = [i for i in range(len(col.levels)) if counts[i] > 0]
        n = target.n_rows
        if task.kind == "regression":
            y = target.values
            ybar = float(y.mean())
            self.maps = [{}]
            self.names = [f"{col.name}.impact"]
            for l in observed:
                s = float(y[codes == l].sum())
                self.maps[0][l] = (s + epsilon * ybar) / (counts[l] + epsilon) - ybar
        else:
            classes = _observed_classes(target, task)
            self.maps = []
            self.names = []
            for c in classes:
                n_c = int((target.values == c).sum())
                prior = n_c / n
                mapping = {}
                for l in observed:
                    sel = codes == l
                    n_lc = int((target.values[sel] == c).sum())
                    p = (n_lc + epsilon * prior) / (counts[l] + epsilon)
                    mapping[l] = _logit(p) - _logit(prior)
                self.maps.append(mapping)
                self.names.append(f"{col.name}.impact.{target.levels[c]}")

    def transform(self, col: Column) -> list[Column]:
        out = []
        for name, mapping in zip(self.names, self.maps):
            vals = np.array([mapping.get(int(c), 0.0) for c in col.values])
            out.append(Column(name, "num", vals))
        return out

    def fallbacks(self) -> dict:
        return {}


class LeafSubEncoder:
    """Levels map to the terminal node of a single-feature CART; the output
    stays categorical and is one-hot encoded by the final pipeline step.
    Unseen levels go to the terminal node with most training observations."""

    def __init__(self, col: Column, target: Column, task: Task, seed: int):
        self.base = col.name
        counts = col.level_counts()
        first_seen = [i for i in range(len(col.levels)) if counts[i] > 0]
        y = target.values
        self.tree = cart.grow_and_prune(
            col.values, y, task.kind, seed,
            n_classes=len(target.levels) if task.is_classification else 0,
            first_seen=first_seen)
        self.node_labels = [f"node{k}" for k in sorted(self.tree.leaf_counts)]
        self.name = f"{col.name}.leaf"

    def transform(self, col: Column) -> list[Column]:
        vals = np.array([cart.assign_leaf(self.tree, int(c)) - 1
                         for c in col.values], dtype=np.int64)
        return [Column(self.name, "cat", vals, self.node_labels)]

    def fallbacks(self) -> dict:
        return {}


class GlmmSubEncoder:
    """Random-intercept target encoding on the link scale.

    The encoded value of level l is beta0 + u_l (identity link for
    regression, per-class logit for classification); unseen levels encode to
    beta0. With n_folds >= 2 the training rows are encoded by cross-fitted
    sub-models, while prediction always uses the single full-data fit.
    """

    def __init__(self, col: Column, target: Column, task: Task,
                 n_folds: int, seed: int):
        if n_folds == 1 or n_folds < 0 or n_folds > 20:
            raise ValueError("n_folds must be 0 or in 2..20")
        self.base = col.name
        self.task = task
        codes = col.values
        if task.kind == "regression":
            self.fits = [glmm.fit_gaussian_ranint(codes, target.values)]
            self.names = [f"{col.name}.glmm"]
            self.class_codes = [None]
        else:
            classes = _observed_classes(target, task)
            self.fits = []
            self.names = []
            self.class_codes = classes
            for c in classes:
                y01 = (target.values == c).astype(float)
                self.fits.append(glmm.fit_binomial_ranint(codes, y01))
                self.names.append(f"{col.name}.glmm.{target.levels[c]}")
        if n_folds >= 2:
            self.train_output = self._cross_fit(col, target, task, n_folds,
                                                seed)
        else:
            self.train_output = self.transform(col)

    def _cross_fit(self, col, target, task, n_folds, seed):
        fold_of_row = _encoder_folds(target, task, n_folds, seed)
        n = col.n_rows
        enc = np.zeros((n, len(self.names)))
        for f in range(n_folds):
            tr = fold_of_row != f
            te = fold_of_row == f
            codes_tr = col.values[tr]
            for j, cls in enumerate(self.class_codes):
                if cls is None:
                    sub = glmm.fit_gaussian_ranint(codes_tr, target.values[tr])
                else:
                    y01 = (target.values[tr] == cls).astype(float)
                    if not (np.any(y01 == 1) and np.any(y01 == 0)):
                        raise ValueError(
                            "a cross-fit fold is missing a target class")
                    sub = glmm.fit_binomial_ranint(codes_tr, y01)
                enc[te, j] = [sub.encoded_value(int(c))
                              for c in col.values[te]]
        return [Column(name, "num", enc[:, j].copy())
                for j, name in enumerate(self.names)]

    def transform(self, col: Column) -> list[Column]:
        out = []
        for name, fit in zip(self.names, self.fits):
            vals = np.array([fit.encoded_value(int(c)) for c in col.values])
            out.append(Column(name, "num", vals))
        return out

    def fallbacks(self) -> dict:
        return {}


# ---------------------------------------------------------------------------
# Functional entry points mirroring the sub-encoder constructors.


def fit_impact(col: Column, target: Column, task: Task,
               epsilon: float = 1e-4) -> ImpactSubEncoder:
    return ImpactSubEncoder(col, target, task, epsilon)


def fit_leaf(col: Column, target: Column, task: Task,
             seed: int = 0) -> LeafSubEncoder:
    return LeafSubEncoder(col, target, task, seed)


def fit_glmm_encoder(col: Column, target: Column, task: Task,
                     n_folds: int = 0, seed: int = 0) -> GlmmSubEncoder:
    return GlmmSubEncoder(col, target, task, n_folds, seed)


def cross_fit_encode(col: Column, target: Column, task: Task,
                     n_folds: int, seed: int = 0
                     ) -> tuple[list[Column], GlmmSubEncoder]:
    """Training encoding via leave-fold-out sub-models plus the full-data
    encoder used at prediction time."""
    if n_folds < 2:
        raise ValueError("n_folds must be >= 2")
    enc = GlmmSubEncoder(col, target, task, n_folds, seed)
    return enc.train_output, enc
