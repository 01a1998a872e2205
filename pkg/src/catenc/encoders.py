"""Target-agnostic encoders (integer, frequency, indicator, hash, remove)
plus the high-cardinality-threshold routing that decides which columns each
strategy touches. Target-based sub-encoders plug in from target_encoders."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tabular import Column, DataTable

OTHER_LEVEL = "__OTHER__"

STRATEGIES = ("integer", "frequency", "one_hot", "dummy", "hash", "leaf",
              "impact", "glmm", "remove")
# strategies applied only to columns above the threshold
THRESHOLDED = ("integer", "frequency", "hash", "leaf", "impact", "glmm")


@dataclass(frozen=True)
class EncoderSpec:
    strategy: str
    hct: int = 25
    glmm_folds: int = 0      # 0 = noCV
    seed: int = 0
    relative_frequency: bool = False
    impact_epsilon: float = 1e-4
    shuffle_integers: bool = False

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.hct < 2:
            raise ValueError("hct must be >= 2")
        if self.glmm_folds != 0 and not 2 <= self.glmm_folds <= 20:
            raise ValueError("glmm_folds must be 0 or in 2..20")

    @property
    def label(self) -> str:
        if self.strategy == "glmm":
            cv = "noCV" if self.glmm_folds == 0 else f"{self.glmm_folds}CV"
            return f"glmm-{cv}"
        return self.strategy


@dataclass(frozen=True)
class RoutingPlan:
    # column name -> "encode" | "onehot_later" | "delete"
    actions: dict


def apply_hct_routing(table: DataTable, spec: EncoderSpec) -> RoutingPlan:
    """Decide what the strategy does to each categorical feature column.

    Thresholded strategies encode columns with more than ``hct`` observed
    training levels and leave the rest for the final one-hot step; indicator
    strategies encode every categorical column (collapsing at ``hct``);
    remove deletes the high-cardinality columns.
    """
    actions = {}
    for col in table.feature_columns():
        if col.kind != "cat":
            continue
        n_levels = int((col.level_counts() > 0).sum())
        if spec.strategy in ("one_hot", "dummy"):
            actions[col.name] = "encode"
        elif spec.strategy == "remove":
            actions[col.name] = "delete" if n_levels > spec.hct else "onehot_later"
        else:
            actions[col.name] = "encode" if n_levels > spec.hct else "onehot_later"
    return RoutingPlan(actions)


# ---------------------------------------------------------------------------
# Sub-encoders. Each is fit on one training column and knows how to transform
# any column with the same level dictionary, plus its Imputation-II fallback.


class IntegerSubEncoder:
    """Levels map to 1..L in first-appearance order (optionally permuted by
    seed); unseen levels become missing and are later imputed to the mode
    level's integer."""

    def __init__(self, col: Column, seed: int, shuffle: bool):
        counts = col.level_counts()
        observed = [i for i in range(len(col.levels)) if counts[i] > 0]
        values = np.arange(1, len(observed) + 1)
        if shuffle:
            values = np.random.default_rng(seed).permutation(values)
        self.mapping = {code: int(v) for code, v in zip(observed, values)}
        mode_code = observed[int(np.argmax(counts[observed]))]
        self.fallback = float(self.mapping[mode_code])
        self.name = f"{col.name}.int"

    def transform(self, col: Column) -> list[Column]:
        vals = np.array([self.mapping.get(int(c), np.nan)
                         for c in col.values], dtype=float)
        return [Column(self.name, "num", vals)]

    def fallbacks(self) -> dict:
        return {self.name: self.fallback}


class FrequencySubEncoder:
    """Level -> training frequency (absolute by default); unseen -> 1 (or
    1/N when relative)."""

    def __init__(self, col: Column, relative: bool):
        counts = col.level_counts()
        n = int(counts.sum())
        if relative:
            self.mapping = {i: counts[i] / n for i in range(len(col.levels))
                            if counts[i] > 0}
            self.unseen = 1.0 / n
        else:
            self.mapping = {i: float(counts[i]) for i in range(len(col.levels))
                            if counts[i] > 0}
            self.unseen = 1.0
        self.name = f"{col.name}.freq"

    def transform(self, col: Column) -> list[Column]:
        vals = np.array([self.mapping.get(int(c), self.unseen)
                         for c in col.values], dtype=float)
        return [Column(self.name, "num", vals)]

    def fallbacks(self) -> dict:
        return {}


class IndicatorSubEncoder:
    """One-hot or dummy coding with rare-level collapsing.

    The hct-1 most frequent levels are kept (ties by first appearance), the
    rest collapse into OTHER. Dummy drops the alphabetically first kept level
    as reference and maps unseen levels to the training mode; one-hot maps
    unseen levels to the zero vector.
    """

    def __init__(self, col: Column, variant: str, hct: int):
        counts = col.level_counts()
        if OTHER_LEVEL in col.levels and counts[col.levels.index(OTHER_LEVEL)] > 0:
            raise ValueError(
                f"column {col.name!r} already uses level {OTHER_LEVEL!r}")
        observed = [i for i in range(len(col.levels)) if counts[i] > 0]
        self.observed = set(observed)
        self.collapsed = len(observed) > hct - 1
        if self.collapsed:
            by_freq = sorted(observed, key=lambda i: (-counts[i], i))
            kept = sorted(by_freq[:hct - 1])  # first-appearance order
        else:
            kept = observed
        self.kept = kept
        self.mode_code = observed[int(np.argmax(counts[observed]))]
        self.variant = variant
        self.base = col.name
        blocks = [(code, col.levels[code]) for code in kept]
        if self.collapsed:
            blocks.append((None, OTHER_LEVEL))
        if variant == "dummy":
            ref_label = min(col.levels[c] for c in kept)
            blocks = [b for b in blocks if b[1] != ref_label]
            self.reference = ref_label
        else:
            self.reference = None
        self.blocks = blocks  # (level code or None for OTHER, label)

    def transform(self, col: Column) -> list[Column]:
        codes = col.values
        seen = np.isin(codes, list(self.observed))
        if self.variant == "dummy":
            codes = np.where(seen, codes, self.mode_code)
            seen = np.ones_like(seen)
        kept_arr = np.isin(codes, self.kept)
        out = []
        for code, label in self.blocks:
            if code is None:
                ind = (seen & ~kept_arr).astype(float)
            else:
                ind = ((codes == code) & seen).astype(float)
            out.append(Column(f"{self.base}={label}", "num", ind))
        return out

    def fallbacks(self) -> dict:
        return {}


class HashSubEncoder:
    """Indicator columns via a seeded 64-bit FNV-1a hash of the level label.

    Level l fires column (hash(l) mod hash_size); columns constant in
    training are removed for both training and prediction. Unseen levels are
    hashed at prediction time with the same function.
    """

    def __init__(self, col: Column, hash_size: int, seed: int):
        if hash_size < 1:
            raise ValueError("hash_size must be >= 1")
        self.hash_size = hash_size
        self.seed = seed
        self.base = col.name
        counts = col.level_counts()
        observed = [i for i in range(len(col.levels)) if counts[i] > 0]
        buckets = {code: self.bucket(col.levels[code]) for code in observed}
        n = int(counts.sum())
        hits = np.zeros(hash_size)
        for code in observed:
            hits[buckets[code]] += counts[code]
        # keep only columns non-constant in training (neither all-0 nor all-1)
        self.kept_buckets = [j for j in range(hash_size) if 0 < hits[j] < n]

    def bucket(self, label: str) -> int:
        return (fnv1a64(label) ^ (self.seed & 0xFFFFFFFFFFFFFFFF)) % self.hash_size

    def transform(self, col: Column) -> list[Column]:
        buckets = np.array([self.bucket(col.levels[int(c)]) if c >= 0 else -1
                            for c in col.values])
        out = []
        for j in self.kept_buckets:
            out.append(Column(f"{self.base}.hash{j + 1}", "num",
                              (buckets == j).astype(float)))
        return out

    def fallbacks(self) -> dict:
        return {}


def fnv1a64(label: str) -> int:
    h = 0xCBF29CE484222325
    for byte in label.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


# ---------------------------------------------------------------------------
# Whole-table fitted encoder


@dataclass
class FittedEncoder:
    spec: EncoderSpec
    routing: RoutingPlan
    subs: dict  # column name -> fitted sub-encoder
    train_outputs: dict  # column name -> list[Column] used for the train table

    def transform(self, table: DataTable) -> DataTable:
        """Prediction-phase transform; never mutates the input. Unseen-level
        cells that defer to Imputation II come back as missing."""
        features = []
        for col in table.feature_columns():
            action = self.routing.actions.get(col.name)
            if action is None or action == "onehot_later":
                features.append(col)
            elif action == "delete":
                continue
            else:
                features.extend(self.subs[col.name].transform(col))
        return table.with_feature_columns(features)

    def training_table(self, table: DataTable) -> DataTable:
        """Fit-time training encoding (cross-fitted columns where the
        sub-encoder uses CV)."""
        features = []
        for col in table.feature_columns():
            action = self.routing.actions.get(col.name)
            if action is None or action == "onehot_later":
                features.append(col)
            elif action == "delete":
                continue
            else:
                features.extend(self.train_outputs[col.name])
        return table.with_feature_columns(features)

    def fallbacks(self) -> dict:
        out = {}
        for sub in self.subs.values():
            out.update(sub.fallbacks())
        return out


def fit_encoder(table: DataTable, spec: EncoderSpec) -> tuple[FittedEncoder, DataTable]:
    """Fit the strategy on post-Imputation-I training data.

    Returns the fitted encoder plus the encoded training table (identical to
    ``transform(table)`` except for cross-fitted target encoders).
    """
    from . import target_encoders  # local import to avoid a cycle

    routing = apply_hct_routing(table, spec)
    subs = {}
    train_outputs = {}
    for ci, col in enumerate(table.feature_columns()):
        if routing.actions.get(col.name) != "encode":
            continue
        if spec.strategy == "integer":
            sub = IntegerSubEncoder(col, spec.seed, spec.shuffle_integers)
        elif spec.strategy == "frequency":
            sub = FrequencySubEncoder(col, spec.relative_frequency)
        elif spec.strategy in ("one_hot", "dummy"):
            sub = IndicatorSubEncoder(col, spec.strategy, spec.hct)
        elif spec.strategy == "hash":
            sub = HashSubEncoder(col, spec.hct, spec.seed)
        elif spec.strategy == "impact":
            sub = target_encoders.ImpactSubEncoder(
                col, table.target, table.task, spec.impact_epsilon)
        elif spec.strategy == "leaf":
            sub = target_encoders.LeafSubEncoder(
                col, table.target, table.task,
                _column_seed(spec.seed, ci))
        elif spec.strategy == "glmm":
            sub = target_encoders.GlmmSubEncoder(
                col, table.target, table.task, spec.glmm_folds,
                _column_seed(spec.seed, ci))
        else:
            raise ValueError(f"strategy {spec.strategy!r} fits nothing")
        subs[col.name] = sub
        if hasattr(sub, "train_output"):
            train_outputs[col.name] = sub.train_output
        else:
            train_outputs[col.name] = sub.transform(col)
    fitted = FittedEncoder(spec, routing, subs, train_outputs)
    return fitted, fitted.training_table(table)


def _column_seed(seed: int, column_index: int) -> int:
    return int(np.random.SeedSequence([seed, column_index]).generate_state(1)[0])
