"""Columnar data model: schema-driven CSV loading, fold splitting, profiling,
and the non-encoder preprocessing stages (imputation, constant dropping,
final one-hot expansion)."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

MISSING_LEVEL = "__MISSING__"
DEFAULT_NA_VALUES = ("", "NA")


class DatasetError(ValueError):
    """Raised for malformed CSV/schema input or inconsistent tables."""


@dataclass(frozen=True)
class Task:
    kind: str  # "regression" | "binary" | "multiclass"
    n_classes: int = 0

    @property
    def is_classification(self) -> bool:
        return self.kind in ("binary", "multiclass")


@dataclass
class Column:
    """One column of a DataTable.

    Categorical columns store integer codes into ``levels`` (missing cells
    are coded -1); numeric columns store floats (missing cells are NaN).
    Treated as immutable after construction.
    """

    name: str
    kind: str  # "cat" | "num"
    values: np.ndarray
    levels: list[str] | None = None
    missing_mask: np.ndarray | None = None

    def __post_init__(self):
        if self.missing_mask is None:
            if self.kind == "cat":
                mask = self.values < 0
            else:
                mask = np.isnan(self.values)
            self.missing_mask = mask
        if self.kind == "cat" and self.levels is None:
            raise DatasetError(f"categorical column {self.name!r} needs levels")

    @property
    def n_rows(self) -> int:
        return len(self.values)

    def level_counts(self) -> np.ndarray:
        """Observed frequency of each level (missing cells excluded)."""
        if self.kind != "cat":
            raise DatasetError(f"column {self.name!r} is not categorical")
        codes = self.values[~self.missing_mask]
        return np.bincount(codes, minlength=len(self.levels))

    def observed_levels(self) -> list[int]:
        """Level indices with at least one non-missing occurrence."""
        return [i for i, c in enumerate(self.level_counts()) if c > 0]

    def take(self, idx: np.ndarray) -> "Column":
        return Column(self.name, self.kind, self.values[idx],
                      self.levels, self.missing_mask[idx])


@dataclass
class DataTable:
    columns: list[Column]
    target_index: int
    task: Task

    def __post_init__(self):
        n = self.columns[0].n_rows
        for c in self.columns:
            if c.n_rows != n:
                raise DatasetError(f"column {c.name!r} length mismatch")
        tgt = self.target
        if tgt.missing_mask.any():
            raise DatasetError("target column contains missing values")
        if self.task.is_classification:
            observed = int((tgt.level_counts() > 0).sum())
            if observed < 2:
                raise DatasetError("classification target needs >= 2 classes")

    @property
    def n_rows(self) -> int:
        return self.columns[0].n_rows

    @property
    def target(self) -> Column:
        return self.columns[self.target_index]

    def feature_columns(self) -> list[Column]:
        return [c for i, c in enumerate(self.columns) if i != self.target_index]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def take_rows(self, idx: np.ndarray) -> "DataTable":
        return DataTable([c.take(idx) for c in self.columns],
                         self.target_index, self.task)

    def with_feature_columns(self, features: list[Column]) -> "DataTable":
        """New table with the same target but replaced feature columns."""
        cols = list(features)
        cols.insert(min(self.target_index, len(cols)), self.target)
        tgt_idx = min(self.target_index, len(features))
        return DataTable(cols, tgt_idx, self.task)


def _derive_task(target: Column, declared: str | None) -> Task:
    if target.kind == "num":
        task = Task("regression")
    else:
        n_classes = int((target.level_counts() > 0).sum())
        task = Task("binary" if n_classes == 2 else "multiclass", n_classes)
    if declared is not None and declared != task.kind:
        raise DatasetError(
            f"schema declares task {declared!r} but data implies {task.kind!r}")
    return task


def load_schema(schema_path) -> dict:
    with open(schema_path, "r", encoding="utf-8") as fh:
        schema = json.load(fh)
    if "columns" not in schema or "target" not in schema:
        raise DatasetError("schema must declare 'columns' and 'target'")
    return schema


def load_dataset(path, schema_path, na_values=DEFAULT_NA_VALUES) -> DataTable:
    """Load a CSV with a JSON schema sidecar declaring column kinds and target.

    Missing cells are those matching ``na_values`` or numeric parse failures.
    Level dictionaries are built in first-appearance order.
    """
    schema = load_schema(schema_path)
    kinds = {c["name"]: c["kind"] for c in schema["columns"]}
    names = [c["name"] for c in schema["columns"]]
    na_set = set(na_values)

    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty CSV")
        rows = [r for r in reader]
    if header != names:
        raise DatasetError(
            f"{path}: CSV columns {header} do not match schema columns {names}")
    for i, r in enumerate(rows):
        if len(r) != len(names):
            raise DatasetError(f"{path}: row {i + 2} has {len(r)} cells, "
                               f"expected {len(names)}")
    if not rows:
        raise DatasetError(f"{path}: no data rows")

    columns = []
    for j, name in enumerate(names):
        raw = [r[j] for r in rows]
        kind = kinds[name]
        if kind in ("cat", "categorical"):
            levels: list[str] = []
            index: dict[str, int] = {}
            codes = np.empty(len(raw), dtype=np.int64)
            for i, cell in enumerate(raw):
                if cell in na_set:
                    codes[i] = -1
                else:
                    code = index.get(cell)
                    if code is None:
                        code = len(levels)
                        index[cell] = code
                        levels.append(cell)
                    codes[i] = code
            columns.append(Column(name, "cat", codes, levels))
        elif kind in ("num", "numeric"):
            vals = np.empty(len(raw), dtype=float)
            for i, cell in enumerate(raw):
                if cell in na_set:
                    vals[i] = np.nan
                else:
                    try:
                        vals[i] = float(cell)
                    except ValueError:
                        vals[i] = np.nan
            columns.append(Column(name, "num", vals))
        else:
            raise DatasetError(f"unknown column kind {kind!r} for {name!r}")

    try:
        target_index = names.index(schema["target"])
    except ValueError:
        raise DatasetError(f"target {schema['target']!r} not in schema columns")
    target = columns[target_index]
    if target.missing_mask.any():
        raise DatasetError("target column has missing values")
    task = _derive_task(target, schema.get("task"))
    return DataTable(columns, target_index, task)


@dataclass(frozen=True)
class FoldAssignment:
    fold_of_row: np.ndarray
    n_folds: int
    seed: int

    def train_test(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        test = np.flatnonzero(self.fold_of_row == fold)
        train = np.flatnonzero(self.fold_of_row != fold)
        return train, test


def stratified_kfold(table: DataTable, n_folds: int, seed: int) -> FoldAssignment:
    """Deterministic k-fold split; stratified by class for classification.

    Fold sizes differ by at most one; for classification, per-class counts
    across folds also differ by at most one.
    """
    n = table.n_rows
    if n_folds < 2:
        raise ValueError("n_folds must be >= 2")
    if n_folds > n:
        raise ValueError("n_folds exceeds number of rows")
    rng = np.random.default_rng(seed)
    fold_of_row = np.empty(n, dtype=np.int64)
    if table.task.is_classification:
        codes = table.target.values
        t = 0
        for cls in range(len(table.target.levels)):
            members = np.flatnonzero(codes == cls)
            if members.size == 0:
                continue
            members = rng.permutation(members)
            for row in members:
                fold_of_row[row] = t % n_folds
                t += 1
    else:
        order = rng.permutation(n)
        for t, row in enumerate(order):
            fold_of_row[row] = t % n_folds
    return FoldAssignment(fold_of_row, n_folds, seed)


def normalized_entropy(column: Column) -> float:
    """Shannon entropy of level frequencies divided by log(level count).

    1 for a uniform distribution; by convention 0 for a single-level column.
    """
    counts = column.level_counts()
    counts = counts[counts > 0]
    if counts.size == 0:
        raise DatasetError(f"column {column.name!r} has no observed levels")
    if counts.size == 1:
        return 0.0
    p = counts / counts.sum()
    h = -float(np.sum(p * np.log(p)))
    return h / math.log(counts.size)


# ---------------------------------------------------------------------------
# Imputation I: pre-encoding missing value treatment


@dataclass(frozen=True)
class ColumnImputation:
    name: str
    action: str  # "missing_level" | "mode" | "mean"
    fill: float | int | None  # mode code or mean value; None for missing_level


@dataclass(frozen=True)
class ImputationPlan:
    actions: tuple[ColumnImputation, ...]

    def apply(self, table: DataTable) -> DataTable:
        by_name = {a.name: a for a in self.actions}
        columns = []
        for i, col in enumerate(table.columns):
            act = by_name.get(col.name) if i != table.target_index else None
            if act is None or not col.missing_mask.any():
                if act is not None and act.action == "missing_level":
                    col = _ensure_missing_level(col)
                columns.append(col)
                continue
            if act.action == "missing_level":
                col = _ensure_missing_level(col)
                code = col.levels.index(MISSING_LEVEL)
                vals = col.values.copy()
                vals[col.missing_mask] = code
                col = Column(col.name, "cat", vals, col.levels,
                             np.zeros(col.n_rows, dtype=bool))
            elif act.action == "mode":
                vals = col.values.copy()
                vals[col.missing_mask] = act.fill
                col = Column(col.name, "cat", vals, col.levels,
                             np.zeros(col.n_rows, dtype=bool))
            else:  # mean
                vals = col.values.copy()
                vals[col.missing_mask] = act.fill
                col = Column(col.name, "num", vals, None,
                             np.zeros(col.n_rows, dtype=bool))
            columns.append(col)
        return DataTable(columns, table.target_index, table.task)


def _ensure_missing_level(col: Column) -> Column:
    if MISSING_LEVEL in col.levels:
        return col
    return Column(col.name, "cat", col.values, col.levels + [MISSING_LEVEL],
                  col.missing_mask)


def impute_stage1(train: DataTable) -> tuple[DataTable, ImputationPlan]:
    """Missing-value treatment before encoding.

    Categorical columns with more than two observed levels get a MISSING
    pseudo-level; binary categorical columns take the training mode; numeric
    columns take the training mean. The returned plan replays the identical
    replacements on prediction data.
    """
    actions = []
    for i, col in enumerate(train.columns):
        if i == train.target_index:
            continue
        if col.missing_mask.all():
            raise DatasetError(f"column {col.name!r} is entirely missing")
        if col.kind == "cat":
            counts = col.level_counts()
            n_observed = int((counts > 0).sum())
            if n_observed > 2:
                if MISSING_LEVEL in col.levels and counts[
                        col.levels.index(MISSING_LEVEL)] > 0:
                    raise DatasetError(
                        f"column {col.name!r} already uses level {MISSING_LEVEL!r}")
                actions.append(ColumnImputation(col.name, "missing_level", None))
            else:
                mode = int(np.argmax(counts))
                actions.append(ColumnImputation(col.name, "mode", mode))
        else:
            mean = float(col.values[~col.missing_mask].mean())
            actions.append(ColumnImputation(col.name, "mean", mean))
    plan = ImputationPlan(tuple(actions))
    return plan.apply(train), plan


def impute_stage2(table: DataTable, fallbacks: dict[str, float]) -> DataTable:
    """Replace encoder-produced missing cells by each column's declared
    unseen-level fallback. Output contains zero missing values."""
    columns = []
    for i, col in enumerate(table.columns):
        if i == table.target_index or not col.missing_mask.any():
            columns.append(col)
            continue
        if col.name not in fallbacks:
            raise DatasetError(
                f"column {col.name!r} has missing cells but no fallback")
        vals = col.values.copy()
        if col.kind == "num":
            vals[col.missing_mask] = fallbacks[col.name]
            columns.append(Column(col.name, "num", vals, None,
                                  np.zeros(col.n_rows, dtype=bool)))
        else:
            vals[col.missing_mask] = int(fallbacks[col.name])
            columns.append(Column(col.name, "cat", vals, col.levels,
                                  np.zeros(col.n_rows, dtype=bool)))
    return DataTable(columns, table.target_index, table.task)


# ---------------------------------------------------------------------------
# Constant dropping and final one-hot


@dataclass(frozen=True)
class DropPlan:
    dropped: tuple[str, ...]

    def apply(self, table: DataTable) -> DataTable:
        features = [c for c in table.feature_columns()
                    if c.name not in self.dropped]
        return table.with_feature_columns(features)


def drop_constant_columns(train: DataTable) -> tuple[DataTable, DropPlan]:
    """Remove feature columns with a single distinct training value.

    The plan removes the same columns at prediction time even if they are
    non-constant there.
    """
    dropped = []
    for col in train.feature_columns():
        vals = col.values
        if vals.size == 0 or np.all(vals == vals[0]):
            dropped.append(col.name)
    plan = DropPlan(tuple(dropped))
    out = plan.apply(train)
    if not out.feature_columns():
        raise DatasetError("dropping constants would remove all features")
    return out, plan


@dataclass(frozen=True)
class OneHotPlan:
    # column name -> level labels to expand (training-observed order)
    expansions: tuple[tuple[str, tuple[str, ...]], ...]

    def apply(self, table: DataTable) -> DataTable:
        by_name = dict(self.expansions)
        features = []
        for col in table.feature_columns():
            labels = by_name.get(col.name)
            if labels is None:
                features.append(col)
                continue
            label_to_code = {lab: col.levels.index(lab) for lab in labels
                             if lab in col.levels}
            for lab in labels:
                code = label_to_code.get(lab, -2)
                vals = (col.values == code).astype(float)
                features.append(Column(f"{col.name}={lab}", "num", vals))
        return table.with_feature_columns(features)


def final_one_hot(train: DataTable) -> tuple[DataTable, OneHotPlan]:
    """Expand every remaining categorical feature into one indicator per
    training-observed level. Unseen levels map to the zero vector."""
    expansions = []
    for col in train.feature_columns():
        if col.kind != "cat":
            continue
        counts = col.level_counts()
        labels = tuple(col.levels[i] for i in range(len(col.levels))
                       if counts[i] > 0)
        expansions.append((col.name, labels))
    plan = OneHotPlan(tuple(expansions))
    return plan.apply(train), plan


def feature_matrix(table: DataTable) -> tuple[np.ndarray, list[str]]:
    """Stack the (all-numeric) feature columns into one float matrix."""
    cols = table.feature_columns()
    for c in cols:
        if c.kind != "num":
            raise DatasetError(f"column {c.name!r} is still categorical")
    if not cols:
        return np.zeros((table.n_rows, 0)), []
    X = np.column_stack([c.values.astype(float) for c in cols])
    return X, [c.name for c in cols]


def profile_table(table: DataTable) -> dict:
    """Dataset profile: per categorical feature level count, normalized
    entropy and missing rate, plus global task facts."""
    cat_profiles = []
    for col in table.feature_columns():
        if col.kind != "cat":
            continue
        cat_profiles.append({
            "name": col.name,
            "n_levels": int((col.level_counts() > 0).sum()),
            "normalized_entropy": normalized_entropy(col),
            "missing_rate": float(col.missing_mask.mean()),
        })
    return {
        "n_rows": table.n_rows,
        "task": table.task.kind,
        "n_classes": table.task.n_classes,
        "n_features": len(table.feature_columns()),
        "categorical": cat_profiles,
    }
