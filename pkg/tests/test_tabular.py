import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from catenc.tabular import (DatasetError, MISSING_LEVEL, drop_constant_columns,
                            final_one_hot, feature_matrix, impute_stage1,
                            impute_stage2, load_dataset, normalized_entropy,
                            profile_table, stratified_kfold)
from conftest import cat_column, make_table, num_column


def write_dataset(tmp_path, csv_text, schema):
    csv_path = tmp_path / "d.csv"
    schema_path = tmp_path / "d.schema.json"
    csv_path.write_text(csv_text)
    schema_path.write_text(json.dumps(schema))
    return csv_path, schema_path


SCHEMA3 = {"columns": [{"name": "x", "kind": "cat"},
                       {"name": "z", "kind": "num"},
                       {"name": "y", "kind": "num"}],
           "target": "y"}


class TestLoadDataset:
    def test_basic_regression(self, tmp_path):
        csv_path, schema_path = write_dataset(
            tmp_path, "x,z,y\na,1.5,2\nb,2.5,3\na,0.5,4\nc,1.0,5\n", SCHEMA3)
        table = load_dataset(csv_path, schema_path)
        assert table.n_rows == 4
        assert table.task.kind == "regression"
        assert table.column("x").levels == ["a", "b", "c"]

    def test_empty_string_is_missing(self, tmp_path):
        csv_path, schema_path = write_dataset(
            tmp_path, "x,z,y\na,1,2\n,2,3\n", SCHEMA3)
        table = load_dataset(csv_path, schema_path)
        assert table.column("x").missing_mask.tolist() == [False, True]

    def test_categorical_target_multiclass(self, tmp_path):
        schema = {"columns": [{"name": "x", "kind": "cat"},
                              {"name": "y", "kind": "cat"}],
                  "target": "y"}
        csv_path, schema_path = write_dataset(
            tmp_path, "x,y\nu,a\nv,b\nw,c\nu,a\n", schema)
        table = load_dataset(csv_path, schema_path)
        assert table.task.kind == "multiclass"
        assert table.task.n_classes == 3

    def test_numeric_parse_failure_is_missing(self, tmp_path):
        csv_path, schema_path = write_dataset(
            tmp_path, "x,z,y\na,oops,2\nb,1,3\n", SCHEMA3)
        table = load_dataset(csv_path, schema_path)
        assert table.column("z").missing_mask.tolist() == [True, False]

    def test_missing_target_rejected(self, tmp_path):
        csv_path, schema_path = write_dataset(
            tmp_path, "x,z,y\na,1,\nb,1,3\n", SCHEMA3)
        with pytest.raises(DatasetError):
            load_dataset(csv_path, schema_path)

    def test_schema_mismatch_rejected(self, tmp_path):
        csv_path, schema_path = write_dataset(
            tmp_path, "x,wrong,y\na,1,2\n", SCHEMA3)
        with pytest.raises(DatasetError):
            load_dataset(csv_path, schema_path)

    def test_na_token(self, tmp_path):
        csv_path, schema_path = write_dataset(
            tmp_path, "x,z,y\nNA,1,2\nb,NA,3\n", SCHEMA3)
        table = load_dataset(csv_path, schema_path)
        assert table.column("x").missing_mask.tolist() == [True, False]
        assert table.column("z").missing_mask.tolist() == [False, True]


class TestStratifiedKfold:
    def test_regression_even_folds(self, rng):
        table = make_table([num_column("a", rng.normal(size=10)),
                            num_column("y", rng.normal(size=10))], "y")
        folds = stratified_kfold(table, 5, seed=1)
        sizes = np.bincount(folds.fold_of_row, minlength=5)
        assert sizes.tolist() == [2] * 5

    def test_binary_stratification(self):
        labels = ["p"] * 6 + ["n"] * 4
        table = make_table([num_column("a", range(10)),
                            cat_column("y", labels)], "y")
        folds = stratified_kfold(table, 2, seed=3)
        codes = table.target.values
        for f in range(2):
            sel = folds.fold_of_row == f
            assert (codes[sel] == 0).sum() == 3
            assert (codes[sel] == 1).sum() == 2

    def test_deterministic(self, rng):
        table = make_table([num_column("a", rng.normal(size=23)),
                            num_column("y", rng.normal(size=23))], "y")
        f1 = stratified_kfold(table, 5, seed=9)
        f2 = stratified_kfold(table, 5, seed=9)
        assert np.array_equal(f1.fold_of_row, f2.fold_of_row)

    def test_fold_sizes_differ_at_most_one(self, rng):
        for n, j in [(11, 3), (23, 5), (10, 7)]:
            table = make_table([num_column("a", rng.normal(size=n)),
                                num_column("y", rng.normal(size=n))], "y")
            sizes = np.bincount(stratified_kfold(table, j, 0).fold_of_row,
                                minlength=j)
            assert sizes.max() - sizes.min() <= 1

    def test_too_many_folds(self, rng):
        table = make_table([num_column("y", rng.normal(size=3))], "y")
        with pytest.raises(ValueError):
            stratified_kfold(table, 4, 0)


class TestNormalizedEntropy:
    def test_uniform_is_one(self):
        col = cat_column("x", ["a", "b", "c", "d"] * 25)
        assert normalized_entropy(col) == pytest.approx(1.0, abs=1e-12)

    def test_single_level_is_zero(self):
        assert normalized_entropy(cat_column("x", ["a", "a", "a"])) == 0.0

    def test_three_to_one(self):
        # -(0.75 log2 0.75 + 0.25 log2 0.25) = 0.8113
        col = cat_column("x", ["a", "a", "a", "b"])
        assert normalized_entropy(col) == pytest.approx(0.8113, abs=1e-4)

    def test_missing_excluded(self):
        col = cat_column("x", ["a", "b", "", ""])
        assert normalized_entropy(col) == pytest.approx(1.0, abs=1e-12)

    def test_numeric_rejected(self):
        with pytest.raises(DatasetError):
            normalized_entropy(num_column("x", [1.0, 2.0]))

    @given(st.lists(st.integers(min_value=0, max_value=5), min_size=1,
                    max_size=60))
    @settings(max_examples=200, deadline=None)
    def test_bounds(self, codes):
        col = cat_column("x", [f"l{c}" for c in codes])
        h = normalized_entropy(col)
        assert -1e-12 <= h <= 1 + 1e-12
        counts = col.level_counts()
        counts = counts[counts > 0]
        if len(counts) > 1 and len(set(counts.tolist())) == 1:
            assert h == pytest.approx(1.0, abs=1e-12)


class TestImputation:
    def test_multilevel_gets_missing_level(self):
        col = cat_column("x", ["a", "b", "c", "", "", "a"])
        table = make_table([col, num_column("y", range(6))], "y")
        out, plan = impute_stage1(table)
        x = out.column("x")
        assert x.levels[-1] == MISSING_LEVEL
        assert not x.missing_mask.any()
        assert (x.values == x.levels.index(MISSING_LEVEL)).sum() == 2

    def test_binary_mode(self):
        col = cat_column("x", ["yes"] * 7 + ["no"] * 2 + [""])
        table = make_table([col, num_column("y", range(10))], "y")
        out, _ = impute_stage1(table)
        x = out.column("x")
        assert x.values[-1] == x.levels.index("yes")

    def test_numeric_mean(self):
        col = num_column("x", [1.0, 3.0, np.nan])
        table = make_table([col, num_column("y", range(3))], "y")
        out, _ = impute_stage1(table)
        assert out.column("x").values[2] == pytest.approx(2.0)

    def test_all_missing_rejected(self):
        col = num_column("x", [np.nan, np.nan])
        table = make_table([col, num_column("y", [0, 1])], "y")
        with pytest.raises(DatasetError, match="x"):
            impute_stage1(table)

    def test_plan_replays_on_train(self):
        col = cat_column("x", ["a", "b", "c", "", "a"])
        z = num_column("z", [1, np.nan, 3, 4, 5])
        table = make_table([col, z, num_column("y", range(5))], "y")
        out, plan = impute_stage1(table)
        replay = plan.apply(table)
        assert np.array_equal(out.column("x").values,
                              replay.column("x").values)
        assert np.array_equal(out.column("z").values,
                              replay.column("z").values)

    def test_stage2_fills_fallback(self):
        col = num_column("x", [1.0, np.nan, np.nan])
        table = make_table([col, num_column("y", range(3))], "y")
        out = impute_stage2(table, {"x": 7.0})
        assert out.column("x").values.tolist() == [1.0, 7.0, 7.0]
        assert not out.column("x").missing_mask.any()

    def test_stage2_identity_without_missing(self):
        col = num_column("x", [1.0, 2.0])
        table = make_table([col, num_column("y", [0, 1])], "y")
        out = impute_stage2(table, {})
        assert out.column("x").values.tolist() == [1.0, 2.0]


class TestDropAndOneHot:
    def test_constant_dropped(self):
        table = make_table([num_column("c", [0, 0, 0]),
                            num_column("x", [1, 2, 3]),
                            num_column("y", [0, 1, 0])], "y")
        out, plan = drop_constant_columns(table)
        assert [c.name for c in out.feature_columns()] == ["x"]

    def test_train_side_rule(self):
        table = make_table([num_column("x", [0, 0, 1]),
                            num_column("y", [0, 1, 0])], "y")
        out, plan = drop_constant_columns(table)
        test = make_table([num_column("x", [5, 5, 5]),
                           num_column("y", [0, 1, 0])], "y")
        assert [c.name for c in plan.apply(test).feature_columns()] == ["x"]

    def test_all_dropped_rejected(self):
        table = make_table([num_column("x", [1, 1, 1]),
                            num_column("y", [0, 1, 0])], "y")
        with pytest.raises(DatasetError):
            drop_constant_columns(table)

    def test_one_hot_expansion(self):
        table = make_table([cat_column("x", ["a", "b", "c", "b"]),
                            num_column("y", range(4))], "y")
        out, plan = final_one_hot(table)
        X, names = feature_matrix(out)
        assert names == ["x=a", "x=b", "x=c"]
        assert X[1].tolist() == [0.0, 1.0, 0.0]

    def test_unseen_level_zero_vector(self):
        train = make_table([cat_column("x", ["a", "b", "c"]),
                            num_column("y", range(3))], "y")
        _, plan = final_one_hot(train)
        test = make_table(
            [cat_column("x", ["d"], levels=["a", "b", "c", "d"]),
             num_column("y", [0])], "y")
        X, _ = feature_matrix(plan.apply(test))
        assert X[0].tolist() == [0.0, 0.0, 0.0]

    def test_no_categorical_identity(self):
        table = make_table([num_column("x", [1, 2]),
                            num_column("y", [0, 1])], "y")
        out, _ = final_one_hot(table)
        assert [c.name for c in out.feature_columns()] == ["x"]


def test_profile_table():
    table = make_table([cat_column("x", ["a", "b", "c", "d"]),
                        num_column("z", range(4)),
                        num_column("y", range(4))], "y")
    prof = profile_table(table)
    assert prof["n_rows"] == 4
    assert prof["task"] == "regression"
    names = [c["name"] for c in prof["categorical"]]
    assert names == ["x"]
    assert prof["categorical"][0]["normalized_entropy"] == pytest.approx(1.0)
