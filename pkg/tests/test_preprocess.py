import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etlsieve.log_corpus import FeatureVector
from etlsieve.preprocess import (
    FeatureTable,
    PreprocessError,
    apply_log1p,
    coefficient_of_variation,
    derive_throughput,
    drop_zero_records,
    select_features,
    standardize,
)

from conftest import GOLDEN


def fv(name, *vals):
    return FeatureVector(name, *vals)


def table_of(rows):
    return FeatureTable.from_vectors(fv(f"r{i:03d}", *r) for i, r in enumerate(rows))


def test_drop_zero_conjunction():
    t = table_of([(0, 0, 0, 2), (0, 0, 82, 2), (5, 5, 1, 2), (0, 0, 0, 0)])
    kept, removed = drop_zero_records(t)
    assert removed == ["r000", "r003"]
    assert kept.names == ["r001", "r002"]
    assert kept.matrix.tolist() == [[0, 0, 82, 2], [5, 5, 1, 2]]


def test_drop_zero_counts():
    rows = [(0, 0, 0, 2)] * 105 + [(i + 1, i + 1, i % 7 + 1, 2) for i in range(425)]
    kept, removed = drop_zero_records(table_of(rows))
    assert (len(kept), len(removed)) == (425, 105)


def test_drop_zero_empty_result():
    kept, removed = drop_zero_records(table_of([(0, 0, 0, 1)]))
    assert len(kept) == 0 and kept.matrix.shape == (0, 4)


def test_constant_transformation_count_dropped():
    t = FeatureTable.from_vectors(GOLDEN)
    selected, dropped = select_features(t)
    assert dropped == ["n_transformations"]
    assert selected.features == ("source_rows", "target_rows", "runtime")


def test_increasing_features_all_kept():
    t = table_of([(i, 2 * i + 1, 3 * i + 2, i + 5) for i in range(1, 20)])
    assert select_features(t)[1] == []


def test_one_constant_feature():
    rng = np.random.default_rng(0)
    rows = [(int(a), 7, int(b), int(c)) for a, b, c in rng.integers(1, 1000, size=(50, 3))]
    t = table_of(rows)
    # oracle: direct population stddev per column
    stds = [np.sqrt(np.mean((t.matrix[:, j] - t.matrix[:, j].mean()) ** 2)) for j in range(4)]
    assert stds[1] == 0 and all(s > 0 for j, s in enumerate(stds) if j != 1)
    assert select_features(t)[1] == ["target_rows"]


def test_cv_floor_threshold():
    # target column: mean 1000.5, population stddev 0.5, cv 4.9975e-4
    t = table_of([(10, 1000, 1, 2), (30, 1001, 3, 2)] * 3)
    assert coefficient_of_variation(t.column("target_rows")) == pytest.approx(0.5 / 1000.5)
    assert select_features(t, cv_floor=1e-3)[1] == ["target_rows", "n_transformations"]
    assert select_features(t, cv_floor=1e-4)[1] == ["n_transformations"]


def test_cv_zero_mean():
    assert coefficient_of_variation(np.zeros(4)) == 0.0
    assert coefficient_of_variation(np.array([-1.0, 1.0])) == math.inf


def test_no_informative_features():
    with pytest.raises(PreprocessError, match="no informative features"):
        select_features(table_of([(5, 5, 5, 5)] * 4))


def test_select_empty_table():
    with pytest.raises(PreprocessError):
        select_features(table_of([]))


def test_standardize_moments():
    rng = np.random.default_rng(1)
    t = table_of([tuple(int(x) for x in row) for row in rng.integers(0, 10**6, size=(200, 4))])
    z, params = standardize(t)
    assert np.all(np.abs(z.matrix.mean(axis=0)) < 1e-9)
    assert np.all(np.abs(z.matrix.std(axis=0) - 1) < 1e-9)
    assert params.features == t.features


def test_standardize_single_record():
    with pytest.raises(PreprocessError):
        standardize(table_of([(1, 2, 3, 4)]))


def test_standardize_two_points_population_convention():
    t = select_features(table_of([(0, 1, 1, 1), (2, 1, 1, 1)]))[0]
    z, params = standardize(t)
    assert z.matrix[:, 0].tolist() == [-1.0, 1.0]
    assert params.std == (1.0,)


def test_derive_throughput():
    assert derive_throughput(fv("X1.log", 159833, 159833, 168, 2)) == (pytest.approx(951.3869, abs=1e-4), False)
    assert round(derive_throughput(fv("X1.log", 159833, 159833, 168, 2))[0], 2) == 951.39
    x2, _ = derive_throughput(fv("X2.log", 4719112, 4719112, 9278, 2))
    assert x2 == 4719112 / 9278
    assert x2 == pytest.approx(508.64, abs=0.01)
    assert derive_throughput(fv("z", 0, 0, 0, 2)) == (0.0, True)


def test_log1p_only_row_counts():
    t = select_features(table_of([(0, 9, 1, 2), (99, 999, 5, 2)]))[0]
    lt = apply_log1p(t)
    assert lt.matrix[:, 0].tolist() == pytest.approx([0.0, math.log(100)])
    assert lt.matrix[:, 2].tolist() == [1.0, 5.0]
    with pytest.raises(PreprocessError):
        apply_log1p(standardize(t)[0])


rows_st = st.lists(
    st.tuples(*(st.integers(0, 10**7) for _ in range(3)), st.integers(0, 5)),
    min_size=2, max_size=40,
)


@given(rows_st)
def test_drop_zero_idempotent_and_order(rows):
    t = table_of(rows)
    once, _ = drop_zero_records(t)
    twice, removed = drop_zero_records(once)
    assert removed == [] and twice.names == once.names
    assert once.names == [n for n in t.names if n in set(once.names)]


@given(rows_st, st.sampled_from([0.0, 1e-3, 0.1, 0.5]))
def test_select_idempotent(rows, floor):
    t = table_of(rows)
    try:
        once, _ = select_features(t, floor)
    except PreprocessError:
        return
    twice, dropped = select_features(once, floor)
    assert dropped == [] and twice.features == once.features
    assert twice.names == t.names


@settings(max_examples=200)
@given(rows_st)
def test_standardize_inverse(rows):
    t = table_of(rows)
    try:
        sel, _ = select_features(t, 1e-3)
    except PreprocessError:
        return
    z, params = standardize(sel)
    back = params.inverse(z.matrix)
    orig = sel.matrix
    scale = np.maximum(np.abs(orig), 1.0)
    assert np.all(np.abs(back - orig) / scale < 1e-9)
    assert z.names == t.names
