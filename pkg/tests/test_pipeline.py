import copy

import numpy as np
import pytest

from gridledger.pipeline import (AllMissing, AlreadyTransformed, ClassTooSmall,
                                 EmptyTrain, FittedPreprocessor,
                                 compute_cost_per_unit, extract_time_features,
                                 fit_preprocessor, fit_transform,
                                 impute_transaction_type, preprocessor_from_json,
                                 preprocessor_to_json, stratified_split)
from gridledger.timeutil import parse_iso


def sample_row(**overrides) -> dict:
    row = {
        "transaction_id": "tx-1",
        "timestamp": parse_iso("2025-02-14T10:30:00Z"),
        "user_role": "Supplier",
        "transaction_type": "Sell",
        "electricity_quantity": 4.0,
        "price_per_mwh": 35.0,
        "total_cost": 140.0,
        "latency_ms": 17.5,
        "security_level": "Medium",
        "encryption_method": "AES-256",
        "zt_authentication": 1,
        "network_slice_id": "SliceA",
        "transaction_status": "Success",
    }
    row.update(overrides)
    return row


def sample_rows(n=60, seed=0) -> list[dict]:
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        q = float(rng.uniform(0.5, 99))
        p = float(rng.uniform(1, 40))
        rows.append(sample_row(
            transaction_id=f"tx-{i}",
            timestamp=parse_iso("2025-02-14T10:00:00Z") + int(rng.integers(0, 7200)),
            user_role=["Supplier", "Dealer", "Authority"][int(rng.integers(0, 3))],
            transaction_type=["Buy", "Sell", "Unknown"][int(rng.integers(0, 3))],
            electricity_quantity=q, price_per_mwh=p, total_cost=q * p,
            latency_ms=float(rng.uniform(5, 30)),
            security_level=["Low", "Medium", "High"][int(rng.integers(0, 3))],
            encryption_method=["AES-128", "AES-256"][int(rng.integers(0, 2))],
            zt_authentication=int(rng.integers(0, 2)),
            network_slice_id=["SliceA", "SliceB", "SliceC"][int(rng.integers(0, 3))],
            transaction_status=["Failed", "Pending", "Success"][int(rng.integers(0, 3))]))
    return rows


class TestTimeFeatures:
    def test_valentines_friday(self):
        assert extract_time_features("2025-02-14T10:30:00Z") == (10, 4, 2)

    def test_new_year(self):
        assert extract_time_features("2025-01-01T00:00:00Z") == (0, 2, 1)

    def test_midnight_boundary(self):
        h1, _, _ = extract_time_features("2025-02-14T23:59:59Z")
        h2, _, _ = extract_time_features("2025-02-15T00:00:00Z")
        assert (h1, h2) == (23, 0)

    def test_accepts_unix_seconds(self):
        ts = parse_iso("2025-02-14T10:30:00Z")
        assert extract_time_features(ts) == (10, 4, 2)


class TestCostPerUnit:
    def test_simple_division(self):
        assert compute_cost_per_unit(140.0, 4.0) == 35.0

    def test_zero_quantity_guarded(self):
        assert compute_cost_per_unit(100.0, 0) == 0.0

    def test_algebraic_oracle(self, rng):
        for _ in range(1000):
            q = float(rng.uniform(0.001, 100))
            p = float(rng.uniform(0, 50))
            assert abs(compute_cost_per_unit(q * p, q) - p) <= 1e-9


class TestImpute:
    def test_mode_fill(self):
        rows = [sample_row(transaction_type="Buy"),
                sample_row(transaction_type="Buy"),
                sample_row(transaction_type=None)]
        assert [r["transaction_type"] for r in impute_transaction_type(rows)] == \
            ["Buy", "Buy", "Buy"]

    def test_no_missing_identity(self):
        rows = [sample_row(transaction_type="Sell")]
        assert impute_transaction_type(rows) == rows

    def test_tie_prefers_buy(self):
        rows = [sample_row(transaction_type="Buy"),
                sample_row(transaction_type="Sell"),
                sample_row(transaction_type=None)]
        assert impute_transaction_type(rows)[2]["transaction_type"] == "Buy"

    def test_all_missing(self):
        with pytest.raises(AllMissing):
            impute_transaction_type([sample_row(transaction_type=None)])


class TestStratifiedSplit:
    def test_quarter_of_ten_thousand(self):
        labels = (["Failed"] * 3334 + ["Pending"] * 3333 + ["Success"] * 3333)
        train, test = stratified_split(labels, 0.25, seed=1)
        assert len(test) == 2500
        assert len(train) == 7500

    def test_proportions_within_one_row(self):
        labels = np.array([0] * 400 + [1] * 350 + [2] * 250)
        train, test = stratified_split(labels, 0.2, seed=3)
        for cls, count in ((0, 400), (1, 350), (2, 250)):
            test_count = int(np.sum(labels[test] == cls))
            assert abs(test_count - count * 0.2) <= 1

    def test_disjoint_and_complete(self):
        labels = np.array([0, 1] * 30)
        train, test = stratified_split(labels, 0.3, seed=9)
        assert set(train) | set(test) == set(range(60))
        assert set(train) & set(test) == set()

    def test_class_too_small(self):
        with pytest.raises(ClassTooSmall):
            stratified_split([0, 0, 1], 0.5, seed=0)

    def test_deterministic(self):
        labels = np.array([0, 1, 2] * 40)
        a = stratified_split(labels, 0.25, seed=5)
        b = stratified_split(labels, 0.25, seed=5)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


class TestPreprocessor:
    def test_train_columns_standardized(self):
        rows = sample_rows(200)
        pre, matrix = fit_transform(rows)
        numeric = matrix.X[:, :6]
        variable = pre.numeric_std > 0
        assert np.all(np.abs(numeric.mean(axis=0)[variable]) <= 1e-9)
        assert np.all(np.abs(numeric.std(axis=0)[variable] - 1.0) <= 1e-9)

    def test_constant_column_passes_through(self):
        rows = [sample_row(transaction_id=f"t{i}", zt_authentication=1)
                for i in range(10)]
        pre, matrix = fit_transform(rows)
        zt_index = 5
        assert pre.numeric_std[zt_index] == 0.0
        assert np.all(matrix.X[:, zt_index] == 1.0)

    def test_one_hot_groups_sum_to_one(self):
        rows = sample_rows(100)
        pre, matrix = fit_transform(rows)
        offset = 6
        for column in ("user_role", "transaction_type", "security_level",
                       "encryption_method", "network_slice_id", "hour",
                       "day_of_week", "month"):
            width = len(pre.vocabularies[column])
            block = matrix.X[:, offset:offset + width]
            assert np.all(block.sum(axis=1) == 1.0)
            offset += width
        assert offset == matrix.X.shape[1]

    def test_unseen_category_zero_vector_and_counter(self):
        rows = sample_rows(50)
        pre, _ = fit_transform(rows)
        novel = sample_row(encryption_method="ROT13")
        matrix = pre.transform([novel])
        offset = 6
        for column in ("user_role", "transaction_type", "security_level"):
            offset += len(pre.vocabularies[column])
        width = len(pre.vocabularies["encryption_method"])
        assert np.all(matrix.X[0, offset:offset + width] == 0.0)
        assert pre.unseen_counts["encryption_method"] == 1

    def test_no_leak_from_test(self):
        rows = sample_rows(80)
        pre = fit_preprocessor(rows[:60])
        mean_before = pre.numeric_mean.copy()
        test_rows = copy.deepcopy(rows[60:])
        for row in test_rows:
            row["electricity_quantity"] = 1e6
        pre.transform(test_rows)
        assert np.array_equal(pre.numeric_mean, mean_before)

    def test_double_transform_is_error(self):
        rows = sample_rows(20)
        pre, matrix = fit_transform(rows)
        with pytest.raises(AlreadyTransformed):
            pre.transform(matrix)

    def test_empty_train(self):
        with pytest.raises(EmptyTrain):
            fit_preprocessor([])

    def test_same_dimension_train_test(self):
        rows = sample_rows(120)
        pre, train = fit_transform(rows[:90])
        test = pre.transform(rows[90:])
        assert train.X.shape[1] == test.X.shape[1]
        assert train.manifest == test.manifest

    def test_label_vocab_stable(self):
        rows = sample_rows(60)
        pre = fit_preprocessor(rows)
        assert pre.label_vocab == sorted(pre.label_vocab)
        labels = pre.encode_labels(rows[:5])
        assert labels.dtype == np.int64

    def test_json_round_trip(self):
        rows = sample_rows(60)
        pre = fit_preprocessor(rows)
        clone = preprocessor_from_json(preprocessor_to_json(pre))
        a = pre.transform(rows[:10]).X
        b = clone.transform(rows[:10]).X
        assert np.array_equal(a, b)
        assert clone.manifest == pre.manifest
