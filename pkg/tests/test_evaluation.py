import itertools

import numpy as np
import pytest

from gridledger.evaluation import (ClassTooSmallForK, CVConfig, LabelOutOfRange,
                                   LengthMismatch, SingleClass,
                                   classification_report, confusion_matrix,
                                   f1_score, kfold_cv, render_report, roc_auc,
                                   roc_auc_ovr_macro, stratified_folds)
from gridledger.models import LinearModel


# independent naive-loop implementations used as oracles


def naive_confusion(y_true, y_pred, k):
    matrix = [[0] * k for _ in range(k)]
    for t, p in zip(y_true, y_pred):
        matrix[t][p] += 1
    return matrix


def naive_prf(y_true, y_pred, k):
    matrix = naive_confusion(y_true, y_pred, k)
    precision, recall, f1 = [], [], []
    for c in range(k):
        tp = matrix[c][c]
        fp = sum(matrix[r][c] for r in range(k)) - tp
        fn = sum(matrix[c][r] for r in range(k)) - tp
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        precision.append(p)
        recall.append(r)
        f1.append(2 * p * r / (p + r) if p + r else 0.0)
    accuracy = sum(matrix[c][c] for c in range(k)) / len(y_true)
    return precision, recall, f1, accuracy


def naive_auc(y_true, scores):
    wins = ties = 0
    pos = [s for y, s in zip(y_true, scores) if y == 1]
    neg = [s for y, s in zip(y_true, scores) if y == 0]
    for sp in pos:
        for sn in neg:
            if sp > sn:
                wins += 1
            elif sp == sn:
                ties += 1
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


class TestConfusionMatrix:
    def test_perfect_diagonal(self):
        m = confusion_matrix([0, 1, 2, 1], [0, 1, 2, 1], 3)
        assert np.array_equal(m, np.diag([1, 2, 1]))

    def test_hand_counted_case(self):
        m = confusion_matrix([0, 0, 1, 2], [0, 1, 1, 0], 3)
        assert m.tolist() == [[1, 1, 0], [0, 1, 0], [1, 0, 0]]

    def test_total_is_n(self, rng):
        y_true = rng.integers(0, 3, 100)
        y_pred = rng.integers(0, 3, 100)
        assert confusion_matrix(y_true, y_pred, 3).sum() == 100

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            confusion_matrix([0, 1], [0], 2)

    def test_label_out_of_range(self):
        with pytest.raises(LabelOutOfRange):
            confusion_matrix([0, 3], [0, 1], 3)


class TestClassificationReport:
    def test_f1_fixed_point(self):
        # p = r = x implies f1 = x
        for x in (0.25, 0.5, 0.93):
            assert abs(f1_score(x, x) - x) <= 1e-12

    def test_case_study_f1_oracle(self):
        # harmonic mean of the case-study precision/recall pair
        p, r = 0.93, 0.88
        expected = 2 * p * r / (p + r)
        assert abs(f1_score(p, r) - expected) <= 1e-12
        assert abs(expected - 0.9043093922651934) <= 1e-12

    def test_macro_weighted_two_decimals(self):
        # per-class F1 (0.34, 0.34, 0.33) at supports (843, 825, 832)
        f1 = np.array([0.34, 0.34, 0.33])
        support = np.array([843, 825, 832])
        assert round(float(f1.mean()), 2) == 0.34
        assert round(float((f1 * support).sum() / support.sum()), 2) == 0.34

    def test_report_layout(self):
        report = classification_report([0, 1, 2, 0], [0, 1, 1, 0],
                                       ["Failed", "Pending", "Success"])
        text = render_report(report)
        assert "precision" in text and "recall" in text
        assert "f1-score" in text and "support" in text
        assert "macro avg" in text and "weighted avg" in text

    def test_accuracy_is_trace_over_n(self, rng):
        y_true = rng.integers(0, 3, 200)
        y_pred = rng.integers(0, 3, 200)
        report = classification_report(y_true, y_pred, ["a", "b", "c"])
        trace = np.trace(confusion_matrix(y_true, y_pred, 3))
        assert report.accuracy == trace / 200

    def test_weighted_average_identity(self, rng):
        y_true = rng.integers(0, 3, 150)
        y_pred = rng.integers(0, 3, 150)
        report = classification_report(y_true, y_pred, ["a", "b", "c"])
        weights = report.support / report.support.sum()
        assert abs(report.weighted_f1 - float((report.f1 * weights).sum())) <= 1e-9


class TestExhaustiveEquivalence:
    @staticmethod
    def _compositions(total, cells):
        # stars and bars: all non-negative integer vectors summing to total
        for bars in itertools.combinations(range(total + cells - 1), cells - 1):
            prev = -1
            counts = []
            for b in bars:
                counts.append(b - prev - 1)
                prev = b
            counts.append(total + cells - 2 - prev)
            yield counts

    def test_all_confusion_matrices_up_to_n8_k3(self):
        # every dataset with n <= 8 and K <= 3 is represented, up to row
        # order, by its confusion matrix; enumerate them all and compare
        # against the naive loops on a dataset realizing each matrix
        checked = 0
        for total in range(1, 9):
            for cells in self._compositions(total, 9):
                y_true, y_pred = [], []
                for idx, count in enumerate(cells):
                    y_true.extend([idx // 3] * count)
                    y_pred.extend([idx % 3] * count)
                matrix = confusion_matrix(y_true, y_pred, 3)
                assert matrix.tolist() == naive_confusion(y_true, y_pred, 3)
                report = classification_report(y_true, y_pred, ["a", "b", "c"])
                p, r, f1, acc = naive_prf(y_true, y_pred, 3)
                assert np.array_equal(report.precision, np.array(p))
                assert np.array_equal(report.recall, np.array(r))
                assert np.array_equal(report.f1, np.array(f1))
                assert report.accuracy == acc
                checked += 1
        assert checked > 20_000

    def test_auc_exhaustive_small(self):
        # all binary label vectors and 3-level score patterns up to n = 6
        for n in range(2, 7):
            for labels in itertools.product((0, 1), repeat=n):
                if sum(labels) in (0, n):
                    continue
                for scores in itertools.product((0.1, 0.5, 0.9), repeat=n):
                    assert roc_auc(labels, scores) == pytest.approx(
                        naive_auc(labels, scores), abs=1e-12)

    def test_auc_random_larger(self, rng):
        for _ in range(300):
            n = int(rng.integers(7, 9))
            labels = rng.integers(0, 2, n)
            if labels.sum() in (0, n):
                continue
            scores = rng.choice([0.1, 0.3, 0.5, 0.7], n)
            assert roc_auc(labels, scores) == pytest.approx(
                naive_auc(labels, scores), abs=1e-12)


class TestRocAuc:
    def test_perfect_ordering(self):
        assert roc_auc([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0

    def test_all_equal_scores(self):
        assert roc_auc([0, 1, 0, 1], [0.5, 0.5, 0.5, 0.5]) == 0.5

    def test_hand_case(self):
        assert roc_auc([1, 0, 1, 0], [0.9, 0.8, 0.4, 0.2]) == 0.75

    def test_single_class_error(self):
        with pytest.raises(SingleClass):
            roc_auc([1, 1], [0.2, 0.3])

    def test_monotone_transform_invariance(self, rng):
        labels = rng.integers(0, 2, 60)
        labels[0], labels[1] = 0, 1
        scores = rng.normal(size=60)
        base = roc_auc(labels, scores)
        assert roc_auc(labels, np.exp(scores)) == pytest.approx(base, abs=1e-12)
        assert roc_auc(labels, 3 * scores + 7) == pytest.approx(base, abs=1e-12)

    def test_ovr_macro_mean(self, rng):
        y = rng.integers(0, 3, 90)
        proba = rng.dirichlet([1, 1, 1], size=90)
        expected = np.mean([naive_auc((y == k).astype(int), proba[:, k])
                            for k in range(3)])
        assert roc_auc_ovr_macro(y, proba) == pytest.approx(expected, abs=1e-12)


class TestKFold:
    def test_two_folds_of_four_rows(self):
        folds = stratified_folds([0, 0, 1, 1], 2, seed=0)
        assert len(folds) == 2
        for fold in folds:
            assert len(fold) == 2

    def test_partition(self):
        y = np.array([0, 1, 2] * 10)
        folds = stratified_folds(y, 5, seed=4)
        combined = sorted(i for fold in folds for i in fold)
        assert combined == list(range(30))
        for a, b in itertools.combinations(folds, 2):
            assert not set(a) & set(b)

    def test_class_too_small_for_k(self):
        with pytest.raises(ClassTooSmallForK):
            stratified_folds([0, 0, 0, 1], 3, seed=0)

    def test_constant_trainer_majority_accuracy(self):
        # a linear model with a huge bias on class 0 predicts 0 everywhere
        y = np.array([0] * 36 + [1] * 24)
        X = np.ones((60, 2))

        def trainer(Xt, yt):
            return LinearModel(weights=np.zeros((2, 2)),
                               biases=np.array([100.0, 0.0]))

        result = kfold_cv(X, y, CVConfig(k=4, seed=1), trainer)
        for report in result.fold_reports:
            assert report.accuracy == pytest.approx(0.6)
        assert result.mean_accuracy == pytest.approx(0.6)
        assert result.std_accuracy == pytest.approx(0.0)

    def test_deterministic_under_seed(self):
        y = np.array([0, 1] * 20)
        a = stratified_folds(y, 4, seed=7)
        b = stratified_folds(y, 4, seed=7)
        assert all(np.array_equal(x, z) for x, z in zip(a, b))
