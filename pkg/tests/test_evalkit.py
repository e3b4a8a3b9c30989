import itertools
from fractions import Fraction

import numpy as np
import pytest

from cps_synergy.errors import BadK, EmptyInput, EmptyMatrix, LengthMismatch
from cps_synergy.evalkit import (
    ConfusionMatrix,
    align_predictions,
    cohen_kappa,
    confusion,
    kfold,
    load_folds_csv,
    load_predictions,
    stratified_kfold,
    summarize_runs,
    weighted_metrics,
    write_folds_csv,
)


class TestConfusion:
    def test_hand_tally(self):
        cm = confusion(["A", "A", "B"], ["A", "B", "B"])
        assert cm.labels == ("A", "B")
        assert cm.counts == ((1, 1), (0, 1))

    def test_identical_vectors_diagonal(self):
        cm = confusion(["A", "B", "C", "B"], ["A", "B", "C", "B"])
        for i in range(3):
            for j in range(3):
                if i != j:
                    assert cm.counts[i][j] == 0
        assert cm.total == 4

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            confusion(["A", "A", "B"], ["A", "B"])

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            confusion([], [])


class TestWeightedMetrics:
    def test_worked_example(self):
        report = weighted_metrics(confusion(["A", "A", "B"], ["A", "B", "B"]))
        assert report.accuracy == Fraction(2, 3)
        assert report.weighted_f1 == Fraction(2, 3)
        assert report.per_class["A"].precision == 1
        assert report.per_class["A"].recall == Fraction(1, 2)

    def test_perfect_predictions(self):
        report = weighted_metrics(confusion(["A", "B", "B"], ["A", "B", "B"]))
        assert report.accuracy == 1
        assert report.weighted_precision == 1
        assert report.weighted_recall == 1
        assert report.weighted_f1 == 1

    def test_total_disagreement(self):
        report = weighted_metrics(confusion(["A", "B"], ["B", "A"]))
        assert report.accuracy == 0
        assert report.weighted_f1 == 0

    def test_empty_matrix(self):
        cm = ConfusionMatrix(labels=("A", "B"), counts=((0, 0), (0, 0)))
        with pytest.raises(EmptyMatrix):
            weighted_metrics(cm)

    def test_weighted_recall_equals_accuracy(self):
        rng = np.random.default_rng(13)
        labels = list("ABCDEFGHIJ")
        for _ in range(100):
            k = int(rng.integers(2, len(labels) + 1))
            counts = rng.integers(0, 9, size=(k, k))
            if counts.sum() == 0:
                counts[0][0] = 1
            cm = ConfusionMatrix(tuple(labels[:k]), tuple(tuple(int(c) for c in row) for row in counts))
            report = weighted_metrics(cm)
            assert report.weighted_recall == report.accuracy

    def test_joint_permutation_invariance(self):
        rng = np.random.default_rng(3)
        true = list(rng.choice(list("ABC"), 40))
        pred = list(rng.choice(list("ABC"), 40))
        base = weighted_metrics(confusion(true, pred))
        order = rng.permutation(40)
        shuffled = weighted_metrics(confusion([true[i] for i in order], [pred[i] for i in order]))
        assert base == shuffled

    def test_matrix_metrics_match_vector_metrics(self):
        # rebuild vectors from a matrix: metrics must agree exactly
        cm = ConfusionMatrix(("x", "y"), ((3, 2), (1, 4)))
        true, pred = [], []
        for i, t in enumerate(cm.labels):
            for j, p in enumerate(cm.labels):
                true += [t] * cm.counts[i][j]
                pred += [p] * cm.counts[i][j]
        assert weighted_metrics(confusion(true, pred, labels=cm.labels)) == weighted_metrics(cm)


class TestCohenKappa:
    def test_identical_vectors(self):
        assert cohen_kappa(["W1", "S2", "C1"], ["W1", "S2", "C1"]) == 1

    def test_zero_agreement_beyond_chance(self):
        assert cohen_kappa(["x", "x", "y", "y"], ["x", "y", "x", "y"]) == 0

    def test_symmetry(self):
        rng = np.random.default_rng(7)
        a = list(rng.choice(list("ABCD"), 60))
        b = list(rng.choice(list("ABCD"), 60))
        assert cohen_kappa(a, b) == cohen_kappa(b, a)

    def test_independent_coders_near_zero(self):
        rng = np.random.default_rng(11)
        labels = list("ABCDEFGHIJ")
        a = list(rng.choice(labels, 10_000))
        b = list(rng.choice(labels, 10_000))
        assert abs(cohen_kappa(a, b)) < 0.05

    def test_degenerate_marginals(self):
        assert cohen_kappa(["x", "x", "x"], ["x", "x", "x"]) == 1

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            cohen_kappa(["x"], ["x", "y"])
        with pytest.raises(EmptyInput):
            cohen_kappa([], [])


class TestStratifiedKFold:
    def test_two_balanced_classes(self):
        labels = ["a"] * 5 + ["b"] * 5
        folds = stratified_kfold(labels, k=5, seed=1)
        for fold in folds:
            assert len(fold) == 2
            assert {labels[i] for i in fold} == {"a", "b"}

    def test_partition_and_sizes_2420(self):
        rng = np.random.default_rng(2)
        labels = list(rng.choice(list("ABCDEFGHIJ"), 2420, p=[0.3, 0.2, 0.15, 0.1, 0.08, 0.07, 0.04, 0.03, 0.02, 0.01]))
        folds = stratified_kfold(labels, k=5, seed=9)
        assert sorted(itertools.chain.from_iterable(folds)) == list(range(2420))
        assert [len(f) for f in folds] == [484] * 5
        for label in set(labels):
            counts = [sum(1 for i in fold if labels[i] == label) for fold in folds]
            assert max(counts) - min(counts) <= 1

    def test_deterministic(self):
        labels = list(np.random.default_rng(0).choice(list("AB"), 37))
        assert stratified_kfold(labels, 5, seed=42) == stratified_kfold(labels, 5, seed=42)

    def test_bad_k(self):
        with pytest.raises(BadK):
            stratified_kfold(["a", "b"], k=1, seed=0)
        with pytest.raises(BadK):
            stratified_kfold(["a", "b"], k=3, seed=0)

    def test_tiny_class_round_robin_with_warning(self):
        labels = ["a"] * 6 + ["b"]
        with pytest.warns(UserWarning, match="fewer than one per fold"):
            folds = stratified_kfold(labels, k=2, seed=0)
        assert sorted(itertools.chain.from_iterable(folds)) == list(range(7))

    def test_plain_kfold_partition(self):
        folds = kfold(11, 3, seed=4)
        assert sorted(itertools.chain.from_iterable(folds)) == list(range(11))
        assert sorted(len(f) for f in folds) == [3, 4, 4]


class TestSummarizeRuns:
    def _report(self, correct, total):
        true = ["A"] * total
        pred = ["A"] * correct + ["B"] * (total - correct)
        return weighted_metrics(confusion(true, pred, labels=("A", "B")))

    def test_identical_reports_zero_sd(self):
        reports = [self._report(3, 5)] * 5
        summary = summarize_runs(reports)
        for metric in summary.values():
            assert metric["sd"] == 0.0

    def test_mean_and_sd(self):
        summary = summarize_runs([self._report(2, 5), self._report(3, 5)])
        assert summary["accuracy"]["mean"] == pytest.approx(0.5)
        assert summary["accuracy"]["sd"] == pytest.approx(0.1414, abs=1e-4)

    def test_single_report_convention(self):
        summary = summarize_runs([self._report(4, 5)])
        assert summary["accuracy"]["mean"] == pytest.approx(0.8)
        assert summary["accuracy"]["sd"] == 0.0

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            summarize_runs([])


class TestFileContracts:
    def test_folds_round_trip(self, tmp_path):
        ids = [f"u{i}" for i in range(10)]
        folds = stratified_kfold(["a"] * 5 + ["b"] * 5, k=5, seed=3)
        path = tmp_path / "folds.csv"
        write_folds_csv(path, ids, folds)
        loaded = load_folds_csv(path)
        for fold_id, fold in enumerate(folds):
            for i in fold:
                assert loaded[ids[i]] == fold_id

    def test_predictions_round_trip(self, tmp_path, demo_utterances):
        path = tmp_path / "preds.csv"
        path.write_text(
            "utterance_id,code_pred,fold_id,run_id\n"
            + "\n".join(f"{u.utterance_id},{u.code_pred.value},0,r1" for u in demo_utterances[:20])
            + "\n"
        )
        rows = load_predictions(path)
        assert len(rows) == 20
        true, pred = align_predictions(demo_utterances, rows)
        assert len(true) == len(pred) == 20
        report = weighted_metrics(confusion(true, pred))
        assert 0 <= report.accuracy <= 1

    def test_align_rejects_unknown_id(self, demo_utterances, tmp_path):
        path = tmp_path / "preds.csv"
        path.write_text("utterance_id,code_pred\nnope,W1\n")
        with pytest.raises(EmptyInput):
            align_predictions(demo_utterances, load_predictions(path))

    def test_metric_report_json_stable_key_order(self, tmp_path):
        from cps_synergy.evalkit import write_metric_report_json

        report = weighted_metrics(confusion(["A", "A", "B"], ["A", "B", "B"]))
        p1, p2 = tmp_path / "r1.json", tmp_path / "r2.json"
        write_metric_report_json(p1, report)
        write_metric_report_json(p2, report)
        assert p1.read_bytes() == p2.read_bytes()
        import json

        payload = json.loads(p1.read_text())
        assert list(payload) == ["accuracy", "weighted_precision", "weighted_recall", "weighted_f1", "per_class"]
        assert payload["accuracy"] == pytest.approx(2 / 3)
