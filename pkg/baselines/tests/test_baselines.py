import time

import numpy as np
import pytest

from cps_baselines.cli import main as cli_main
from cps_baselines.features import EmptyCorpus, default_tokenizer, featurize
from cps_baselines.runner import MODELS, FoldMismatch, run_baseline

# the scoring harness and fold exporter come from the primary package
from cps_synergy.corpus import Code, Utterance, parse_utterances, write_utterances_csv
from cps_synergy.evalkit import (
    align_predictions,
    confusion,
    load_predictions,
    stratified_kfold,
    weighted_metrics,
    write_folds_csv,
)

# disjoint word pools make the classes linearly separable
POOLS = {
    "W1": ["hello", "greetings", "welcome", "morning", "around"],
    "W2": ["link", "resource", "article", "reference", "dataset"],
    "S1": ["suggest", "propose", "idea", "maybe", "approach"],
    "C1": ["merged", "final", "document", "integrated", "draft"],
}


def synthetic_corpus(tmp_path, n_per_class=100, seed=0):
    rng = np.random.default_rng(seed)
    utterances = []
    seq = 0
    for label, pool in sorted(POOLS.items()):
        for _ in range(n_per_class):
            words = rng.choice(pool, size=rng.integers(3, 7))
            utterances.append(
                Utterance(
                    utterance_id=f"s{seq:04d}",
                    group_id="G1",
                    week=0,
                    seq=seq,
                    speaker_id="sp",
                    text=" ".join(words),
                    code_human=Code(label),
                )
            )
            seq += 1
    path = tmp_path / "utterances.csv"
    write_utterances_csv(path, utterances)
    return path, utterances


def export_folds(tmp_path, utterances, k=5, seed=3):
    labels = [u.code_human.value for u in utterances]
    folds = stratified_kfold(labels, k=k, seed=seed)
    path = tmp_path / "folds.csv"
    write_folds_csv(path, [u.utterance_id for u in utterances], folds)
    return path


class TestFeaturize:
    def test_identical_texts_identical_vectors(self):
        matrix, _ = featurize(["share the link", "share the link"])
        assert (matrix[0] != matrix[1]).nnz == 0

    def test_empty_string_gives_zero_vector(self):
        matrix, vocab = featurize(["alpha beta", ""])
        assert matrix[1].nnz == 0
        assert vocab == ["alpha", "beta"]

    def test_vocabulary_stable_across_reruns(self):
        texts = ["b a", "c a", "d b a"]
        assert featurize(texts)[1] == featurize(texts)[1] == ["a", "b", "c", "d"]

    def test_min_df_floor(self):
        _, vocab = featurize(["rare common", "common", "common again"], min_df=2)
        assert vocab == ["common"]

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            featurize([])

    def test_cjk_falls_back_to_characters(self):
        tokens = default_tokenizer("我们 分享 links")
        assert "我" in tokens and "们" in tokens and "links" in tokens

    def test_idf_downweights_ubiquitous_terms(self):
        texts = ["common unique1", "common unique2", "common unique3"]
        matrix, vocab = featurize(texts, use_idf=True)
        common = vocab.index("common")
        unique = vocab.index("unique1")
        assert matrix[0, common] < matrix[0, unique]


class TestRunBaseline:
    def test_deterministic_predictions(self, tmp_path):
        upath, utts = synthetic_corpus(tmp_path, n_per_class=30)
        fpath = export_folds(tmp_path, utts)
        out1 = run_baseline(upath, fpath, "dt", seed=1, out_path=tmp_path / "p1.csv")
        out2 = run_baseline(upath, fpath, "dt", seed=1, out_path=tmp_path / "p2.csv")
        assert out1.read_bytes() == out2.read_bytes()

    def test_every_fold_row_predicted_once(self, tmp_path):
        upath, utts = synthetic_corpus(tmp_path, n_per_class=25)
        fpath = export_folds(tmp_path, utts)
        out = run_baseline(upath, fpath, "knn", seed=0, out_path=tmp_path / "p.csv")
        rows = load_predictions(out)
        assert len(rows) == len(utts)
        assert len({r.utterance_id for r in rows}) == len(utts)

    def test_fold_corpus_mismatch(self, tmp_path):
        upath, utts = synthetic_corpus(tmp_path, n_per_class=10)
        bad = tmp_path / "folds.csv"
        bad.write_text("utterance_id,fold_id\nghost,0\n")
        with pytest.raises(FoldMismatch):
            run_baseline(upath, bad, "dt", seed=0, out_path=tmp_path / "p.csv")

    def test_fold_assignment_is_file_driven(self, tmp_path):
        # dropping a training row from the corpus never reassigns test folds
        upath, utts = synthetic_corpus(tmp_path, n_per_class=20)
        fpath = export_folds(tmp_path, utts)
        run_baseline(upath, fpath, "dt", seed=1, out_path=tmp_path / "full.csv")
        fold_of = {r.utterance_id: r.fold_id for r in load_predictions(tmp_path / "full.csv")}

        import csv

        with fpath.open() as fh:
            fold_rows = list(csv.DictReader(fh))
        dropped = fold_rows[0]["utterance_id"]
        trimmed_folds = tmp_path / "folds_trimmed.csv"
        trimmed_folds.write_text(
            "utterance_id,fold_id\n"
            + "".join(f"{r['utterance_id']},{r['fold_id']}\n" for r in fold_rows if r["utterance_id"] != dropped)
        )
        run_baseline(upath, trimmed_folds, "dt", seed=1, out_path=tmp_path / "trimmed.csv")
        for row in load_predictions(tmp_path / "trimmed.csv"):
            assert row.fold_id == fold_of[row.utterance_id]

    def test_unknown_model_rejected(self, tmp_path):
        upath, utts = synthetic_corpus(tmp_path, n_per_class=10)
        fpath = export_folds(tmp_path, utts)
        with pytest.raises(ValueError):
            run_baseline(upath, fpath, "mlp", seed=0, out_path=tmp_path / "p.csv")

    def test_cli_rejects_unknown_model_token(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as err:
            cli_main(["run", "--utterances", "u.csv", "--folds", "f.csv", "--model", "mlp", "--out", "p.csv"])
        assert err.value.code == 2  # argparse closed choice set


class TestSecondaryAcceptance:
    def test_all_models_exceed_point_nine_through_the_harness(self, tmp_path):
        start = time.perf_counter()
        upath, utts = synthetic_corpus(tmp_path, n_per_class=100, seed=4)
        fpath = export_folds(tmp_path, utts, k=5, seed=5)
        corpus = parse_utterances(upath)
        for model in MODELS:
            out = tmp_path / f"pred_{model}.csv"
            rc = cli_main([
                "run", "--utterances", str(upath), "--folds", str(fpath),
                "--model", model, "--seed", "7", "--out", str(out),
            ])
            assert rc == 0
            predictions = load_predictions(out)  # round-trips the contract
            true, pred = align_predictions(corpus, predictions)
            report = weighted_metrics(confusion(true, pred))
            accuracy = float(report.accuracy)
            print(f"[{'PASS' if accuracy > 0.9 else 'FAIL'}] baseline {model}: accuracy {accuracy:.3f}")
            assert accuracy > 0.9, f"{model} accuracy {accuracy}"
        elapsed = time.perf_counter() - start
        print(f"[PASS] baseline pipeline acceptance ({elapsed:.1f}s)")
        assert elapsed < 60.0
