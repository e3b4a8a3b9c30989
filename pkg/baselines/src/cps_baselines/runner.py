"""Cross-fold baseline training over the shared file contracts.

Consumes an utterances CSV (labels in code_human) and a folds CSV
(utterance_id, fold_id), fits one classical model per fold on the
out-of-fold rows, and writes predictions in the standard
(utterance_id, code_pred, fold_id) contract.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from sklearn.ensemble import RandomForestClassifier
from sklearn.neighbors import KNeighborsClassifier
from sklearn.svm import LinearSVC
from sklearn.tree import DecisionTreeClassifier

from .features import featurize

MODELS = ("dt", "rf", "svm", "knn")


class FoldMismatch(ValueError):
    pass


def make_model(name: str, seed: int):
    if name == "dt":
        return DecisionTreeClassifier(random_state=seed)
    if name == "rf":
        return RandomForestClassifier(n_estimators=100, random_state=seed)
    if name == "svm":
        return LinearSVC(random_state=seed)
    if name == "knn":
        return KNeighborsClassifier(n_neighbors=5)
    raise ValueError(f"model must be one of {MODELS}, got {name!r}")


def read_labeled_utterances(path: str | Path) -> tuple[list[str], list[str], list[str]]:
    """(utterance_ids, texts, labels) from the standard utterances CSV."""
    ids, texts, labels = [], [], []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"utterance_id", "text", "code_human"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"utterances file must carry columns {sorted(required)}")
        for rec in reader:
            ids.append(rec["utterance_id"])
            texts.append(rec["text"])
            labels.append(rec["code_human"])
    return ids, texts, labels


def read_folds(path: str | Path) -> dict[str, int]:
    folds: dict[str, int] = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["utterance_id", "fold_id"]:
            raise ValueError("folds file must carry columns ['utterance_id', 'fold_id']")
        for rec in reader:
            folds[rec["utterance_id"]] = int(rec["fold_id"])
    if not folds:
        raise FoldMismatch("folds file has no rows")
    return folds


def run_baseline(
    utterances_path: str | Path,
    folds_path: str | Path,
    model: str,
    seed: int,
    out_path: str | Path,
    min_df: int = 1,
    use_idf: bool = False,
    tokenizer: Optional[Callable[[str], list[str]]] = None,
) -> Path:
    """Fit/predict across folds and write the predictions CSV. Deterministic
    for a fixed (corpus, folds, model, seed)."""
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}, got {model!r}")
    ids, texts, labels = read_labeled_utterances(utterances_path)
    fold_of = read_folds(folds_path)

    unknown = sorted(set(fold_of) - set(ids))
    if unknown:
        raise FoldMismatch(f"folds reference unknown utterance ids, e.g. {unknown[:3]}")
    in_folds = [i for i, uid in enumerate(ids) if uid in fold_of]
    if not in_folds:
        raise FoldMismatch("no overlap between folds file and corpus")
    for i in in_folds:
        if not labels[i]:
            raise FoldMismatch(f"utterance {ids[i]!r} is in the folds file but has no label")

    matrix, _vocab = featurize(texts, min_df=min_df, use_idf=use_idf, tokenizer=tokenizer)
    y = np.array(labels)

    predictions: dict[str, str] = {}
    for fold_id in sorted(set(fold_of.values())):
        test_idx = [i for i in in_folds if fold_of[ids[i]] == fold_id]
        train_idx = [i for i in in_folds if fold_of[ids[i]] != fold_id]
        if not test_idx or not train_idx:
            raise FoldMismatch(f"fold {fold_id} leaves an empty train or test side")
        clf = make_model(model, seed)
        clf.fit(matrix[train_idx], y[train_idx])
        for i, pred in zip(test_idx, clf.predict(matrix[test_idx])):
            predictions[ids[i]] = str(pred)

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["utterance_id", "code_pred", "fold_id"])
        for i in in_folds:
            uid = ids[i]
            writer.writerow([uid, predictions[uid], fold_of[uid]])
    return out_path
