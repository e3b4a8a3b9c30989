"""Classification-quality measurement for coded utterances.

Confusion matrices, support-weighted precision/recall/F1, Cohen's kappa,
stratified k-fold splits, and mean +/- sd summaries over repeated runs.
All ratio metrics are computed in exact rational arithmetic so algebraic
identities (weighted recall == accuracy) hold exactly; convert with
``float()`` when a decimal is wanted.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import BadK, EmptyInput, EmptyMatrix, LengthMismatch


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square count matrix indexed (true label, predicted label)."""

    labels: tuple
    counts: tuple  # tuple of tuples of int, rows = true labels

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def support(self, label) -> int:
        return sum(self.counts[self.labels.index(label)])

    def row(self, label) -> tuple:
        return self.counts[self.labels.index(label)]


@dataclass(frozen=True)
class ClassMetrics:
    precision: Fraction
    recall: Fraction
    f1: Fraction
    support: int


@dataclass(frozen=True)
class MetricReport:
    accuracy: Fraction
    weighted_precision: Fraction
    weighted_recall: Fraction
    weighted_f1: Fraction
    per_class: dict

    def to_dict(self) -> dict:
        """JSON-ready dict with stable key order and float values."""
        return {
            "accuracy": float(self.accuracy),
            "weighted_precision": float(self.weighted_precision),
            "weighted_recall": float(self.weighted_recall),
            "weighted_f1": float(self.weighted_f1),
            "per_class": {
                str(label): {
                    "precision": float(m.precision),
                    "recall": float(m.recall),
                    "f1": float(m.f1),
                    "support": m.support,
                }
                for label, m in self.per_class.items()
            },
        }


def confusion(true_codes: Sequence, pred_codes: Sequence, labels: Optional[Sequence] = None) -> ConfusionMatrix:
    """Tally the (true, predicted) count matrix.

    Labels default to the sorted union of both vectors; pass ``labels`` to fix
    an ordering (e.g. codebook order).
    """
    if len(true_codes) != len(pred_codes):
        raise LengthMismatch(len(true_codes), len(pred_codes))
    if not true_codes:
        raise EmptyInput("cannot build a confusion matrix from empty vectors")
    if labels is None:
        labels = sorted(set(true_codes) | set(pred_codes), key=str)
    labels = tuple(labels)
    index = {label: i for i, label in enumerate(labels)}
    counts = [[0] * len(labels) for _ in labels]
    for t, p in zip(true_codes, pred_codes):
        counts[index[t]][index[p]] += 1
    return ConfusionMatrix(labels=labels, counts=tuple(tuple(r) for r in counts))


def weighted_metrics(cm: ConfusionMatrix) -> MetricReport:
    """Accuracy plus support-weighted precision/recall/F1.

    Per class: precision = TP/(TP+FP), recall = TP/(TP+FN), F1 their harmonic
    mean; a zero denominator contributes 0. The weighted value is the
    support-share weighted sum over classes.
    """
    total = cm.total
    if total == 0:
        raise EmptyMatrix("confusion matrix has no counts")
    n = len(cm.labels)
    per_class = {}
    w_precision = w_recall = w_f1 = Fraction(0)
    trace = 0
    for i, label in enumerate(cm.labels):
        tp = cm.counts[i][i]
        trace += tp
        support = sum(cm.counts[i])
        pred_total = sum(cm.counts[r][i] for r in range(n))
        precision = Fraction(tp, pred_total) if pred_total else Fraction(0)
        recall = Fraction(tp, support) if support else Fraction(0)
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else Fraction(0)
        per_class[label] = ClassMetrics(precision, recall, f1, support)
        share = Fraction(support, total)
        w_precision += share * precision
        w_recall += share * recall
        w_f1 += share * f1
    return MetricReport(
        accuracy=Fraction(trace, total),
        weighted_precision=w_precision,
        weighted_recall=w_recall,
        weighted_f1=w_f1,
        per_class=per_class,
    )


def cohen_kappa(coder_a: Sequence, coder_b: Sequence) -> Fraction:
    """Chance-corrected agreement kappa = (p_o - p_e) / (1 - p_e).

    Expected agreement p_e comes from the two coders' marginal distributions.
    In the degenerate p_e = 1 case the convention is kappa = 1 for perfect
    observed agreement and 0 otherwise.
    """
    if len(coder_a) != len(coder_b):
        raise LengthMismatch(len(coder_a), len(coder_b))
    if not coder_a:
        raise EmptyInput("cannot compute kappa on empty vectors")
    cm = confusion(coder_a, coder_b)
    total = cm.total
    n = len(cm.labels)
    p_o = Fraction(sum(cm.counts[i][i] for i in range(n)), total)
    p_e = Fraction(0)
    for i in range(n):
        row = sum(cm.counts[i])
        col = sum(cm.counts[r][i] for r in range(n))
        p_e += Fraction(row, total) * Fraction(col, total)
    if p_e == 1:
        return Fraction(1) if p_o == 1 else Fraction(0)
    return (p_o - p_e) / (1 - p_e)


def stratified_kfold(labels: Sequence, k: int, seed: int) -> list[list[int]]:
    """Split indices 0..n-1 into k folds with per-class counts differing by <= 1.

    Within each class the (seeded) shuffled indices are dealt round-robin,
    with the starting fold rotating across classes so overall fold sizes stay
    balanced. Deterministic for a fixed (labels, k, seed).
    """
    n = len(labels)
    if k < 2:
        raise BadK(f"k must be >= 2, got {k}")
    if n < k:
        raise BadK(f"need at least k={k} samples, got {n}")
    rng = np.random.default_rng(seed)
    by_class: dict = {}
    for i, label in enumerate(labels):
        by_class.setdefault(label, []).append(i)

    folds: list[list[int]] = [[] for _ in range(k)]
    start = 0
    for label in sorted(by_class, key=str):
        idx = np.array(by_class[label])
        if len(idx) < k:
            warnings.warn(
                f"class {label!r} has {len(idx)} member(s), fewer than one per fold; "
                "distributing round-robin",
                stacklevel=2,
            )
        rng.shuffle(idx)
        for j, i in enumerate(idx):
            folds[(start + j) % k].append(int(i))
        start = (start + len(idx)) % k
    for fold in folds:
        fold.sort()
    return folds


def kfold(n: int, k: int, seed: int) -> list[list[int]]:
    """Plain (unstratified) shuffled k-fold split of indices 0..n-1."""
    if k < 2:
        raise BadK(f"k must be >= 2, got {k}")
    if n < k:
        raise BadK(f"need at least k={k} samples, got {n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    folds = [sorted(int(i) for i in order[f::k]) for f in range(k)]
    return folds


SUMMARY_METRICS = ("accuracy", "weighted_precision", "weighted_recall", "weighted_f1")


def summarize_runs(reports: Sequence[MetricReport]) -> dict:
    """Mean and sample standard deviation (n-1) per metric over repeated runs.

    A single report yields sd = 0 by convention.
    """
    if not reports:
        raise EmptyInput("need at least one report to summarize")
    summary = {}
    for name in SUMMARY_METRICS:
        values = [float(getattr(r, name)) for r in reports]
        mean = sum(values) / len(values)
        if len(values) == 1:
            sd = 0.0
        else:
            sd = (sum((v - mean) ** 2 for v in values) / (len(values) - 1)) ** 0.5
        summary[name] = {"mean": mean, "sd": sd}
    return summary


# --- file contracts ---

PREDICTION_COLUMNS = ["utterance_id", "code_pred", "fold_id", "run_id"]
FOLD_COLUMNS = ["utterance_id", "fold_id"]


@dataclass(frozen=True)
class PredictionRow:
    utterance_id: str
    code_pred: str
    fold_id: Optional[int] = None
    run_id: Optional[str] = None


def load_predictions(path: str | Path) -> list[PredictionRow]:
    """Read a predictions CSV (columns utterance_id, code_pred[, fold_id, run_id])."""
    path = Path(path)
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"utterance_id", "code_pred"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise EmptyInput(f"predictions file must carry columns {sorted(required)}")
        for rec in reader:
            fold = rec.get("fold_id")
            rows.append(
                PredictionRow(
                    utterance_id=rec["utterance_id"],
                    code_pred=rec["code_pred"],
                    fold_id=int(fold) if fold not in (None, "") else None,
                    run_id=rec.get("run_id") or None,
                )
            )
    if not rows:
        raise EmptyInput("predictions file has no rows")
    return rows


def align_predictions(utterances, predictions: Sequence[PredictionRow]) -> tuple[list, list]:
    """Join predictions to human codes by utterance_id.

    Returns (true_codes, pred_codes) over the prediction rows, in file order.
    Unknown ids or missing human codes are contract violations.
    """
    human = {}
    for utt in utterances:
        human[utt.utterance_id] = utt.code_human
    true_codes, pred_codes = [], []
    for row in predictions:
        if row.utterance_id not in human:
            raise EmptyInput(f"prediction for unknown utterance_id {row.utterance_id!r}")
        label = human[row.utterance_id]
        if label is None:
            raise EmptyInput(f"utterance {row.utterance_id!r} has no human code to score against")
        true_codes.append(label.value)
        pred_codes.append(row.code_pred)
    if len(true_codes) != len(pred_codes):
        raise LengthMismatch(len(true_codes), len(pred_codes))
    return true_codes, pred_codes


def write_folds_csv(path: str | Path, utterance_ids: Sequence[str], folds: Sequence[Sequence[int]]) -> None:
    """Export fold assignments as (utterance_id, fold_id) rows."""
    path = Path(path)
    assignment = {}
    for fold_id, fold in enumerate(folds):
        for i in fold:
            assignment[utterance_ids[i]] = fold_id
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(FOLD_COLUMNS)
        for uid in utterance_ids:
            writer.writerow([uid, assignment[uid]])


def load_folds_csv(path: str | Path) -> dict[str, int]:
    """Read fold assignments back as {utterance_id: fold_id}."""
    path = Path(path)
    out: dict[str, int] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != FOLD_COLUMNS:
            raise EmptyInput(f"folds file must carry columns {FOLD_COLUMNS}")
        for rec in reader:
            out[rec["utterance_id"]] = int(rec["fold_id"])
    if not out:
        raise EmptyInput("folds file has no rows")
    return out


def write_metric_report_json(path: str | Path, report: MetricReport, extras: Optional[dict] = None) -> None:
    payload = report.to_dict()
    if extras:
        payload["extras"] = extras
    Path(path).write_text(json.dumps(payload, indent=2))
