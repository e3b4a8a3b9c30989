"""Scoring automatic coders: confusion matrices, weighted metrics, kappa,
stratified folds, and multi-run summaries.

    python demos/03_classifier_evaluation.py
"""

from fractions import Fraction

import numpy as np

from cps_synergy.demo import build_demo_corpus
from cps_synergy.evalkit import (
    cohen_kappa,
    confusion,
    stratified_kfold,
    summarize_runs,
    weighted_metrics,
)

utterances, _ = build_demo_corpus()
true = [u.code_human.value for u in utterances]
pred = [u.code_pred.value for u in utterances]

cm = confusion(true, pred)
print(f"confusion matrix over {cm.total} utterances, labels {cm.labels}")
report = weighted_metrics(cm)
print(f"accuracy           {float(report.accuracy):.4f}  (exact {report.accuracy})")
print(f"weighted precision {float(report.weighted_precision):.4f}")
print(f"weighted recall    {float(report.weighted_recall):.4f}  (always equals accuracy)")
print(f"weighted F1        {float(report.weighted_f1):.4f}")

print("\nper-class detail (the biased coder dilutes W2 into S1):")
for label in ("W2", "S1"):
    m = report.per_class[label]
    print(f"  {label}: precision={float(m.precision):.3f} recall={float(m.recall):.3f} support={m.support}")

kappa = cohen_kappa(true, pred)
print(f"\nchance-corrected agreement kappa = {float(kappa):.4f} (exact {kappa})")

folds = stratified_kfold(true, k=5, seed=7)
print(f"\nstratified 5-fold sizes: {[len(f) for f in folds]}")

# pretend we evaluated five runs of a model with slightly varying quality
rng = np.random.default_rng(1)
runs = []
for _ in range(5):
    noisy = [p if rng.random() > 0.05 else "I" for p in pred]
    runs.append(weighted_metrics(confusion(true, noisy)))
summary = summarize_runs(runs)
for name, stats in summary.items():
    print(f"{name}: {stats['mean']:.4f} +/- {stats['sd']:.4f}")

assert report.weighted_recall == report.accuracy  # exact rational identity
assert isinstance(report.accuracy, Fraction)
