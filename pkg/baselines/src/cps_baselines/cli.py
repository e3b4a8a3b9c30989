"""CLI: fit one classical baseline over exported folds and emit predictions."""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .runner import MODELS, run_baseline


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cps-baselines",
        description="Bag-of-words baseline classifiers over coded utterances",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="cross-fold fit/predict, emit predictions CSV")
    run.add_argument("--utterances", required=True, help="utterances CSV (labels in code_human)")
    run.add_argument("--folds", required=True, help="folds CSV (utterance_id, fold_id)")
    run.add_argument("--model", required=True, choices=MODELS)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", required=True, help="output predictions CSV")
    run.add_argument("--min-df", type=int, default=1, dest="min_df")
    run.add_argument("--idf", action="store_true", help="rescale term counts by inverse document frequency")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = run_baseline(
            args.utterances, args.folds, args.model, args.seed, args.out,
            min_df=args.min_df, use_idf=args.idf,
        )
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
