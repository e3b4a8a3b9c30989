"""Command-line pipeline: ingest, code, analyze, validate, compare, demo.

Settings come from an optional TOML config file; command-line flags win
over config values. Exit codes are stable for CI: 0 clean, 2 completed
with warnings, 1 failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import coder as coder_mod
from . import demo as demo_mod
from .corpus import (
    BUILTIN_CODEBOOK,
    aggregate_metrics,
    load_codebook,
    parse_group_profiles,
    parse_utterances,
    validate_corpus,
    write_utterances_csv,
)
from .errors import CpsSynergyError, TooFewPairs
from .sdm import run_pipeline, write_order_params_csv, write_synergy_csv, write_weights_json
from .stats import permutation_test_paired, run_omnibus

EXIT_CLEAN = 0
EXIT_FAILURE = 1
EXIT_WARNINGS = 2

ORDER_METRICS = ("u_O", "u_W", "u_S", "u_C")
ALL_OUTCOMES = ORDER_METRICS + ("synergy",)


@dataclass
class RunConfig:
    utterances: Optional[str] = None
    groups: Optional[str] = None
    codebook: Optional[str] = None
    code_source: str = "human"
    normalization: str = "per_member"
    scope: str = "global"
    sign_convention: str = "prose"
    zero_fill: bool = False
    seed: Optional[int] = None
    iterations: int = 10000
    alpha: float = 0.05
    out_dir: str = "out"
    factor: str = "problem_type"
    outcomes: tuple = ALL_OUTCOMES
    shot_mode: str = "zero_shot"
    coder: dict = field(default_factory=dict)


_FLAG_VALUES = {
    "normalization": {"per-member": "per_member", "raw": "raw_count"},
    "scope": {"global": "global", "per-group": "per_group"},
    "sign_convention": {"prose": "prose", "paper-literal": "paper_literal"},
}


def _merge_config(args: argparse.Namespace) -> RunConfig:
    file_values: dict = {}
    if getattr(args, "config", None):
        with open(args.config, "rb") as fh:
            file_values = tomllib.load(fh)

    cfg = RunConfig()
    cfg.coder = dict(file_values.get("coder", {}))

    def pick(flag_name, config_key, mapping=None):
        value = getattr(args, flag_name, None)
        if value is None:
            value = file_values.get(config_key)
        if value is None:
            return None
        if mapping is not None:
            if value not in mapping and value not in mapping.values():
                raise ValueError(f"bad value {value!r} for {config_key}")
            value = mapping.get(value, value)
        return value

    for flag, key, mapping in [
        ("utterances", "utterances", None),
        ("groups", "groups", None),
        ("codebook", "codebook", None),
        ("code_source", "code_source", None),
        ("normalization", "normalization", _FLAG_VALUES["normalization"]),
        ("scope", "scope", _FLAG_VALUES["scope"]),
        ("sign", "sign_convention", _FLAG_VALUES["sign_convention"]),
        ("zero_fill", "zero_fill", None),
        ("seed", "seed", None),
        ("iterations", "iterations", None),
        ("alpha", "alpha", None),
        ("out_dir", "out_dir", None),
        ("factor", "factor", None),
        ("shot_mode", "shot_mode", None),
    ]:
        value = pick(flag, key, mapping)
        if value is not None:
            attr = "sign_convention" if flag == "sign" else flag
            setattr(cfg, attr, value)
    outcomes = getattr(args, "outcomes", None) or file_values.get("outcomes")
    if outcomes:
        if isinstance(outcomes, str):
            outcomes = [o.strip() for o in outcomes.split(",") if o.strip()]
        for o in outcomes:
            if o not in ALL_OUTCOMES:
                raise ValueError(f"unknown outcome {o!r}; choose from {ALL_OUTCOMES}")
        cfg.outcomes = tuple(outcomes)
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_corpus(cfg: RunConfig):
    if not cfg.utterances or not cfg.groups:
        raise CpsSynergyError("--utterances and --groups are required (flag or config)")
    utterances = parse_utterances(cfg.utterances)
    profiles = parse_group_profiles(cfg.groups)
    return utterances, profiles


def _codebook(cfg: RunConfig):
    if cfg.codebook:
        return load_codebook(cfg.codebook)
    return BUILTIN_CODEBOOK


def cmd_ingest(cfg: RunConfig) -> int:
    utterances, profiles = _load_corpus(cfg)
    report = validate_corpus(utterances, profiles)
    out = _out_dir(cfg) / "validation_report.json"
    out.write_text(json.dumps(report.to_dict(), indent=2))
    print(f"wrote {out}")
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_CLEAN if report.clean else EXIT_WARNINGS


def _make_transport(cfg: RunConfig, coder_config: coder_mod.CoderConfig):
    kind = cfg.coder.get("transport", "http")
    if kind == "http":
        return coder_mod.HttpTransport(coder_config)
    if kind == "mock":
        fixed = cfg.coder.get("mock_response", "W1")
        period = int(cfg.coder.get("mock_unparseable_period", 0))
        if period > 0:
            import threading

            counter = {"n": 0}
            lock = threading.Lock()

            def script(utt):
                with lock:
                    counter["n"] += 1
                    n = counter["n"]
                return "cannot decide" if n % period == 0 else fixed

            return coder_mod.MockTransport(script)
        return coder_mod.MockTransport(fixed)
    if kind == "demo":
        # replay the bundled corpus's biased predictions
        return coder_mod.MockTransport(lambda utt: utt.code_human.value if utt.code_human else "I")
    raise CpsSynergyError(f"unknown transport {kind!r} (use http, mock, or demo)")


def cmd_code(cfg: RunConfig) -> int:
    utterances, _profiles = _load_corpus(cfg)
    keys = {f.name for f in coder_mod.CoderConfig.__dataclass_fields__.values()}
    coder_config = coder_mod.CoderConfig(**{k: v for k, v in cfg.coder.items() if k in keys})
    transport = _make_transport(cfg, coder_config)
    coded, report = coder_mod.code_corpus(
        utterances, coder_config, shot_mode=cfg.shot_mode, transport=transport, codebook=_codebook(cfg)
    )
    out = _out_dir(cfg)
    write_utterances_csv(out / "utterances_coded.csv", coded)
    (out / "coding_report.json").write_text(json.dumps(report.to_dict(), indent=2))
    print(f"coded {report.coded}/{report.total} utterances ({report.cache_hits} cache hits)")
    print(f"wrote {out / 'utterances_coded.csv'} and {out / 'coding_report.json'}")
    return EXIT_WARNINGS if report.failed else EXIT_CLEAN


def cmd_analyze(cfg: RunConfig) -> int:
    utterances, profiles = _load_corpus(cfg)
    panel = aggregate_metrics(
        utterances, profiles, code_source=cfg.code_source,
        normalization=cfg.normalization, zero_fill=cfg.zero_fill,
    )
    result = run_pipeline(panel, scope=cfg.scope, sign_convention=cfg.sign_convention)
    out = _out_dir(cfg)
    write_order_params_csv(out / "order_params.csv", result.orders)
    write_synergy_csv(out / "synergy.csv", result.synergy)
    write_weights_json(out / "weights.json", result)
    print(f"wrote {out / 'order_params.csv'}, {out / 'synergy.csv'}, {out / 'weights.json'}")
    return EXIT_CLEAN


def _paired_series(cfg: RunConfig, utterances, profiles):
    """Per-metric paired (human, pred) vectors joined on (group, week)."""
    series = {}
    results = {}
    for source in ("human", "pred"):
        panel = aggregate_metrics(
            utterances, profiles, code_source=source,
            normalization=cfg.normalization, zero_fill=cfg.zero_fill,
        )
        results[source] = run_pipeline(panel, scope=cfg.scope, sign_convention=cfg.sign_convention)
    for metric in ORDER_METRICS:
        h = {(p.group_id, p.week): getattr(p, metric) for p in results["human"].orders.points}
        g = {(p.group_id, p.week): getattr(p, metric) for p in results["pred"].orders.points}
        keys = sorted(set(h) & set(g))
        series[metric] = ([h[k] for k in keys], [g[k] for k in keys])
    h = results["human"].synergy.by_key()
    g = results["pred"].synergy.by_key()
    keys = sorted(set(h) & set(g))
    series["synergy"] = ([h[k] for k in keys], [g[k] for k in keys])
    return series


def cmd_validate(cfg: RunConfig) -> int:
    if cfg.seed is None:
        raise CpsSynergyError("--seed is required for the permutation validation")
    utterances, profiles = _load_corpus(cfg)
    series = _paired_series(cfg, utterances, profiles)
    entries = []
    for i, metric in enumerate(ALL_OUTCOMES):
        human_vec, pred_vec = series[metric]
        try:
            res = permutation_test_paired(
                human_vec, pred_vec, iterations=cfg.iterations,
                seed=cfg.seed + i, histogram_bins=30,
            )
        except TooFewPairs:
            entries.append({"metric": metric, "error": f"too few paired observations ({len(human_vec)})"})
            continue
        entry = res.to_dict()
        entry["metric"] = metric
        entries.append(entry)
    out = _out_dir(cfg) / "stats_report.json"
    out.write_text(json.dumps(entries, indent=2))
    print(f"wrote {out}")
    return EXIT_CLEAN


def cmd_compare(cfg: RunConfig) -> int:
    utterances, profiles = _load_corpus(cfg)
    if cfg.factor not in ("problem_type", "quality"):
        raise CpsSynergyError(f"factor must be problem_type or quality, got {cfg.factor!r}")
    panel = aggregate_metrics(
        utterances, profiles, code_source=cfg.code_source,
        normalization=cfg.normalization, zero_fill=cfg.zero_fill,
    )
    result = run_pipeline(panel, scope=cfg.scope, sign_convention=cfg.sign_convention)
    factor_of = {p.group_id: getattr(p, cfg.factor) for p in profiles}

    rows_by_outcome: dict = {}
    for point in result.orders.points:
        for metric in ORDER_METRICS:
            rows_by_outcome.setdefault(metric, []).append(
                {cfg.factor: factor_of[point.group_id], metric: getattr(point, metric)}
            )
    for point in result.synergy.points:
        rows_by_outcome.setdefault("synergy", []).append(
            {cfg.factor: factor_of[point.group_id], "synergy": point.value}
        )

    entries = []
    any_warnings = False
    for outcome in cfg.outcomes:
        rows = rows_by_outcome.get(outcome, [])
        if not rows:
            entries.append({"outcome": outcome, "error": "no observations"})
            any_warnings = True
            continue
        res = run_omnibus(rows, outcome, cfg.factor, alpha=cfg.alpha)
        entries.append(res.to_dict())
        any_warnings = any_warnings or bool(res.warnings)
    out = _out_dir(cfg) / "stats_report.json"
    out.write_text(json.dumps(entries, indent=2))
    print(f"wrote {out}")
    return EXIT_WARNINGS if any_warnings else EXIT_CLEAN


def cmd_demo(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    upath, gpath = demo_mod.write_demo_corpus(out / "demo_corpus")
    print(f"bundled corpus at {upath.parent}")
    base = RunConfig(
        utterances=str(upath),
        groups=str(gpath),
        code_source="human",
        normalization=cfg.normalization,
        scope=cfg.scope,
        sign_convention=cfg.sign_convention,
        seed=cfg.seed if cfg.seed is not None else 1234,
        iterations=cfg.iterations,
        alpha=cfg.alpha,
        out_dir=str(out),
        coder={"transport": "demo", "cache_dir": str(out / "cache"), "model_name": "demo-mock"},
    )
    rc = cmd_ingest(base)
    rc = max(rc, cmd_code(base))
    rc = max(rc, cmd_analyze(base))
    rc = max(rc, cmd_validate(base))
    for factor in ("problem_type", "quality"):
        fac_cfg = RunConfig(**{**base.__dict__, "factor": factor, "out_dir": str(out / f"compare_{factor}")})
        rc = max(rc, cmd_compare(fac_cfg))
    print("demo pipeline complete")
    return rc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file; flags override its values")
    common.add_argument("--utterances", help="utterances CSV/JSONL path")
    common.add_argument("--groups", help="group profiles CSV path")
    common.add_argument("--codebook", help="codebook override CSV path")
    common.add_argument("--code-source", dest="code_source", choices=["human", "pred"])
    common.add_argument("--normalization", choices=["per-member", "raw"])
    common.add_argument("--scope", choices=["global", "per-group"])
    common.add_argument("--sign", choices=["prose", "paper-literal"])
    common.add_argument("--zero-fill", dest="zero_fill", action="store_const", const=True)
    common.add_argument("--seed", type=int)
    common.add_argument("--iterations", type=int)
    common.add_argument("--alpha", type=float)
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--factor", choices=["problem_type", "quality"])
    common.add_argument("--outcomes", help="comma-separated subset of u_O,u_W,u_S,u_C,synergy")
    common.add_argument("--shot-mode", dest="shot_mode", choices=["zero_shot", "few_shot"])

    parser = argparse.ArgumentParser(
        prog="cps-synergy",
        description="Collaboration measurement over coded group-discourse corpora",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common], help="validate corpus files, write validation_report.json")
    sub.add_parser("code", parents=[common], help="fill predicted codes via the configured transport")
    sub.add_parser("analyze", parents=[common], help="order parameters, synergy, and weights files")
    sub.add_parser("validate", parents=[common], help="paired permutation tests, human vs predicted")
    sub.add_parser("compare", parents=[common], help="omnibus group comparisons over a factor")
    sub.add_parser("demo", parents=[common], help="run the bundled synthetic corpus end to end")
    return parser


COMMANDS = {
    "ingest": cmd_ingest,
    "code": cmd_code,
    "analyze": cmd_analyze,
    "validate": cmd_validate,
    "compare": cmd_compare,
    "demo": cmd_demo,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        return COMMANDS[args.command](cfg)
    except (CpsSynergyError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
