"""Order parameters and synergy degrees for the four discourse subsystems.

Pipeline over a metric panel: min/max standardization with 5%-inflated
bounds, dispersion-conflict (CRITIC) weights within each subsystem,
weighted subsystem order parameters per (group, week), and the weekly
synergy degree built from week-over-week order-parameter changes.

All steps are pure and deterministic; reordering panel observations never
changes a result.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .corpus import SUBSYSTEMS, TASK_CODES, MetricObservation, MetricPanel
from .errors import EmptyPanel, InsufficientObservations, MissingWeight

SUBSYSTEM_ORDER = ("O", "W", "S", "C")


@dataclass
class StandardizedPanel:
    """Panel with values mapped into [0, 1] plus the bounds that did it.

    ``bounds`` maps code -> (alpha, beta) under global scope and
    group_id -> {code: (alpha, beta)} under per-group scope.
    """

    observations: list[MetricObservation]
    bounds: dict
    scope: str  # "global" | "per_group"
    warnings: list[str] = field(default_factory=list)

    def column(self, code: str) -> list[float]:
        return [obs.values[code] for obs in self.observations]


@dataclass
class SubsystemWeights:
    """Per-subsystem metric weights; each subsystem's weights sum to 1."""

    weights: dict  # subsystem -> {code: weight}
    warnings: list[str] = field(default_factory=list)

    def for_code(self, code: str) -> float:
        sub = code[0]
        try:
            return self.weights[sub][code]
        except KeyError:
            raise MissingWeight(code) from None


@dataclass(frozen=True)
class OrderPoint:
    group_id: str
    week: int
    u_O: float
    u_W: float
    u_S: float
    u_C: float

    def value(self, subsystem: str) -> float:
        return getattr(self, f"u_{subsystem}")


@dataclass
class OrderSeries:
    points: list[OrderPoint]

    def by_key(self) -> dict:
        return {(p.group_id, p.week): p for p in self.points}


@dataclass(frozen=True)
class SynergyPoint:
    group_id: str
    week: int
    value: float


@dataclass
class SynergySeries:
    points: list[SynergyPoint]
    sign_convention: str  # "prose" | "paper_literal"

    def by_key(self) -> dict:
        return {(p.group_id, p.week): p.value for p in self.points}


def _standardize_block(observations: Sequence[MetricObservation], label: str, warnings: list[str]):
    """Bounds and u-values for one scope block (whole panel or one group)."""
    bounds = {}
    columns = {}
    for code in TASK_CODES:
        col = np.array([obs.values[code] for obs in observations], dtype=float)
        hi, lo = float(col.max()), float(col.min())
        alpha, beta = hi * 1.05, lo * 0.95
        bounds[code] = (alpha, beta)
        if hi == lo:
            if hi == 0.0:
                # All-zero metric: bounds collapse, define u = 0.
                warnings.append(f"metric {code}{label} is all zero; standardized to 0")
                columns[code] = np.zeros(len(observations))
            else:
                # Constant nonzero series: (v - 0.95v) / (1.05v - 0.95v) = 1/2
                # analytically; assign it directly so the identity is exact.
                columns[code] = np.full(len(observations), 0.5)
        else:
            columns[code] = (col - beta) / (alpha - beta)
    return bounds, columns


def standardize(panel: MetricPanel, scope: str = "global") -> StandardizedPanel:
    """Map every metric into [0, 1] via u = (e - beta) / (alpha - beta).

    Bounds stretch the observed range by 5% on both ends: alpha = 1.05 * max,
    beta = 0.95 * min, taken over all observations (``global``) or within
    each group (``per_group``). A constant series lands exactly on 0.5; an
    all-zero series collapses to 0 with a warning.
    """
    if scope not in ("global", "per_group"):
        raise ValueError(f"scope must be 'global' or 'per_group', got {scope!r}")
    if not panel.observations:
        raise EmptyPanel("metric panel has no observations")

    # Canonical (group, week) order makes every downstream float reduction
    # independent of how the panel was assembled (set semantics).
    ordered = sorted(panel.observations, key=lambda o: (o.group_id, o.week))

    warnings: list[str] = []
    if scope == "global":
        bounds, columns = _standardize_block(ordered, "", warnings)
        observations = [
            MetricObservation(obs.group_id, obs.week, {c: float(columns[c][i]) for c in TASK_CODES})
            for i, obs in enumerate(ordered)
        ]
        return StandardizedPanel(observations, bounds, scope, warnings)

    by_group: dict = {}
    for obs in ordered:
        by_group.setdefault(obs.group_id, []).append(obs)
    bounds_by_group = {}
    observations = []
    for group_id in sorted(by_group):
        group_obs = by_group[group_id]
        g_bounds, g_columns = _standardize_block(group_obs, f" in group {group_id}", warnings)
        bounds_by_group[group_id] = g_bounds
        for i, obs in enumerate(group_obs):
            observations.append(
                MetricObservation(obs.group_id, obs.week, {c: float(g_columns[c][i]) for c in TASK_CODES})
            )
    return StandardizedPanel(observations, bounds_by_group, scope, warnings)


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson r; 0 by convention when either column has zero variance."""
    cx, cy = x - x.mean(), y - y.mean()
    denom = math.sqrt(float(cx @ cx) * float(cy @ cy))
    if denom == 0.0:
        return 0.0
    return float(cx @ cy) / denom


def critic_weights(std: StandardizedPanel) -> SubsystemWeights:
    """Information-content weights inside each subsystem.

    Metric j gets p_j = sigma_j * sum_k (1 - r_jk) over the subsystem's
    metrics (sigma: sample sd of the standardized column, r: Pearson
    correlation, r_jj = 1), normalized to w_j = p_j / sum p. A single-metric
    subsystem takes weight 1; a subsystem whose p all vanish falls back to
    uniform weights with a warning.
    """
    warnings: list[str] = []
    n = len(std.observations)
    weights: dict = {}
    for sub in SUBSYSTEM_ORDER:
        codes = SUBSYSTEMS[sub]
        if len(codes) == 1:
            weights[sub] = {codes[0]: 1.0}
            continue
        if n < 2:
            raise InsufficientObservations(sub)
        cols = {c: np.array(std.column(c), dtype=float) for c in codes}
        p = {}
        for j in codes:
            sigma = float(cols[j].std(ddof=1))
            conflict = sum(1.0 - _pearson(cols[j], cols[k]) for k in codes)
            p[j] = sigma * conflict
        total = sum(p.values())
        if total == 0.0:
            warnings.append(f"subsystem {sub} has no dispersion-conflict signal; uniform weights")
            weights[sub] = {c: 1.0 / len(codes) for c in codes}
        else:
            weights[sub] = {c: p[c] / total for c in codes}
    return SubsystemWeights(weights, warnings)


def uniform_weights() -> SubsystemWeights:
    """Equal weights within each subsystem (no dispersion signal available)."""
    return SubsystemWeights({s: {c: 1.0 / len(codes) for c in codes} for s, codes in SUBSYSTEMS.items()})


def order_parameters(std: StandardizedPanel, weights: SubsystemWeights) -> OrderSeries:
    """Weighted subsystem order parameter u_s per (group, week)."""
    for code in TASK_CODES:
        weights.for_code(code)  # raises MissingWeight early
    points = []
    for obs in sorted(std.observations, key=lambda o: (o.group_id, o.week)):
        u = {
            sub: sum(weights.weights[sub][c] * obs.values[c] for c in SUBSYSTEMS[sub])
            for sub in SUBSYSTEM_ORDER
        }
        points.append(OrderPoint(obs.group_id, obs.week, u["O"], u["W"], u["S"], u["C"]))
    return OrderSeries(points)


def synergy_degrees(
    orders: OrderSeries,
    sign_convention: str = "prose",
    bridge_gaps: bool = False,
) -> SynergySeries:
    """Weekly synergy degree from co-movement of the four order parameters.

    For consecutive present weeks, the magnitude is sqrt(|prod_s delta_s|)
    over the four subsystem changes; the product's sign decides direction
    (any zero delta gives 0). Under the ``prose`` convention a positive
    product (synchronized movement) yields a positive value;
    ``paper_literal`` negates it. With ``bridge_gaps`` deltas reach back to
    the group's last present week instead of requiring week t-1.
    """
    if sign_convention not in ("prose", "paper_literal"):
        raise ValueError(f"sign_convention must be 'prose' or 'paper_literal', got {sign_convention!r}")
    by_group: dict = {}
    for point in orders.points:
        by_group.setdefault(point.group_id, []).append(point)

    points = []
    for group_id in sorted(by_group):
        series = sorted(by_group[group_id], key=lambda p: p.week)
        for prev, cur in zip(series, series[1:]):
            if not bridge_gaps and cur.week != prev.week + 1:
                continue
            prod = 1.0
            for sub in SUBSYSTEM_ORDER:
                prod *= cur.value(sub) - prev.value(sub)
            if prod == 0.0:
                value = 0.0
            else:
                lam = 1.0 if prod > 0.0 else -1.0
                value = lam * math.sqrt(abs(prod))
                if sign_convention == "paper_literal":
                    value = -value
            points.append(SynergyPoint(group_id, cur.week, value))
    return SynergySeries(points, sign_convention)


@dataclass
class SdmResult:
    """Everything the pipeline produces, in dependency order."""

    standardized: StandardizedPanel
    weights: SubsystemWeights
    orders: OrderSeries
    synergy: SynergySeries


def run_pipeline(
    panel: MetricPanel,
    scope: str = "global",
    sign_convention: str = "prose",
    bridge_gaps: bool = False,
) -> SdmResult:
    """Standardize, weight, and reduce a metric panel to order and synergy series.

    A panel with a single observation carries no dispersion signal, so the
    weighting step falls back to uniform weights with a warning instead of
    refusing outright.
    """
    std = standardize(panel, scope=scope)
    try:
        weights = critic_weights(std)
    except InsufficientObservations:
        weights = uniform_weights()
        weights.warnings.append(
            "fewer than 2 observations: dispersion-conflict weights unavailable, using uniform weights"
        )
    orders = order_parameters(std, weights)
    synergy = synergy_degrees(orders, sign_convention=sign_convention, bridge_gaps=bridge_gaps)
    return SdmResult(std, weights, orders, synergy)


# --- file outputs ---

def write_order_params_csv(path: str | Path, orders: OrderSeries) -> None:
    lines = ["group_id,week,u_O,u_W,u_S,u_C"]
    for p in orders.points:
        lines.append(f"{p.group_id},{p.week},{p.u_O:.6f},{p.u_W:.6f},{p.u_S:.6f},{p.u_C:.6f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_synergy_csv(path: str | Path, synergy: SynergySeries) -> None:
    lines = ["group_id,week,synergy,sign_convention"]
    for p in synergy.points:
        lines.append(f"{p.group_id},{p.week},{p.value:.6f},{synergy.sign_convention}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_weights_json(path: str | Path, result: SdmResult) -> None:
    std = result.standardized
    if std.scope == "global":
        bounds = {c: list(std.bounds[c]) for c in TASK_CODES}
    else:
        bounds = {g: {c: list(b[c]) for c in TASK_CODES} for g, b in std.bounds.items()}
    payload = {
        "weights": {s: result.weights.weights[s] for s in SUBSYSTEM_ORDER},
        "bounds": bounds,
        "scope": std.scope,
        "warnings": std.warnings + result.weights.warnings,
    }
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")
