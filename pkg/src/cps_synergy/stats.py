"""Statistical inference for order-parameter and synergy comparisons.

Paired sign-flip permutation tests, Shapiro-Wilk normality, Brown-Forsythe
variance homogeneity, Fisher ANOVA, Welch's t, Kruskal-Wallis and
Mann-Whitney U (exact enumeration for small tie-free samples), plus an
omnibus driver that checks assumptions, picks the parametric or
nonparametric path, and runs the matching post-hoc family.

All statistics are computed here; scipy contributes only distribution tail
functions (normal, t, F, chi-square).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.special import chdtrc, fdtrc, ndtr, ndtri, stdtr

from .errors import (
    BothZeroVariance,
    EmptyGroup,
    GroupTooSmall,
    LengthMismatch,
    SampleTooLarge,
    SampleTooSmall,
    TooFewGroups,
    TooFewPairs,
    ZeroVariance,
    ZeroWithinVariance,
)

METHODS = (
    "permutation_paired",
    "shapiro_wilk",
    "brown_forsythe",
    "fisher_anova",
    "welch_t",
    "kruskal_wallis",
    "mann_whitney_u",
)


@dataclass(frozen=True)
class TestResult:
    method: str
    statistic: float
    p_value: float
    df: Optional[object] = None  # float, (float, float), or None
    n: tuple = ()
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        df = self.df
        if isinstance(df, tuple):
            df = list(df)
        return {
            "method": self.method,
            "statistic": self.statistic,
            "df": df,
            "p_value": self.p_value,
            "n": list(self.n),
            "extras": self.extras,
            "display": {
                "statistic": f"{self.statistic:.4f}",
                "p_value": f"{self.p_value:.4f}",
            },
        }


# --- paired permutation test ---

def permutation_test_paired(
    a: Sequence[float],
    b: Sequence[float],
    iterations: int = 10000,
    *,
    seed: int,
    workers: int = 1,
    histogram_bins: int = 0,
) -> TestResult:
    """Two-sided paired test of mean(a - b) via random per-pair sign flips.

    The null distribution re-signs each pair difference independently;
    p = (#{|T_perm| >= |T_obs|} + 1) / (iterations + 1). Draws for iteration
    block i depend only on (seed, i) through a counter-advanced generator,
    so any worker count produces bit-identical results.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(len(a), len(b))
    n = len(a)
    if n < 2:
        raise TooFewPairs(f"need at least 2 pairs, got {n}")
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")

    d = a - b
    t_obs = float(d.mean())
    abs_obs = abs(t_obs)

    bound = float(np.abs(d).mean()) or 1.0  # |T| can never exceed mean |d|
    edges = np.linspace(-bound, bound, histogram_bins + 1) if histogram_bins else None

    def run_block(start: int, stop: int):
        # One uniform draw per (iteration, pair); advancing the bit
        # generator by start*n lands exactly on iteration `start`.
        bitgen = np.random.PCG64(seed)
        bitgen.advance(start * n)
        block = np.random.Generator(bitgen).random((stop - start, n))
        signs = np.where(block < 0.5, 1.0, -1.0)
        t_perm = signs @ d / n
        exceed = int(np.count_nonzero(np.abs(t_perm) >= abs_obs))
        hist = np.histogram(t_perm, bins=edges)[0] if edges is not None else None
        return exceed, hist

    chunk = -(-iterations // workers)  # ceil division
    blocks = [(i, min(i + chunk, iterations)) for i in range(0, iterations, chunk)]
    if len(blocks) == 1:
        results = [run_block(*blocks[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda se: run_block(*se), blocks))

    exceed = sum(r[0] for r in results)
    p = (exceed + 1) / (iterations + 1)
    extras = {"iterations": iterations, "seed": seed, "exceedances": exceed}
    if edges is not None:
        counts = np.sum([r[1] for r in results], axis=0)
        extras["null_histogram"] = {
            "edges": [float(e) for e in edges],
            "counts": [int(c) for c in counts],
            "observed": t_obs,
        }
    return TestResult("permutation_paired", t_obs, p, df=None, n=(n,), extras=extras)


# --- Shapiro-Wilk normality test (Royston's approximation) ---

def _sw_coefficients(n: int) -> np.ndarray:
    """Order-statistic weights a_1..a_n for the W statistic."""
    if n == 3:
        a1 = math.sqrt(0.5)
        return np.array([-a1, 0.0, a1])
    m = ndtri((np.arange(1, n + 1) - 0.375) / (n + 0.25))
    ssq = float(m @ m)
    rsn = 1.0 / math.sqrt(n)
    c = m / math.sqrt(ssq)

    def poly(coeffs, x):
        # ascending powers starting at x^1
        return sum(co * x ** (i + 1) for i, co in enumerate(coeffs))

    a = np.array(m, dtype=float)
    a_n = c[-1] + poly((0.221157, -0.147981, -2.071190, 4.434685, -2.706056), rsn)
    if n > 5:
        a_n1 = c[-2] + poly((0.042981, -0.293762, -1.752461, 5.682633, -3.582633), rsn)
        phi = (ssq - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (1 - 2 * a_n ** 2 - 2 * a_n1 ** 2)
        a[2:-2] = m[2:-2] / math.sqrt(phi)
        a[-2] = a_n1
        a[1] = -a_n1
    else:
        phi = (ssq - 2 * m[-1] ** 2) / (1 - 2 * a_n ** 2)
        a[1:-1] = m[1:-1] / math.sqrt(phi)
    a[-1] = a_n
    a[0] = -a_n
    return a


def shapiro_wilk(sample: Sequence[float]) -> TestResult:
    """Shapiro-Wilk W and its normalizing-transformation p-value.

    Valid for 3 <= n <= 5000. W is clamped into [0, 1]; a perfectly
    scores-linear sample (every n = 3 sample in particular) reaches W = 1.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    n = len(x)
    if n < 3:
        raise SampleTooSmall(f"need n >= 3, got {n}")
    if n > 5000:
        raise SampleTooLarge(f"need n <= 5000, got {n}")
    if x[0] == x[-1]:
        raise ZeroVariance("all sample values are equal")

    a = _sw_coefficients(n)
    ssq_dev = float(((x - x.mean()) ** 2).sum())
    w = float((a @ x) ** 2 / ssq_dev)
    w = min(max(w, 0.0), 1.0)

    if n == 3:
        # exact for three observations
        p = (6.0 / math.pi) * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        p = min(max(p, 0.0), 1.0)
        return TestResult("shapiro_wilk", w, p, df=None, n=(n,))

    one_minus_w = 1.0 - w
    if one_minus_w <= 0.0:
        return TestResult("shapiro_wilk", w, 1.0, df=None, n=(n,))
    if n <= 11:
        gamma = 0.459 * n - 2.273
        g = -math.log(gamma - math.log(one_minus_w))
        mu = 0.5440 - 0.39978 * n + 0.025054 * n ** 2 - 0.0006714 * n ** 3
        sigma = math.exp(1.3822 - 0.77857 * n + 0.062767 * n ** 2 - 0.0020322 * n ** 3)
    else:
        ln_n = math.log(n)
        g = math.log(one_minus_w)
        mu = -1.5861 - 0.31082 * ln_n - 0.083751 * ln_n ** 2 + 0.0038915 * ln_n ** 3
        sigma = math.exp(-0.4803 - 0.082676 * ln_n + 0.0030302 * ln_n ** 2)
    z = (g - mu) / sigma
    p = float(ndtr(-z))
    return TestResult("shapiro_wilk", w, p, df=None, n=(n,))


# --- variance homogeneity (median-centered Levene) ---

def _one_way_f(groups: list[np.ndarray]):
    k = len(groups)
    all_values = np.concatenate(groups)
    grand = all_values.mean()
    n_total = len(all_values)
    ssb = sum(len(g) * (g.mean() - grand) ** 2 for g in groups)
    ssw = sum(float(((g - g.mean()) ** 2).sum()) for g in groups)
    return float(ssb), float(ssw), k - 1, n_total - k


def levene_brown_forsythe(groups: Sequence[Sequence[float]]) -> TestResult:
    """Homogeneity of variance via one-way F on |x - group median|."""
    if len(groups) < 2:
        raise TooFewGroups(f"need >= 2 groups, got {len(groups)}")
    arrays = [np.asarray(g, dtype=float) for g in groups]
    for i, g in enumerate(arrays):
        if len(g) < 2:
            raise GroupTooSmall(f"group {i} has {len(g)} value(s), need >= 2")
    deviations = [np.abs(g - np.median(g)) for g in arrays]
    ssb, ssw, df_b, df_w = _one_way_f(deviations)
    n = tuple(len(g) for g in arrays)
    if ssw == 0.0 and ssb == 0.0:
        extras = {"warning": "all median deviations equal; no spread signal"}
        return TestResult("brown_forsythe", 0.0, 1.0, df=(df_b, df_w), n=n, extras=extras)
    if ssw == 0.0:
        extras = {"warning": "zero within-group deviation variance"}
        return TestResult("brown_forsythe", math.inf, 0.0, df=(df_b, df_w), n=n, extras=extras)
    f = (ssb / df_b) / (ssw / df_w)
    p = float(fdtrc(df_b, df_w, f))
    return TestResult("brown_forsythe", f, p, df=(df_b, df_w), n=n)


# --- one-way ANOVA ---

def anova_fisher(groups: Sequence[Sequence[float]]) -> TestResult:
    """Classic one-way F = MSB / MSW with df (k-1, N-k)."""
    if len(groups) < 2:
        raise TooFewGroups(f"need >= 2 groups, got {len(groups)}")
    arrays = [np.asarray(g, dtype=float) for g in groups]
    for i, g in enumerate(arrays):
        if len(g) < 1:
            raise EmptyGroup(f"group {i} is empty")
    ssb, ssw, df_b, df_w = _one_way_f(arrays)
    if df_w < 1:
        raise ZeroWithinVariance("no within-group degrees of freedom (N <= k)")
    if ssw == 0.0:
        raise ZeroWithinVariance("all groups are internally constant")
    f = (ssb / df_b) / (ssw / df_w)
    p = float(fdtrc(df_b, df_w, f))
    return TestResult("fisher_anova", f, p, df=(df_b, df_w), n=tuple(len(g) for g in arrays))


# --- Welch's t ---

def welch_t(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Welch's unequal-variance t with Welch-Satterthwaite df, two-sided p."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise SampleTooSmall(f"need n >= 2 per group, got {len(a)} and {len(b)}")
    va, vb = float(a.var(ddof=1)), float(b.var(ddof=1))
    if va == 0.0 and vb == 0.0:
        raise BothZeroVariance("both groups have zero variance")
    na, nb = len(a), len(b)
    se_sq = va / na + vb / nb
    t = (float(a.mean()) - float(b.mean())) / math.sqrt(se_sq)
    df = se_sq ** 2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    p = float(2.0 * stdtr(df, -abs(t)))
    return TestResult("welch_t", t, min(p, 1.0), df=df, n=(na, nb))


# --- rank helpers ---

def _midranks(pooled: np.ndarray):
    """Fractional ranks (ties averaged) and the tie-run sizes."""
    order = np.argsort(pooled, kind="stable")
    ranks = np.empty(len(pooled), dtype=float)
    tie_sizes = []
    i = 0
    sorted_vals = pooled[order]
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        ranks[order[i : j + 1]] = avg
        if j > i:
            tie_sizes.append(j - i + 1)
        i = j + 1
    return ranks, tie_sizes


# --- Kruskal-Wallis ---

def kruskal_wallis(groups: Sequence[Sequence[float]]) -> TestResult:
    """Rank-based one-way test with tie correction, chi-square reference."""
    if len(groups) < 2:
        raise TooFewGroups(f"need >= 2 groups, got {len(groups)}")
    arrays = [np.asarray(g, dtype=float) for g in groups]
    for i, g in enumerate(arrays):
        if len(g) < 1:
            raise EmptyGroup(f"group {i} is empty")
    pooled = np.concatenate(arrays)
    n_total = len(pooled)
    if n_total < 3:
        raise TooFewGroups(f"need a total of >= 3 observations, got {n_total}")
    ranks, tie_sizes = _midranks(pooled)
    k = len(arrays)
    h = 0.0
    start = 0
    for g in arrays:
        r = ranks[start : start + len(g)]
        h += len(g) * (r.mean() - (n_total + 1) / 2.0) ** 2
        start += len(g)
    h *= 12.0 / (n_total * (n_total + 1))
    correction = 1.0 - sum(t ** 3 - t for t in tie_sizes) / (n_total ** 3 - n_total)
    extras = {"tie_correction": correction}
    if correction == 0.0:
        # every pooled value identical
        return TestResult("kruskal_wallis", 0.0, 1.0, df=float(k - 1), n=tuple(len(g) for g in arrays), extras=extras)
    h /= correction
    p = float(chdtrc(k - 1, h))
    return TestResult("kruskal_wallis", h, p, df=float(k - 1), n=tuple(len(g) for g in arrays), extras=extras)


# --- Mann-Whitney U ---

@lru_cache(maxsize=None)
def _rank_sum_counts(n: int, total: int) -> tuple:
    """counts[s] = number of n-subsets of ranks 1..total with rank sum s."""
    max_sum = total * (total + 1) // 2
    counts = [[0] * (max_sum + 1) for _ in range(n + 1)]
    counts[0][0] = 1
    for rank in range(1, total + 1):
        for size in range(min(rank, n), 0, -1):
            row, prev = counts[size], counts[size - 1]
            for s in range(max_sum, rank - 1, -1):
                if prev[s - rank]:
                    row[s] += prev[s - rank]
    return tuple(counts[n])


def _exact_mw_p(u_min: float, n_a: int, n_b: int) -> float:
    """Two-sided exact p = min(1, 2 P(U <= u_min)) by rank-sum counting."""
    counts = _rank_sum_counts(n_a, n_a + n_b)
    offset = n_a * (n_a + 1) // 2  # U = rank_sum - offset
    total = math.comb(n_a + n_b, n_a)
    at_most = sum(c for s, c in enumerate(counts) if s - offset <= u_min)
    return min(1.0, 2.0 * at_most / total)


def mann_whitney_u(a: Sequence[float], b: Sequence[float], mode: str = "auto") -> TestResult:
    """Mann-Whitney U (reported as min(U_a, U_b)) with a two-sided p.

    ``exact`` enumerates the tie-free null distribution (requires both
    n <= 8 and no ties); ``normal_approx`` uses the tie-corrected normal
    approximation with continuity correction; ``auto`` picks exact whenever
    eligible.
    """
    if mode not in ("auto", "exact", "normal_approx"):
        raise ValueError(f"mode must be auto, exact, or normal_approx, got {mode!r}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) == 0 or len(b) == 0:
        raise EmptyGroup("both groups must be non-empty")
    n_a, n_b = len(a), len(b)
    pooled = np.concatenate([a, b])
    ranks, tie_sizes = _midranks(pooled)
    r_a = float(ranks[:n_a].sum())
    u_a = n_a * n_b + n_a * (n_a + 1) / 2.0 - r_a
    u_b = n_a * n_b - u_a
    u = min(u_a, u_b)
    has_ties = bool(tie_sizes)

    exact_ok = n_a <= 8 and n_b <= 8 and not has_ties
    if mode == "exact" and not exact_ok:
        raise ValueError("exact mode requires n_a, n_b <= 8 and tie-free data")
    use_exact = mode == "exact" or (mode == "auto" and exact_ok)

    extras = {"u_a": u_a, "u_b": u_b, "ties": has_ties}
    if use_exact:
        p = _exact_mw_p(u, n_a, n_b)
        extras["mode_used"] = "exact"
        return TestResult("mann_whitney_u", u, p, df=None, n=(n_a, n_b), extras=extras)

    n_total = n_a + n_b
    mu = n_a * n_b / 2.0
    tie_term = sum(t ** 3 - t for t in tie_sizes) / (n_total * (n_total - 1)) if n_total > 1 else 0.0
    var = n_a * n_b / 12.0 * ((n_total + 1) - tie_term)
    extras["mode_used"] = "normal_approx"
    if var <= 0.0:
        return TestResult("mann_whitney_u", u, 1.0, df=None, n=(n_a, n_b), extras=extras)
    diff = u - mu
    if diff < 0:
        z = (diff + 0.5) / math.sqrt(var)
    elif diff > 0:
        z = (diff - 0.5) / math.sqrt(var)
    else:
        z = 0.0
    p = min(1.0, float(2.0 * ndtr(-abs(z))))
    extras["z"] = z
    return TestResult("mann_whitney_u", u, p, df=None, n=(n_a, n_b), extras=extras)


# --- omnibus driver ---

@dataclass
class OmnibusPlan:
    outcome: str
    factor: str
    chosen_test: str  # "fisher_anova" | "kruskal_wallis"
    assumption_checks: dict
    post_hoc: str  # "welch_t" | "mann_whitney"


@dataclass(frozen=True)
class PostHocComparison:
    level_a: str
    level_b: str
    mean_diff: float
    test: TestResult


@dataclass
class OmnibusResult:
    plan: OmnibusPlan
    omnibus: TestResult
    post_hoc: list
    descriptives: dict
    warnings: list

    def to_dict(self) -> dict:
        return {
            "outcome": self.plan.outcome,
            "factor": self.plan.factor,
            "chosen_test": self.plan.chosen_test,
            "post_hoc_family": self.plan.post_hoc,
            "assumption_checks": {
                "normality": {
                    level: (res.to_dict() if res is not None else None)
                    for level, res in self.plan.assumption_checks["normality"].items()
                },
                "homogeneity": (
                    self.plan.assumption_checks["homogeneity"].to_dict()
                    if self.plan.assumption_checks["homogeneity"] is not None
                    else None
                ),
            },
            "omnibus": self.omnibus.to_dict(),
            "descriptives": self.descriptives,
            "post_hoc": [
                {
                    "level_a": c.level_a,
                    "level_b": c.level_b,
                    "mean_diff": c.mean_diff,
                    "display_mean_diff": f"{c.mean_diff:.4f}",
                    **c.test.to_dict(),
                }
                for c in self.post_hoc
            ],
            "warnings": self.warnings,
        }


def _holm_adjust(p_values: list[float]) -> list[float]:
    """Holm step-down adjusted p-values, returned in the input order."""
    m = len(p_values)
    order = sorted(range(m), key=lambda i: p_values[i])
    adjusted = [0.0] * m
    running = 0.0
    for rank, i in enumerate(order):
        running = max(running, (m - rank) * p_values[i])
        adjusted[i] = min(1.0, running)
    return adjusted


def run_omnibus(
    rows: Sequence[dict],
    outcome: str,
    factor: str,
    alpha: float = 0.05,
    holm: bool = False,
) -> OmnibusResult:
    """Assumption-gated group comparison with matched post-hocs.

    Fisher's ANOVA runs only when every factor level passes Shapiro-Wilk
    normality and the Brown-Forsythe homogeneity check at ``alpha``;
    otherwise Kruskal-Wallis. When the omnibus p < alpha, all pairwise
    comparisons run in the matching family (Welch's t / Mann-Whitney U),
    uncorrected by default, Holm-adjusted on request.
    """
    by_level: dict = {}
    for row in rows:
        by_level.setdefault(str(row[factor]), []).append(float(row[outcome]))
    levels = sorted(by_level)
    if len(levels) < 2:
        raise TooFewGroups(f"factor {factor!r} has {len(levels)} level(s), need >= 2")

    warnings: list[str] = []
    descriptives = {}
    for level in levels:
        values = np.array(by_level[level])
        sd = float(values.std(ddof=1)) if len(values) > 1 else 0.0
        descriptives[level] = {"n": len(values), "mean": float(values.mean()), "sd": sd}

    normality: dict = {}
    all_normal = True
    for level in levels:
        values = by_level[level]
        if len(values) < 3 or min(values) == max(values):
            normality[level] = None
            all_normal = False
            warnings.append(f"normality not assessable for level {level!r}; using nonparametric path")
            continue
        res = shapiro_wilk(values)
        normality[level] = res
        if res.p_value <= alpha:
            all_normal = False

    homogeneity = None
    homogeneous = False
    if all(len(by_level[level]) >= 2 for level in levels):
        homogeneity = levene_brown_forsythe([by_level[level] for level in levels])
        homogeneous = homogeneity.p_value > alpha
    else:
        warnings.append("homogeneity not assessable (a level has n < 2); using nonparametric path")

    parametric = all_normal and homogeneous
    groups = [by_level[level] for level in levels]
    if parametric:
        chosen, post_family = "fisher_anova", "welch_t"
        omnibus = anova_fisher(groups)
    else:
        chosen, post_family = "kruskal_wallis", "mann_whitney"
        omnibus = kruskal_wallis(groups)

    plan = OmnibusPlan(
        outcome=outcome,
        factor=factor,
        chosen_test=chosen,
        assumption_checks={"normality": normality, "homogeneity": homogeneity},
        post_hoc=post_family,
    )

    comparisons: list[PostHocComparison] = []
    if omnibus.p_value < alpha:
        for i, level_a in enumerate(levels):
            for level_b in levels[i + 1 :]:
                ga, gb = by_level[level_a], by_level[level_b]
                if len(ga) < 2 or len(gb) < 2:
                    warnings.append(
                        f"post-hoc {level_a!r} vs {level_b!r} skipped: a level has a single observation"
                    )
                    continue
                mean_diff = float(np.mean(ga) - np.mean(gb))
                if post_family == "welch_t":
                    test = welch_t(ga, gb)
                else:
                    test = mann_whitney_u(ga, gb)
                comparisons.append(PostHocComparison(level_a, level_b, mean_diff, test))
        if holm and comparisons:
            adjusted = _holm_adjust([c.test.p_value for c in comparisons])
            comparisons = [
                PostHocComparison(
                    c.level_a,
                    c.level_b,
                    c.mean_diff,
                    TestResult(
                        c.test.method,
                        c.test.statistic,
                        c.test.p_value,
                        df=c.test.df,
                        n=c.test.n,
                        extras={**c.test.extras, "holm_adjusted_p": adj},
                    ),
                )
                for c, adj in zip(comparisons, adjusted)
            ]

    return OmnibusResult(plan, omnibus, comparisons, descriptives, warnings)
