"""Freeze Shapiro-Wilk reference values for ten fixture samples.

Uses scipy.stats.shapiro as the independent reference and writes
tests/fixtures/shapiro_fixtures.json. Run once; tests compare the library's
own W (and p) against the frozen numbers.

    python tests/oracles/make_shapiro_fixtures.py
"""

import json
from pathlib import Path

import numpy as np
from scipy.stats import shapiro

SPECS = [
    ("normal_n5", "normal", 5, 11),
    ("normal_n8", "normal", 8, 23),
    ("normal_n20", "normal", 20, 37),
    ("normal_n100", "normal", 100, 41),
    ("uniform_n10", "uniform", 10, 53),
    ("uniform_n30", "uniform", 30, 59),
    ("exponential_n12", "exponential", 12, 67),
    ("exponential_n50", "exponential", 50, 71),
    ("lognormal_n15", "lognormal", 15, 83),
    ("bimodal_n25", "bimodal", 25, 97),
]


def draw(kind, n, seed):
    rng = np.random.default_rng(seed)
    if kind == "normal":
        return rng.normal(10.0, 2.0, n)
    if kind == "uniform":
        return rng.uniform(-1.0, 1.0, n)
    if kind == "exponential":
        return rng.exponential(3.0, n)
    if kind == "lognormal":
        return rng.lognormal(0.0, 0.8, n)
    if kind == "bimodal":
        half = n // 2
        return np.concatenate([rng.normal(-3.0, 0.5, half), rng.normal(3.0, 0.5, n - half)])
    raise ValueError(kind)


def main():
    fixtures = []
    for name, kind, n, seed in SPECS:
        sample = np.round(draw(kind, n, seed), 6)
        res = shapiro(sample)
        fixtures.append(
            {
                "name": name,
                "sample": sample.tolist(),
                "w": float(res.statistic),
                "p": float(res.pvalue),
            }
        )
        print(f"{name:18s} n={n:4d} W={res.statistic:.6f} p={res.pvalue:.6g}")

    out = Path(__file__).resolve().parents[1] / "fixtures" / "shapiro_fixtures.json"
    out.write_text(json.dumps(fixtures, indent=2))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
