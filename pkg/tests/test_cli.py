import csv
import json

import numpy as np
import pytest

from cps_synergy.cli import main
from cps_synergy.corpus import TASK_CODES, Code, GroupProfile, Utterance, write_utterances_csv
from cps_synergy.demo import write_demo_corpus


@pytest.fixture()
def demo_paths(tmp_path):
    return write_demo_corpus(tmp_path / "corpus")


def write_groups_csv(path, profiles):
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group_id", "problem_type", "composition", "homogeneity", "quality", "n_members"])
        for p in profiles:
            writer.writerow([p.group_id, p.problem_type, p.composition, p.homogeneity, p.quality, p.n_members])


def run(*argv):
    return main(list(argv))


class TestIngest:
    def test_clean_corpus_exit_zero(self, demo_paths, tmp_path):
        upath, gpath = demo_paths
        out = tmp_path / "out"
        assert run("ingest", "--utterances", str(upath), "--groups", str(gpath), "--out-dir", str(out)) == 0
        report = json.loads((out / "validation_report.json").read_text())
        assert report["warnings"] == []
        assert report["n_groups"] == 2

    def test_orphan_group_exit_two(self, demo_paths, tmp_path):
        upath, gpath = demo_paths
        # drop one profile so its utterances become orphans
        lines = gpath.read_text().strip().splitlines()
        gpath.write_text("\n".join(lines[:-1]) + "\n")
        out = tmp_path / "out"
        assert run("ingest", "--utterances", str(upath), "--groups", str(gpath), "--out-dir", str(out)) == 2
        report = json.loads((out / "validation_report.json").read_text())
        assert any("D2" in w for w in report["warnings"])

    def test_missing_file_exit_one(self, tmp_path):
        assert run("ingest", "--utterances", str(tmp_path / "nope.csv"), "--groups", str(tmp_path / "also_nope.csv")) == 1


def coder_config_toml(tmp_path, **coder_overrides):
    coder = {"transport": "mock", "mock_response": "W1", "model_name": "mock", "cache_dir": str(tmp_path / "cache")}
    coder.update(coder_overrides)
    lines = ["[coder]"]
    for key, value in coder.items():
        if isinstance(value, str):
            lines.append(f'{key} = "{value}"')
        else:
            lines.append(f"{key} = {value}")
    path = tmp_path / "config.toml"
    path.write_text("\n".join(lines) + "\n")
    return path


class TestCode:
    def test_mock_transport_codes_everything(self, demo_paths, tmp_path):
        upath, gpath = demo_paths
        out = tmp_path / "out"
        config = coder_config_toml(tmp_path)
        assert run("code", "--config", str(config), "--utterances", str(upath),
                   "--groups", str(gpath), "--out-dir", str(out)) == 0
        rows = list(csv.DictReader((out / "utterances_coded.csv").open()))
        assert all(r["code_pred"] == "W1" for r in rows)
        report = json.loads((out / "coding_report.json").read_text())
        assert report["failed"] == 0

    def test_partial_failures_exit_two(self, demo_paths, tmp_path):
        upath, gpath = demo_paths
        out = tmp_path / "out"
        config = coder_config_toml(tmp_path, mock_unparseable_period=10)
        assert run("code", "--config", str(config), "--utterances", str(upath),
                   "--groups", str(gpath), "--out-dir", str(out)) == 2
        report = json.loads((out / "coding_report.json").read_text())
        assert report["failed"] == report["total"] // 10
        assert len(report["failures"]) == report["failed"]

    def test_warm_cache_rerun_all_hits(self, demo_paths, tmp_path):
        upath, gpath = demo_paths
        out = tmp_path / "out"
        config = coder_config_toml(tmp_path)
        run("code", "--config", str(config), "--utterances", str(upath), "--groups", str(gpath), "--out-dir", str(out))
        assert run("code", "--config", str(config), "--utterances", str(upath),
                   "--groups", str(gpath), "--out-dir", str(out)) == 0
        report = json.loads((out / "coding_report.json").read_text())
        assert report["cache_hits"] == report["total"]
        assert report["transport_calls"] == 0

    def test_http_without_credentials_exit_one(self, demo_paths, tmp_path, monkeypatch):
        monkeypatch.delenv("CODER_API_KEY", raising=False)
        upath, gpath = demo_paths
        config = tmp_path / "config.toml"
        config.write_text('[coder]\ntransport = "http"\nendpoint_url = "https://example.invalid/v1"\n')
        assert run("code", "--config", str(config), "--utterances", str(upath),
                   "--groups", str(gpath), "--out-dir", str(tmp_path / "out")) == 1


class TestAnalyze:
    def test_outputs_match_fixture_shape(self, demo_paths, tmp_path):
        upath, gpath = demo_paths
        out = tmp_path / "out"
        assert run("analyze", "--utterances", str(upath), "--groups", str(gpath), "--out-dir", str(out)) == 0
        rows = list(csv.DictReader((out / "order_params.csv").open()))
        assert len(rows) == 10
        assert set(rows[0]) == {"group_id", "week", "u_O", "u_W", "u_S", "u_C"}
        assert all(len(r["u_O"].split(".")[1]) == 6 for r in rows)
        weights = json.loads((out / "weights.json").read_text())
        assert set(weights["weights"]) == {"O", "W", "S", "C"}
        assert weights["scope"] == "global"

    def test_single_group_single_week_has_header_only_synergy(self, tmp_path):
        utts = [
            Utterance(f"u{i}", "G1", 2, i, "sp", "t", Code(c), None)
            for i, c in enumerate(["O1", "W1", "W2", "S1", "C1"])
        ]
        upath, gpath = tmp_path / "u.csv", tmp_path / "g.csv"
        write_utterances_csv(upath, utts)
        write_groups_csv(gpath, [GroupProfile("G1", "SS", "x", "Homo", "Good", 3)])
        out = tmp_path / "out"
        assert run("analyze", "--utterances", str(upath), "--groups", str(gpath), "--out-dir", str(out)) == 0
        assert (out / "synergy.csv").read_text() == "group_id,week,synergy,sign_convention\n"

    def test_rerun_is_byte_identical(self, demo_paths, tmp_path):
        upath, gpath = demo_paths
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        run("analyze", "--utterances", str(upath), "--groups", str(gpath), "--out-dir", str(out1))
        run("analyze", "--utterances", str(upath), "--groups", str(gpath), "--out-dir", str(out2))
        for name in ("order_params.csv", "synergy.csv", "weights.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_sign_flag_negates_synergy(self, demo_paths, tmp_path):
        upath, gpath = demo_paths
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        run("analyze", "--utterances", str(upath), "--groups", str(gpath), "--out-dir", str(out1))
        run("analyze", "--utterances", str(upath), "--groups", str(gpath), "--out-dir", str(out2), "--sign", "paper-literal")
        prose = list(csv.DictReader((out1 / "synergy.csv").open()))
        literal = list(csv.DictReader((out2 / "synergy.csv").open()))
        for a, b in zip(prose, literal):
            assert float(a["synergy"]) == pytest.approx(-float(b["synergy"]), abs=1e-9)


def biased_corpus(tmp_path, bias=True, seed=42):
    """8 groups x 5 weeks; predictions systematically recode W2 as S1."""
    rng = np.random.default_rng(seed)
    groups = [f"B{i}" for i in range(1, 9)]
    profiles = [
        GroupProfile(g, "SS" if i % 2 else "MS", "All Students", "Homo", "Good", 4)
        for i, g in enumerate(groups)
    ]
    utts = []
    for g in groups:
        seq = 0
        for week in range(5):
            counts = {c: int(rng.integers(1, 5)) for c in TASK_CODES}
            counts["W2"] = 9 if rng.random() < 0.25 else 1  # heavy-tailed content linking
            for code, k in counts.items():
                for _ in range(k):
                    human = Code(code)
                    pred = Code.S1 if bias and code == "W2" else human
                    utts.append(Utterance(f"{g}-{seq}", g, week, seq, "sp", "t", human, pred))
                    seq += 1
    upath, gpath = tmp_path / "u.csv", tmp_path / "g.csv"
    write_utterances_csv(upath, utts)
    write_groups_csv(gpath, profiles)
    return upath, gpath


class TestValidate:
    def test_copied_column_gives_p_one_everywhere(self, tmp_path):
        upath, gpath = biased_corpus(tmp_path, bias=False)
        out = tmp_path / "out"
        assert run("validate", "--utterances", str(upath), "--groups", str(gpath),
                   "--out-dir", str(out), "--seed", "3") == 0
        entries = json.loads((out / "stats_report.json").read_text())
        assert [e["metric"] for e in entries] == ["u_O", "u_W", "u_S", "u_C", "synergy"]
        assert all(e["p_value"] == 1.0 for e in entries)

    def test_injected_s_bias_detected(self, tmp_path):
        upath, gpath = biased_corpus(tmp_path, bias=True)
        out = tmp_path / "out"
        assert run("validate", "--utterances", str(upath), "--groups", str(gpath),
                   "--out-dir", str(out), "--seed", "3") == 0
        entries = {e["metric"]: e for e in json.loads((out / "stats_report.json").read_text())}
        assert entries["u_S"]["n"] == [40]
        assert entries["u_S"]["p_value"] < 0.05
        assert entries["u_O"]["p_value"] == 1.0  # untouched subsystem

    def test_seed_makes_report_bytes_reproducible(self, tmp_path):
        upath, gpath = biased_corpus(tmp_path)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        run("validate", "--utterances", str(upath), "--groups", str(gpath), "--out-dir", str(out1), "--seed", "3")
        run("validate", "--utterances", str(upath), "--groups", str(gpath), "--out-dir", str(out2), "--seed", "3")
        assert (out1 / "stats_report.json").read_bytes() == (out2 / "stats_report.json").read_bytes()

    def test_seed_required(self, tmp_path):
        upath, gpath = biased_corpus(tmp_path)
        assert run("validate", "--utterances", str(upath), "--groups", str(gpath),
                   "--out-dir", str(tmp_path / "out")) == 1


def planted_compare_corpus(tmp_path, gap=True, seed=5):
    """SS groups out-create MS groups, with heavy-tailed creation counts."""
    rng = np.random.default_rng(seed)
    profiles, utts = [], []
    for i in range(1, 7):
        g = f"P{i}"
        is_ss = i <= 3
        profiles.append(GroupProfile(g, "SS" if is_ss else "MS", "x", "Homo", "Good", 4))
        seq = 0
        for week in range(5):
            counts = {c: int(rng.integers(1, 4)) for c in TASK_CODES}
            if gap:
                counts["C1"] = (20 if rng.random() < 0.2 else int(rng.integers(4, 7))) if is_ss else int(rng.integers(0, 2))
            for code, k in counts.items():
                for _ in range(k):
                    utts.append(Utterance(f"{g}-{seq}", g, week, seq, "sp", "t", Code(code), None))
                    seq += 1
    upath, gpath = tmp_path / "u.csv", tmp_path / "g.csv"
    write_utterances_csv(upath, utts)
    write_groups_csv(gpath, profiles)
    return upath, gpath


class TestCompare:
    def test_planted_creation_gap_flagged_nonparametrically(self, tmp_path):
        upath, gpath = planted_compare_corpus(tmp_path)
        out = tmp_path / "out"
        rc = run("compare", "--utterances", str(upath), "--groups", str(gpath),
                 "--out-dir", str(out), "--factor", "problem_type", "--outcomes", "u_C")
        assert rc in (0, 2)
        (entry,) = json.loads((out / "stats_report.json").read_text())
        assert entry["chosen_test"] == "kruskal_wallis"
        assert entry["omnibus"]["p_value"] < 0.05
        (pair,) = entry["post_hoc"]
        assert {pair["level_a"], pair["level_b"]} == {"SS", "MS"}
        assert pair["method"] == "mann_whitney_u"
        assert pair["p_value"] < 0.05
        assert pair["mean_diff"] != 0

    def test_null_data_has_empty_post_hoc(self, tmp_path):
        upath, gpath = planted_compare_corpus(tmp_path, gap=False)
        out = tmp_path / "out"
        rc = run("compare", "--utterances", str(upath), "--groups", str(gpath),
                 "--out-dir", str(out), "--factor", "problem_type")
        assert rc in (0, 2)
        entries = json.loads((out / "stats_report.json").read_text())
        assert len(entries) == 5
        for entry in entries:
            assert "omnibus" in entry
            if entry["omnibus"]["p_value"] >= 0.05:
                assert entry["post_hoc"] == []
            assert set(entry["descriptives"]) == {"SS", "MS"}
            for level_stats in entry["descriptives"].values():
                assert {"n", "mean", "sd"} <= set(level_stats)


class TestDemoCommand:
    def test_end_to_end(self, tmp_path):
        out = tmp_path / "demo_out"
        assert run("demo", "--out-dir", str(out), "--iterations", "2000") == 0
        for name in (
            "validation_report.json",
            "utterances_coded.csv",
            "coding_report.json",
            "order_params.csv",
            "synergy.csv",
            "weights.json",
            "stats_report.json",
        ):
            assert (out / name).exists()
        assert (out / "compare_problem_type" / "stats_report.json").exists()
        assert (out / "compare_quality" / "stats_report.json").exists()


class TestConfigPrecedence:
    def test_flags_beat_config_file(self, demo_paths, tmp_path):
        upath, gpath = demo_paths
        config = tmp_path / "config.toml"
        config.write_text(f'utterances = "{upath}"\ngroups = "{gpath}"\nsign_convention = "prose"\n')
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert run("analyze", "--config", str(config), "--out-dir", str(out1)) == 0
        assert run("analyze", "--config", str(config), "--out-dir", str(out2), "--sign", "paper-literal") == 0
        prose = list(csv.DictReader((out1 / "synergy.csv").open()))
        literal = list(csv.DictReader((out2 / "synergy.csv").open()))
        assert prose[0]["sign_convention"] == "prose"
        assert literal[0]["sign_convention"] == "paper_literal"
        assert float(prose[0]["synergy"]) == pytest.approx(-float(literal[0]["synergy"]), abs=1e-9)
