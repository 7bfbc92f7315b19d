import hashlib
import subprocess
import sys

import pytest

from acoustic_redundancy import io
from acoustic_redundancy.cli import EXIT_FAILED, EXIT_OK, EXIT_UNRELIABLE, EXIT_USAGE, main

SMALL_BANDS = "125,250,500,1000"


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def small_profile(tmp_path, faults, name="p.prof"):
    lines = [f"bands={SMALL_BANDS}", "duration_s=4", "band_db=140"] + [f"fault={f}" for f in faults]
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return path


def small_config(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(f"bands={SMALL_BANDS}\n")
    return path


@pytest.fixture(scope="module")
def scenario_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("scen4")
    assert main(["simulate", "--scenario", "4", "--seed", "0", "--out", str(out)]) == EXIT_OK
    return out


class TestSimulate:
    def test_deterministic(self, tmp_path):
        for name in ("a", "b"):
            assert main(["simulate", "--scenario", "1", "--seed", "7", "--out", str(tmp_path / name)]) == EXIT_OK
        for f in ("input.csv", "faults.csv", "expected_timeline.csv"):
            assert digest(tmp_path / "a" / f) == digest(tmp_path / "b" / f)

    def test_unknown_scenario(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as info:
            main(["simulate", "--scenario", "9", "--out", str(tmp_path)])
        assert info.value.code == EXIT_USAGE
        assert "1..5" in capsys.readouterr().err

    def test_scenario_five_written_timeline(self, tmp_path):
        # full-rate run of the built-in scenario, checked through its written files
        assert main(["simulate", "--scenario", "5", "--out", str(tmp_path)]) == EXIT_OK
        rows = io.read_table(tmp_path / "expected_timeline.csv")
        first = {}
        for r in rows:
            if r["status"] != "Good":
                first.setdefault((r["channel"], r["status"]), float(r["start_s"]))
        assert first == {("2", "BadLow"): 1.0, ("6", "BadLow"): 3.5}

    def test_profile_channel_count(self, tmp_path):
        profile = small_profile(tmp_path, [])
        out = tmp_path / "o"
        assert main(["simulate", "--profile", str(profile), "--out", str(out), "--sample-rate", "4096", "--channels", "4"]) == EXIT_OK
        rec = io.read_csv(out / "input.csv")
        assert rec.n_channels == 4 and rec.sample_rate == 4096


class TestAnalyze:
    def test_clean_input(self, tmp_path):
        out = tmp_path / "o"
        main(["simulate", "--profile", str(small_profile(tmp_path, [])), "--out", str(out), "--sample-rate", "4096"])
        code = main(["analyze", "--input", str(out / "input.csv"), "--config", str(small_config(tmp_path)), "--out", str(tmp_path / "r")])
        assert code == EXIT_OK
        rows = io.read_table(tmp_path / "r" / "report.csv")
        assert {r["status"] for r in rows} == {"Good"}
        assert (tmp_path / "r" / "input.png").exists() and (tmp_path / "r" / "output.png").exists()

    def test_scenario_four(self, scenario_dir, capsys):
        out = scenario_dir / "analysis"
        assert main(["analyze", "--input", str(scenario_dir / "input.csv"), "--out", str(out), "--no-plots"]) == EXIT_OK
        text = capsys.readouterr().out
        assert "ch2 BadHigh from 2.5 s" in text and "ch5 BadLow from 4 s" in text
        rows = io.read_table(out / "report.csv")
        for r in rows:
            t = float(r["start_s"])
            want = {"2": "BadHigh" if t >= 2.5 else "Good", "5": "BadLow" if t >= 4.0 else "Good"}.get(r["channel"], "Good")
            assert r["status"] == want, r
            assert (float(r["masked_overall_db"]) == 0.0) == (want != "Good")

    def test_three_faults_unreliable(self, tmp_path, capsys):
        faults = ["1,0.25,1,4", "3,0.25,1,4", "5,2.0,1,4"]
        out = tmp_path / "o"
        main(["simulate", "--profile", str(small_profile(tmp_path, faults)), "--out", str(out), "--sample-rate", "4096"])
        code = main(["analyze", "--input", str(out / "input.csv"), "--config", str(small_config(tmp_path)), "--out", str(tmp_path / "r"), "--no-plots"])
        assert code == EXIT_UNRELIABLE
        assert "unreliable" in capsys.readouterr().out
        side = io.read_table(tmp_path / "r" / "report_consensus.csv")
        assert [r["unreliable"] for r in side][:2] == ["0", "0"]
        assert all(r["unreliable"] == "1" for r in side[2:])

    def test_two_channel_file_rejected(self, tmp_path, capsys):
        path = tmp_path / "two.csv"
        path.write_text("time_s,ch1,ch2\n0,0,0\n0.5,0,0\n")
        assert main(["analyze", "--input", str(path), "--out", str(tmp_path / "r")]) == EXIT_USAGE
        assert "3 channels" in capsys.readouterr().err

    def test_parse_error_exit(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("time_s,ch1,ch2,ch3\n0,0,0,0\n0.5,0,NaN,0\n")
        assert main(["analyze", "--input", str(path), "--out", str(tmp_path / "r")]) == EXIT_USAGE
        assert "3" in capsys.readouterr().err

    def test_bad_config(self, tmp_path, scenario_dir):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("max_faulty=3\n")
        code = main(["analyze", "--input", str(scenario_dir / "input.csv"), "--config", str(cfg), "--out", str(tmp_path / "r")])
        assert code == EXIT_USAGE

    def test_missing_file(self, tmp_path):
        assert main(["analyze", "--input", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "r")]) == EXIT_USAGE


class TestVerify:
    def test_defaults_pass(self, tmp_path, capsys):
        assert main(["verify-scenarios", "--out", str(tmp_path)]) == EXIT_OK
        text = capsys.readouterr().out
        assert text.count(": PASS") == 5 and "5/5 PASS" in text
        for i in range(1, 6):
            assert (tmp_path / f"scenario{i}_report.csv").exists()
            assert (tmp_path / f"scenario{i}_output.png").exists()
        summary = io.read_table(tmp_path / "verify_summary.csv")
        assert [r["result"] for r in summary] == ["PASS"] * 5

    def test_plots_are_reproducible(self, tmp_path):
        for name in ("a", "b"):
            main(["verify-scenarios", "--mode", "bands", "--out", str(tmp_path / name)])
        for f in ("scenario4_input.png", "scenario4_output.png", "scenario4_report.csv"):
            assert digest(tmp_path / "a" / f) == digest(tmp_path / "b" / f)

    def test_huge_threshold_fails(self, capsys):
        assert main(["verify-scenarios", "--mode", "bands", "--threshold-db", "100"]) == EXIT_FAILED
        assert "FAIL" in capsys.readouterr().out

    def test_tiny_threshold_fails(self, capsys):
        assert main(["verify-scenarios", "--mode", "bands", "--threshold-db", "0.1"]) == EXIT_FAILED
        assert "FAIL" in capsys.readouterr().out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "acoustic_redundancy", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for verb in ("simulate", "analyze", "verify-scenarios"):
        assert verb in proc.stdout
