import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from fractm import __version__
from fractm.cli import build_config, main, make_fixture, parse_fixture_name, parse_real
from fractm.errors import ConfigError
from fractm.function_space import Grid


def read_csv(path):
    lines = [ln for ln in open(path).read().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def run(tmp_path, *args, name="out.csv"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


class TestParsing:
    def test_parse_real(self):
        assert parse_real("0.5pi") == pytest.approx(math.pi / 2)
        assert parse_real("pi") == math.pi
        assert parse_real("0.3*pi") == pytest.approx(0.3 * math.pi)
        assert parse_real("1e-3") == 1e-3
        with pytest.raises(ConfigError):
            parse_real("abc")

    def test_fixture_names(self):
        g = Grid(20.0, 4096)
        for name in ("gaussian:1", "hat", "bump:2:0.5", "indicator", "two_bump:3", "zero", "mixture:7", "moser:0.05"):
            f = make_fixture(name, g)
            assert f.grid == g
        with pytest.raises(ConfigError):
            parse_fixture_name("wave:1")
        with pytest.raises(ConfigError):
            parse_fixture_name("gaussian:1:2")
        with pytest.raises(ConfigError):
            parse_fixture_name("moser:2")

    def test_precedence(self, tmp_path):
        cfg = build_config("norms", {"grid_n": 2048, "grid_L": 10}, {"grid_n": 1024})
        assert cfg.grid_n == 1024 and cfg.grid_L == 10.0
        cfg = build_config("norms", {}, {})
        assert cfg.grid_n == 4096 and cfg.grid_L == 20.0

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            build_config("norms", {"grid_size": 3}, {})


class TestNorms:
    def test_rows(self, tmp_path):
        code, out = run(tmp_path, "norms", "--fixtures", "gaussian:1,zero,hat:1")
        assert code == 0
        rows = read_csv(out)
        assert [r["fixture"] for r in rows] == ["gaussian:1", "zero", "hat:1"]
        assert float(rows[0]["relative_gap"]) <= 1e-2
        for key in ("l2", "seminorm_fourier", "seminorm_gagliardo", "h12", "relative_gap"):
            assert float(rows[1][key]) == 0.0
        assert all(r["L"] == "20.0" and r["n"] == "4096" and r["version"] == __version__ for r in rows)

    def test_header_echoes_config(self, tmp_path):
        _, out = run(tmp_path, "norms", "--fixtures", "zero")
        first = out.read_text().splitlines()[0]
        assert first.startswith("# fractm") and '"grid_n": 4096' in first

    def test_manifest(self, tmp_path):
        _, out = run(tmp_path, "norms", "--fixtures", "zero")
        man = json.loads((tmp_path / "out.csv.manifest.json").read_text())
        assert man["version"] == __version__ and man["command"] == "norms"
        assert len(man["config_hash"]) == 64 and man["wall_time_s"] >= 0

    @pytest.mark.parametrize("args", [["--grid-n", "7"], ["--alpha", "-1"], ["--fixtures", "nope"], ["--eps", "2"]])
    def test_malformed_config(self, tmp_path, args):
        code, out = run(tmp_path, "norms", *args)
        assert code == 2
        assert not out.exists()

    def test_bad_config_file(self, tmp_path):
        bad = tmp_path / "c.json"
        bad.write_text("{not json")
        code, out = run(tmp_path, "norms", "--config", str(bad))
        assert code == 2 and not out.exists()

    def test_config_file_and_override(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"grid_n": 2048, "fixtures": ["gaussian:1"], "format": "json"}))
        code, out = run(tmp_path, "norms", "--config", str(cfg), "--grid-n", "1024", name="o.json")
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["config"]["grid_n"] == 1024
        assert doc["rows"][0]["n"] == 1024

    def test_flagged_row_exit_3(self, tmp_path):
        code, out = run(tmp_path, "norms", "--grid-n", "1024", "--fixtures", "gaussian:1,moser:0.001")
        assert code == 3
        rows = read_csv(out)
        assert rows[0]["status"] == "ok"
        assert rows[1]["status"] == "error:ResolutionError"

    def test_stdout(self, capsys):
        assert main(["norms", "--fixtures", "zero"]) == 0
        assert "zero,0.0" in capsys.readouterr().out


class TestMoserCommands:
    def test_scan_trend(self, tmp_path):
        code, out = run(tmp_path, "moser-scan", "--eps", "1e-2,1e-3,1e-4")
        assert code == 0
        rows = read_csv(out)
        gaps = [abs(float(r["seminorm"]) - math.pi) for r in rows]
        assert gaps[0] > gaps[1] > gaps[2]
        assert list(rows[0]) [:6] == ["epsilon", "T", "l2_exact", "l2_numeric", "seminorm", "ratio_at_alpha"]

    def test_asymptotic_bracket(self, tmp_path):
        code, out = run(tmp_path, "moser-scan", "--asymptotic")
        assert code == 0
        scaled = [float(r["scaled"]) for r in read_csv(out)]
        assert len(scaled) == 3 and max(scaled) / min(scaled) <= 4

    def test_empty_eps(self, tmp_path):
        code, out = run(tmp_path, "moser-scan", "--eps", "")
        assert code == 0
        assert read_csv(out) == []

    def test_blowup_summary(self, tmp_path):
        code, out = run(tmp_path, "blowup", "--format", "json", name="b.json")
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["summary"]["slope_vs_T"] > 0
        ratios = [r["ratio_at_alpha"] for r in doc["rows"]]
        assert ratios == sorted(ratios)

    def test_blowup_overflow_flagged(self, tmp_path):
        code, out = run(tmp_path, "moser-scan", "--alpha", "1000", "--eps", "0.1")
        assert code == 3
        assert read_csv(out)[0]["status"] == "overflow"


class TestOptimizerCommands:
    def test_maximize(self, tmp_path):
        code, out = run(tmp_path, "maximize", "--grid-n", "2048", "--alpha", "0.5pi")
        assert code == 0
        row = read_csv(out)[0]
        assert float(row["margin"]) > 0 and row["status"] == "converged"
        data = np.load(str(out) + ".maximizers.npz")
        assert data["alpha_0"].shape == (2048,)

    def test_relation(self, tmp_path):
        code, out = run(tmp_path, "relation", "--grid-n", "4096", "--alpha", "0.5pi,0.6pi")
        assert code == 0
        for row in read_csv(out):
            assert float(row["identity_residual"]) <= 1e-2
            assert float(row["B_pi_lb"]) > 0

    def test_relation_rejects_critical(self, tmp_path):
        code, out = run(tmp_path, "relation", "--alpha", "pi")
        assert code == 2 and not out.exists()

    def test_orbit(self, tmp_path):
        code, out = run(tmp_path, "orbit", "--fixtures", "gaussian:1,two_bump:3:1.5")
        assert code == 0
        rows = read_csv(out)
        assert len(rows) == 6
        assert all(float(r["gap"]) <= 1e-4 for r in rows)

    def test_gn(self, tmp_path):
        code, out = run(tmp_path, "gn", "--q", "2,40")
        rows = read_csv(out)
        assert float(rows[1]["ratio"]) == pytest.approx(0.1525, abs=1e-3)
        assert float(rows[1]["beta0"]) == pytest.approx(0.24197, abs=1e-5)

    def test_gn_on_maximizer(self, tmp_path):
        code, out = run(tmp_path, "gn", "--grid-n", "2048", "--fixtures", "maximizer:0.5pi", "--q", "4")
        assert code == 0 and read_csv(out)[0]["status"] == "ok"


def test_deterministic_tables(tmp_path):
    args = ["norms", "--fixtures", "gaussian:1,mixture:3"]
    _, a = run(tmp_path, *args, name="a.csv")
    _, b = run(tmp_path, *args, name="b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "fractm", "gn", "--q", "2"], capture_output=True, text=True)
    assert res.returncode == 0 and "0.7071" in res.stdout
