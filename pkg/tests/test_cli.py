import json
import os

import pytest

from secrecy_lab import cli
from secrecy_lab.acceptance import CheckResult
from secrecy_lab.channel import SystemConfig
from secrecy_lab.sop import sop


def _write_config(path, **overrides):
    doc = {
        "base": {"K": 2, "N": 2, "M_D": 2, "M_E": 2, "lambda_E_dB": 5.0,
                 "zeta": 1.0, "R_th": 1.0, "scheme": "SS", "knowledge": "KA"},
        "axis_values": [0, 10, 20],
        "variants": [{}, {"scheme": "OS"}],
        "outputs": ["sop_exact", "esr_exact"],
        "trials": 10000,
        "seed": 1,
    }
    doc.update(overrides)
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def _rows(csv_path):
    header, *lines = csv_path.read_text(encoding="utf-8").splitlines()
    cols = header.split(",")
    return [dict(zip(cols, line.split(","))) for line in lines]


class TestRun:
    def test_round_trip_reproduces_values_exactly(self, tmp_path):
        config = _write_config(tmp_path / "sweep.json")
        out = tmp_path / "out.csv"
        assert cli.main(["run", "--config", str(config), "--out", str(out)]) == 0
        rows = _rows(out)
        assert len(rows) == 6  # 2 variants x 3 axis points
        probe = rows[4]  # OS variant, 10 dB
        cfg = SystemConfig(K=2, N=2, M_D=2, M_E=2, lambda_D=10.0,
                           lambda_E=10.0 ** 0.5, zeta=1.0, R_th=1.0,
                           scheme="OS", knowledge="KA")
        assert float(probe["sop_exact"]) == sop(cfg).value
        assert probe["variant_id"] == "v1"
        assert float(probe["lambda_D_dB"]) == 10.0

    def test_byte_deterministic_across_runs_and_threads(self, tmp_path):
        config = _write_config(tmp_path / "sweep.json",
                               outputs=["sop_exact", "mc"])
        a, b, c = (tmp_path / name for name in ("a.csv", "b.csv", "c.csv"))
        cli.main(["run", "--config", str(config), "--out", str(a)])
        cli.main(["run", "--config", str(config), "--out", str(b)])
        cli.main(["run", "--config", str(config), "--out", str(c),
                  "--threads", "4"])
        assert a.read_bytes() == b.read_bytes() == c.read_bytes()

    def test_empty_variants_sweeps_the_base(self, tmp_path):
        config = _write_config(tmp_path / "sweep.json", variants=[])
        out = tmp_path / "out.csv"
        assert cli.main(["run", "--config", str(config), "--out", str(out)]) == 0
        rows = _rows(out)
        assert len(rows) == 3
        assert {r["variant_id"] for r in rows} == {"v0"}

    def test_strict_passes_on_consistent_outputs(self, tmp_path):
        config = _write_config(tmp_path / "sweep.json",
                               outputs=["sop_exact", "quad"],
                               axis_values=[10])
        out = tmp_path / "out.csv"
        code = cli.main(["run", "--config", str(config), "--out", str(out),
                         "--strict"])
        assert code == 0

    def test_svg_emission(self, tmp_path):
        config = _write_config(tmp_path / "sweep.json")
        out = tmp_path / "out.csv"
        svg_dir = tmp_path / "plots"
        cli.main(["run", "--config", str(config), "--out", str(out),
                  "--svg", str(svg_dir)])
        files = sorted(os.listdir(svg_dir))
        assert files == ["v0.svg", "v1.svg"]
        body = (svg_dir / "v0.svg").read_text(encoding="utf-8")
        assert "<svg" in body and "polyline" in body


class TestValidation:
    def test_corrupt_zeta_names_the_field(self, tmp_path, capsys):
        config = _write_config(tmp_path / "bad.json")
        doc = json.loads(config.read_text())
        doc["base"]["zeta"] = 1.4
        config.write_text(json.dumps(doc))
        assert cli.main(["run", "--config", str(config),
                         "--out", str(tmp_path / "x.csv")]) == 2
        assert "zeta" in capsys.readouterr().err

    def test_unknown_output_rejected(self, tmp_path, capsys):
        config = _write_config(tmp_path / "bad.json", outputs=["sop_exact", "esr"])
        assert cli.main(["run", "--config", str(config),
                         "--out", str(tmp_path / "x.csv")]) == 2
        assert "outputs" in capsys.readouterr().err

    def test_axis_must_increase(self, tmp_path, capsys):
        config = _write_config(tmp_path / "bad.json", axis_values=[10, 10])
        assert cli.main(["run", "--config", str(config),
                         "--out", str(tmp_path / "x.csv")]) == 2
        assert "axis_values" in capsys.readouterr().err

    def test_unknown_variant_override_rejected(self, tmp_path, capsys):
        config = _write_config(tmp_path / "bad.json",
                               variants=[{"lambda_E_dB": 3.0}])
        assert cli.main(["run", "--config", str(config),
                         "--out", str(tmp_path / "x.csv")]) == 2
        assert "variants[0]" in capsys.readouterr().err

    def test_low_trial_count_with_mc_rejected(self, tmp_path, capsys):
        config = _write_config(tmp_path / "bad.json", outputs=["mc"], trials=100)
        assert cli.main(["run", "--config", str(config),
                         "--out", str(tmp_path / "x.csv")]) == 2
        assert "trials" in capsys.readouterr().err


class TestSeedPrecedence:
    def test_env_overrides_config_and_flag_overrides_env(self, tmp_path,
                                                         monkeypatch):
        config = _write_config(tmp_path / "sweep.json", outputs=["mc"],
                               axis_values=[10], variants=[])
        base, env, flag = (tmp_path / n for n in ("base.csv", "env.csv",
                                                  "flag.csv"))
        monkeypatch.delenv("SECRECY_LAB_SEED", raising=False)
        cli.main(["run", "--config", str(config), "--out", str(base)])
        monkeypatch.setenv("SECRECY_LAB_SEED", "777")
        cli.main(["run", "--config", str(config), "--out", str(env)])
        cli.main(["run", "--config", str(config), "--out", str(flag),
                  "--seed", "1"])
        assert env.read_bytes() != base.read_bytes()
        assert flag.read_bytes() == base.read_bytes()

    def test_bad_env_seed_is_a_config_error(self, tmp_path, monkeypatch,
                                            capsys):
        config = _write_config(tmp_path / "sweep.json")
        monkeypatch.setenv("SECRECY_LAB_SEED", "not-a-number")
        assert cli.main(["run", "--config", str(config),
                         "--out", str(tmp_path / "x.csv")]) == 2
        assert "SECRECY_LAB_SEED" in capsys.readouterr().err


class TestCompare:
    def test_report_and_summary(self, tmp_path, capsys):
        config = _write_config(tmp_path / "cmp.json", axis_values=[10, 20],
                               variants=[], trials=50000)
        assert cli.main(["compare", "--config", str(config)]) == 0
        output = capsys.readouterr().out
        lines = [l for l in output.splitlines() if l]
        summary_line = [l for l in lines if l.startswith("SUMMARY ")][-1]
        summary = json.loads(summary_line[len("SUMMARY "):])
        assert summary["passed"] is True
        assert summary["rows"] == 2
        assert summary["max_sop_quad_delta"] <= 1e-6
        # zeta=1 sweep: decay slope reported next to the design order
        diversity = [l for l in lines if l.startswith("diversity ")]
        assert len(diversity) == 1
        assert "K*M_D = 4" in diversity[0]


class TestSelftestWiring:
    def test_reports_each_check_and_reflects_failures(self, capsys,
                                                      monkeypatch):
        fake = [CheckResult("alpha", True, "fine"),
                CheckResult("beta", False, "broken")]
        import secrecy_lab.acceptance as acceptance
        monkeypatch.setattr(acceptance, "run_all", lambda quick: fake)
        assert cli.main(["selftest", "--quick"]) == 1
        out = capsys.readouterr().out
        assert "[PASS] alpha" in out
        assert "[FAIL] beta" in out
        assert "1/2 checks passed" in out

    def test_run_selftest_alias(self, capsys, monkeypatch):
        fake = [CheckResult("alpha", True, "fine")]
        import secrecy_lab.acceptance as acceptance
        monkeypatch.setattr(acceptance, "run_all", lambda quick: fake)
        assert cli.main(["run", "--selftest"]) == 0
        assert "[PASS] alpha" in capsys.readouterr().out
