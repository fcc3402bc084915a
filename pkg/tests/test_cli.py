import json
import math

import pytest

from fpforge.cli import main
from fpforge.config import ConfigError, emit_defaults, parse_config, parse_preset

VOLTERRA_CFG = """\
# linear instance
T = 1.0
n_steps = 200
dim = 1
tol = 1e-10
max_outer = 200
f = affine(c=0.5, w0=1)
g = linear(kappa=0.5)
alpha = const(c=0.5)
phi = identity
"""


class TestParseConfig:
    def test_empty_geometry_gets_defaults(self):
        cfg = parse_config("", "geometry")
        assert cfg.params["profile"] == "hilbert"
        assert cfg.params["op"] == "epsilon0"
        assert cfg.seed == 0
        assert cfg.output_dir == "out"

    def test_negative_tol_reports_line(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("T = 1\nn_steps = 10\ntol = -1\nf = zero\ng = zero\n"
                         "alpha = const(c=0)\nphi = const(c=1)", "solve-volterra")
        assert any("line 3" in m and "tol must be positive" in m for m in exc.value.messages)

    def test_all_errors_collected(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("bogus = 1\ntol = 0\nn_steps = zero", "solve-volterra")
        msgs = "\n".join(exc.value.messages)
        assert "unknown key 'bogus'" in msgs
        assert "tol must be positive" in msgs
        assert "expected an integer" in msgs
        assert "missing required key 'T'" in msgs

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("profile = hilbert\nprofile = lp:3", "geometry")
        assert any("duplicate" in m for m in exc.value.messages)

    def test_preset_parsing(self):
        assert parse_preset("affine(c=0.5, w0=1)") == ("affine", {"c": 0.5, "w0": 1.0})
        assert parse_preset("zero") == ("zero", {})
        with pytest.raises(ValueError):
            parse_preset("affine(c=fast)")

    def test_round_trip_of_defaults(self):
        # geometry has no required keys, so defaults alone round-trip
        cfg1 = parse_config("", "geometry")
        cfg2 = parse_config(emit_defaults("geometry"), "geometry")
        assert cfg1.params == cfg2.params
        assert cfg1.seed == cfg2.seed and cfg1.output_dir == cfg2.output_dir
        # subcommands with required keys round-trip once those are supplied
        cfg3 = parse_config(emit_defaults("fuzz") + "target = tube\n", "fuzz")
        assert cfg3.params["target"] == "tube"
        assert cfg3.params["trials"] == 1000

    def test_comment_only_lines_ignored(self):
        cfg = parse_config("# nothing\n\n   # more\n", "geometry")
        assert cfg.params["op"] == "epsilon0"


class TestCliRuns:
    def test_volterra_run_is_deterministic(self, tmp_path):
        cfg = tmp_path / "v.cfg"
        cfg.write_text(VOLTERRA_CFG)
        d1, d2 = tmp_path / "r1", tmp_path / "r2"
        assert main(["solve-volterra", str(cfg), "--output-dir", str(d1)]) == 0
        assert main(["solve-volterra", str(cfg), "--output-dir", str(d2)]) == 0
        for name in ("solution.csv", "report.csv", "bound.csv", "certificates.csv"):
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes()

    def test_manifest_contents(self, tmp_path):
        cfg = tmp_path / "v.cfg"
        cfg.write_text(VOLTERRA_CFG)
        out = tmp_path / "run"
        assert main(["solve-volterra", str(cfg), "--output-dir", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["subcommand"] == "solve-volterra"
        assert manifest["exit_code"] == 0
        assert "solution.csv" in manifest["outputs"]
        assert manifest["certificates"][0]["kind"] == "tube-bound"

    def test_geometry_epsilon0_csv_value(self, tmp_path):
        out = tmp_path / "geo"
        assert main(["geometry", "--op", "epsilon0", "--profile", "hilbert",
                     "--output-dir", str(out)]) == 0
        rows = (out / "geometry.csv").read_text().splitlines()
        name, value, _margin = rows[1].split(",")
        assert name == "epsilon0"
        assert float(value) == pytest.approx(math.sqrt(7.0), abs=1e-6)

    def test_exit_code_contract(self, tmp_path):
        # 0: success
        assert main(["certify", "--kind", "power", "--a", "1", "--p", "2",
                     "--output-dir", str(tmp_path / "ok")]) == 0
        # 2: config error
        bad = tmp_path / "bad.cfg"
        bad.write_text("T = -1\n")
        assert main(["solve-volterra", str(bad), "--output-dir", str(tmp_path / "c2")]) == 2
        # 3: certificate failure
        assert main(["certify", "--kind", "c6", "--c", "1", "--t", "1", "--r", "2",
                     "--f0", "0", "--output-dir", str(tmp_path / "c3")]) == 3
        # 4: no convergence
        slow = tmp_path / "slow.cfg"
        slow.write_text(VOLTERRA_CFG.replace("max_outer = 200", "max_outer = 1"))
        assert main(["solve-volterra", str(slow), "--output-dir", str(tmp_path / "c4")]) == 4
        # 5: internal error (output dir collides with a file)
        blocker = tmp_path / "blocked"
        blocker.write_text("")
        assert main(["geometry", "--op", "epsilon0", "--output-dir", str(blocker)]) == 5

    def test_certify_c6_failure_row(self, tmp_path):
        out = tmp_path / "c6"
        code = main(["certify", "--kind", "c6", "--c", "1", "--t", "1", "--r", "2",
                     "--f0", "0", "--output-dir", str(out)])
        assert code == 3
        row = (out / "certificate.csv").read_text().splitlines()[1].split(",")
        assert row[0] == "c6" and row[1] == "FAIL"
        assert float(row[3]) == pytest.approx(0.5, abs=1e-9)

    def test_certify_missing_flags_is_config_error(self, tmp_path):
        assert main(["certify", "--kind", "mu-star", "--output-dir", str(tmp_path / "m")]) == 2

    def test_env_seed_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("FPFORGE_SEED", "777")
        out = tmp_path / "envrun"
        assert main(["fuzz", "--target", "expanding", "--trials", "5",
                     "--output-dir", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 777

    def test_geometry_modulus_rows(self, tmp_path):
        out = tmp_path / "mod"
        assert main(["geometry", "--op", "modulus", "--profile", "lp:4",
                     "--eps", "0.5,1.0", "--output-dir", str(out)]) == 0
        lines = (out / "geometry.csv").read_text().splitlines()
        assert len(lines) == 3

    def test_geometry_a5_demo_passes(self, tmp_path):
        out = tmp_path / "a5"
        assert main(["geometry", "--op", "a5-demo", "--profile", "hilbert",
                     "--output-dir", str(out)]) == 0
        body = (out / "geometry.csv").read_text()
        assert "a5_margin" in body

    def test_certify_expanding(self, tmp_path):
        out = tmp_path / "expn"
        assert main(["certify", "--kind", "expanding", "--b-preset", "negate",
                     "--dim", "3", "--samples", "40", "--output-dir", str(out)]) == 0
        row = (out / "certificate.csv").read_text().splitlines()[1]
        assert row.startswith("expanding,PASS")
        out2 = tmp_path / "expf"
        assert main(["certify", "--kind", "expanding", "--b-preset", "identity",
                     "--samples", "10", "--output-dir", str(out2)]) == 3

    def test_geometry_triang_fuzz(self, tmp_path):
        out = tmp_path / "tfz"
        assert main(["geometry", "--op", "triang-fuzz", "--profile", "lp:3",
                     "--trials", "200", "--output-dir", str(out)]) == 0
        body = (out / "geometry.csv").read_text()
        assert "violations,0," in body

    def test_geometry_table_profile(self, tmp_path):
        table = tmp_path / "delta.csv"
        table.write_text("eps,delta\n0,0\n2,0.5\n")
        out = tmp_path / "tbl"
        assert main(["geometry", "--op", "epsilon0", "--profile", f"table:{table}",
                     "--output-dir", str(out)]) == 0
        value = float((out / "geometry.csv").read_text().splitlines()[1].split(",")[1])
        assert value == pytest.approx(2.0, abs=1e-6)

    def test_fuzz_targets(self, tmp_path):
        for target in ("space-triangle", "strong-triangle-fuzz", "tube"):
            out = tmp_path / f"fz-{target}"
            assert main(["fuzz", "--target", target, "--trials", "20",
                         "--output-dir", str(out)]) == 0

    def test_elliptic_run_with_auto_certificate(self, tmp_path):
        out = tmp_path / "ell"
        code = main(["elliptic", "--n", "100", "--mu", "0.001", "--p", "4",
                     "--h-preset", "sine:1e-3", "--auto-mu-star", "--R", "1.0",
                     "--output-dir", str(out)])
        assert code == 0
        lines = (out / "solution.csv").read_text().splitlines()
        assert lines[0] == "x,u"
        assert len(lines) == 103  # boundary nodes included
        cert_row = (out / "certificates.csv").read_text().splitlines()[1]
        assert cert_row.startswith("mu-star,PASS")

    def test_hammerstein_run(self, tmp_path):
        cfg = tmp_path / "h.cfg"
        cfg.write_text(
            "T = 1.0\nn_steps = 150\np = 2.0\ntol = 1e-8\n"
            "f = linear_damp(c=0.5)\nk = exp_diff(rate=1)\nPhi = tanh\n"
        )
        out = tmp_path / "ham"
        assert main(["solve-hammerstein", str(cfg), "--output-dir", str(out)]) == 0
        header = (out / "report.csv").read_text().splitlines()[0]
        assert header == "iter,residual,membership_ok,a5_margin"

    def test_hammerstein_certificate_gate_exit_code(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(
            "T = 1.0\nn_steps = 100\np = 2.0\n"
            "f = zero\nk = const(kappa=1)\nPhi = affine_shift(shift=1)\n"
        )
        out = tmp_path / "expf"
        assert main(["solve-hammerstein", str(cfg), "--output-dir", str(out)]) == 3
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["status"] == "certificate-failed"

    def test_plot_recipe(self, tmp_path):
        cfg = tmp_path / "v.cfg"
        cfg.write_text(VOLTERRA_CFG)
        out = tmp_path / "prun"
        assert main(["solve-volterra", str(cfg), "--output-dir", str(out)]) == 0
        assert main(["plot", str(out)]) == 0
        assert (out / "solution.png").exists()
        assert (out / "residuals.png").exists()

    def test_plot_missing_dir(self, tmp_path):
        assert main(["plot", str(tmp_path / "nope")]) == 2
