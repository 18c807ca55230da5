import json
import subprocess
import sys

import numpy as np
import pytest

from qhom.cli import main, parse_bc
from qhom.model import DirichletNatural, NeumannAt1, TwoDirichlet


def read_csv(path):
    lines = path.read_text().strip().splitlines()
    data = [ln for ln in lines if not ln.startswith("#")]
    trailer = [ln for ln in lines if ln.startswith("#")]
    header = data[0].split(",")
    rows = [ln.split(",") for ln in data[1:]]
    return header, rows, trailer


class TestParseBc:
    def test_variants(self):
        assert isinstance(parse_bc("dn", 1), DirichletNatural)
        bc = parse_bc("dn:1.5", 1)
        assert np.allclose(bc.flux_datum, [1.5])
        bc = parse_bc("neumann:1,2", 2)
        assert isinstance(bc, NeumannAt1)
        assert np.allclose(bc.slope_datum, [1.0, 2.0])
        assert isinstance(parse_bc("dd", 1), TwoDirichlet)

    def test_homogeneous_default(self):
        bc = parse_bc("dn", 2)
        assert np.allclose(bc.flux_datum, [0.0, 0.0])


class TestSolve:
    def test_homogenized_solution_csv(self, tmp_path):
        out = tmp_path / "sol.csv"
        code = main(["solve", "linear-sin", "homogenized", "dn",
                     "--N", "512", "--out", str(out)])
        assert code == 0
        header, rows, _ = read_csv(out)
        assert header == ["x", "u_1", "v_1"]
        assert len(rows) == 513
        xs = np.array([float(r[0]) for r in rows])
        us = np.array([float(r[1]) for r in rows])
        assert np.abs(us - xs * (xs - 2.0)).max() <= 1e-6
        meta = json.loads((tmp_path / "sol.csv.meta.json").read_text())
        assert meta["converged"] is True
        assert (tmp_path / "sol.png").exists()

    def test_oscillatory_solve_converges(self, tmp_path):
        out = tmp_path / "eps.csv"
        code = main(["solve", "linear-sin", "0.1", "dn", "--N", "160",
                     "--out", str(out), "--no-plot"])
        assert code == 0
        assert out.exists()
        assert not (tmp_path / "eps.png").exists()

    def test_unresolved_oscillation_is_usage_error(self, tmp_path):
        code = main(["solve", "linear-sin", "0.5", "dn", "--N", "8",
                     "--out", str(tmp_path / "x.csv")])
        assert code == 3

    def test_unknown_problem(self, tmp_path):
        assert main(["solve", "nope", "0.1", "dn", "--out", str(tmp_path / "x.csv")]) == 3

    def test_bad_bc_string(self, tmp_path):
        assert main(["solve", "linear-sin", "0.1", "zz", "--out", str(tmp_path / "x.csv")]) == 3

    def test_two_dirichlet_writes_w_to_sidecar(self, tmp_path):
        out = tmp_path / "dd.csv"
        code = main(["solve", "linear-sin", "homogenized", "dd",
                     "--N", "128", "--out", str(out), "--no-plot"])
        assert code == 0
        meta = json.loads((tmp_path / "dd.csv.meta.json").read_text())
        assert meta["w"][0] == pytest.approx(0.5, abs=1e-8)


class TestSweep:
    def run(self, tmp_path, name="sw.csv", extra=()):
        out = tmp_path / name
        code = main(["sweep", "linear-sin", "dn", "0.0625", "0.03125", "0.015625",
                     "--out", str(out), *extra])
        return code, out

    def test_sweep_csv_schema_and_fit(self, tmp_path):
        code, out = self.run(tmp_path)
        assert code == 0
        header, rows, trailer = read_csv(out)
        assert header == ["eps", "err_inf", "err_boundary", "iterations", "N", "converged"]
        assert len(rows) == 3
        for r in rows:
            assert r[5] == "true"
            assert float(r[1]) >= float(r[2])  # err_inf >= err_boundary
        assert any(ln.startswith("# rate_fit p=") for ln in trailer)
        ratio_lines = [ln for ln in trailer if ln.startswith("# boundary_ratio")]
        assert len(ratio_lines) == 3
        p = float(trailer[0].split("p=")[1].split()[0])
        assert 0.9 <= p <= 1.1
        assert (tmp_path / "sw.png").exists()
        meta = json.loads((tmp_path / "sw.csv.meta.json").read_text())
        assert meta["converged_rows"] == 3

    def test_deterministic_bytes(self, tmp_path):
        _, out1 = self.run(tmp_path, "a.csv", ("--no-plot",))
        _, out2 = self.run(tmp_path, "b.csv", ("--no-plot",))
        assert out1.read_bytes() == out2.read_bytes()

    def test_rejects_nondecreasing_eps(self, tmp_path):
        code = main(["sweep", "linear-sin", "dn", "0.03125", "0.0625",
                     "--out", str(tmp_path / "x.csv")])
        assert code == 3

    def test_neumann_sweep_runs(self, tmp_path):
        out = tmp_path / "nm.csv"
        code = main(["sweep", "linear-sin", "neumann:1", "0.2", "0.1", "0.05",
                     "--out", str(out), "--no-plot"])
        assert code == 0
        assert out.exists()


class TestCheck:
    def test_linear_sin_nondegenerate(self, capsys):
        assert main(["check", "linear-sin", "dn"]) == 0
        assert "sigma_min" in capsys.readouterr().out

    def test_quasilinear_nondegenerate(self):
        assert main(["check", "quasilinear-demo", "dn"]) == 0

    def test_degenerate_fixture(self, capsys):
        assert main(["check", "degenerate-fixture", "dd"]) == 1
        assert "nondegenerate: no" in capsys.readouterr().out


def test_console_script_entry_point(tmp_path):
    out = tmp_path / "cli.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "qhom.cli", "solve", "linear-sin", "homogenized",
         "dn", "--N", "64", "--out", str(out), "--no-plot"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
