import csv
import json

import numpy as np
import pytest
import scipy.io

from heisenlab.cli import RunConfig, load_config, main, reference_config


def run_cli(args):
    return main(args)


class TestConfig:
    def test_reference_config_resolves(self):
        cfg = RunConfig.from_dict(reference_config())
        assert cfg.n == 1
        assert cfg.counts == [48, 48, 48]
        assert cfg.k == 200
        assert cfg.shell_fraction == 0.1
        grid = cfg.validate()
        assert grid.size == 48 ** 3

    def test_defaults_materialized(self):
        doc = RunConfig().to_dict()
        assert doc["solver"]["tol"] == 1e-8
        assert doc["filter"]["mass_threshold"] == 1e-4
        assert doc["fit"]["skip"] == 10
        assert "kernel_backend" in doc

    def test_round_trip(self, tmp_path):
        cfg = RunConfig(n=1, counts=[10, 10, 10], k=5, out_dir=str(tmp_path))
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.to_dict()))
        back = load_config(str(path))
        assert back.counts == [10, 10, 10]
        assert back.k == 5

    def test_validation_rejects_bad_grid(self):
        cfg = RunConfig(counts=[2, 2, 2])
        with pytest.raises(ValueError):
            cfg.validate()

    def test_validation_rejects_bad_k(self):
        cfg = RunConfig(counts=[4, 4, 4], k=100)
        with pytest.raises(ValueError):
            cfg.validate()


class TestAlgebraCheckCommand:
    def test_passes(self, capsys):
        assert run_cli(["algebra-check", "--n", "1"]) == 0
        report = json.loads(capsys.readouterr().out)
        jac = [c for c in report["checks"] if c["name"] == "jacobi_identity"]
        assert jac[0]["defect"] == 0.0

    def test_corrupt_fixture_fails(self, capsys):
        assert run_cli(["algebra-check", "--n", "1", "--corrupt"]) == 1
        out = capsys.readouterr()
        report = json.loads(out.out)
        assert "jacobi_identity" in report["failed"]

    def test_rejects_bad_n(self):
        assert run_cli(["algebra-check", "--n", "0"]) == 2


class TestRepCheckCommand:
    def test_passes(self, capsys, tmp_path):
        code = run_cli(["rep-check", "--n", "1", "--pairs", "5",
                        "--samples", "10", "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "rep_check.json").exists()

    def test_other_lambda(self, capsys):
        assert run_cli(["rep-check", "--lambda", "-2", "--pairs", "3",
                        "--samples", "5"]) == 0

    def test_zero_lambda_rejected_before_work(self):
        assert run_cli(["rep-check", "--lambda", "0"]) == 2


class TestAssembleCommand:
    def test_report_and_export(self, capsys, tmp_path):
        code = run_cli(["assemble", "--n", "1", "--grid", "8,8,8",
                        "--extent", "6,6,6", "--assembly", "both",
                        "--out", str(tmp_path), "--export-matrix"])
        assert code == 0
        doc = json.loads((tmp_path / "assemble_report.json").read_text())
        assert doc["matrices"]["sos"]["symmetry_defect"] == 0.0
        assert doc["matrices"]["sos"]["min_rayleigh_probe"] >= -1e-12
        assert doc["matrices"]["expanded"]["symmetry_defect"] == 0.0
        # exported files readable by an independent tool
        M = scipy.io.mmread(str(tmp_path / "matrix_sos.mtx"))
        assert M.shape == (512, 512)
        assert np.max(np.abs((M - M.T).toarray())) == 0.0

    def test_invalid_grid_rejected(self, tmp_path):
        code = run_cli(["assemble", "--grid", "2,2,2", "--out", str(tmp_path)])
        assert code == 2


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("solve")
    code = run_cli(["solve", "--n", "1", "--grid", "12,12,12",
                    "--extent", "6,6,6", "--num-eigs", "12",
                    "--max-subspace", "300", "--seed", "3",
                    "--out", str(out)])
    assert code == 0
    return out


class TestSolveCommand:
    def test_outputs_exist(self, run_dir):
        for name in ("eigenvalues.csv", "counting.csv", "report.json",
                     "summary.txt"):
            assert (run_dir / name).exists()

    def test_eigenvalue_csv_schema(self, run_dir):
        with open(run_dir / "eigenvalues.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 12
        assert set(rows[0]) == {"index", "value", "residual", "boundary_mass",
                                "accepted"}
        vals = [float(r["value"]) for r in rows]
        assert vals == sorted(vals)
        assert all(float(r["residual"]) <= 1e-8 * max(1, v)
                   for r, v in zip(rows, vals))

    def test_report_embeds_full_config(self, run_dir):
        doc = json.loads((run_dir / "report.json").read_text())
        assert doc["config"]["solver"]["k"] == 12
        assert doc["config"]["grid"]["counts"] == [12, 12, 12]
        assert doc["config"]["filter"]["mass_threshold"] == 1e-4
        assert doc["config"]["solver"]["max_subspace"] == 300
        assert "sos" in doc["assemblies"]

    def test_deterministic_rerun(self, run_dir, tmp_path):
        code = run_cli(["solve", "--n", "1", "--grid", "12,12,12",
                        "--extent", "6,6,6", "--num-eigs", "12",
                        "--max-subspace", "300", "--seed", "3",
                        "--out", str(tmp_path)])
        assert code == 0
        a = (run_dir / "eigenvalues.csv").read_text()
        b = (tmp_path / "eigenvalues.csv").read_text()
        assert a == b

    def test_analyze_on_previous_run(self, run_dir, capsys):
        code = run_cli(["analyze", "--run-dir", str(run_dir),
                        "--mass-threshold", "1.0", "--skip", "0"])
        # 12 values with skip 0 is still below the 20-point minimum window
        assert code == 1
        doc = json.loads(capsys.readouterr().out)
        assert "error" in doc

    def test_validation_before_work(self, tmp_path):
        code = run_cli(["solve", "--grid", "2,2,2", "--out", str(tmp_path)])
        assert code == 2
        assert not (tmp_path / "eigenvalues.csv").exists()


def test_full_run_smoke(tmp_path, capsys):
    code = run_cli(["full-run", "--n", "1", "--grid", "12,12,12",
                    "--extent", "6,6,6", "--num-eigs", "8",
                    "--max-subspace", "300", "--seed", "3",
                    "--pairs", "5", "--samples", "10",
                    "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "algebra_check.json").exists()
    assert (tmp_path / "rep_check.json").exists()
    assert (tmp_path / "report.json").exists()
    out = capsys.readouterr().out
    assert "algebra-check: pass" in out
    assert "rep-check:     pass" in out


def test_analyze_fits_synthetic(tmp_path, capsys):
    out = tmp_path / "run"
    out.mkdir()
    s = np.arange(1, 61, dtype=float)
    with open(out / "eigenvalues.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "value", "residual", "boundary_mass", "accepted"])
        for i, v in enumerate(s ** (2.0 / 9.0)):
            w.writerow([i + 1, f"{v:.15g}", "1e-12", "0", 1])
    code = run_cli(["analyze", "--run-dir", str(out), "--skip", "0"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert abs(doc["beta_count"] - 4.5) < 1e-6
    assert abs(doc["beta_count"] * doc["beta_mag"] - 1.0) < 1e-10
