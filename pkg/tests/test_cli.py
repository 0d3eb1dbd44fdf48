import json

import numpy as np
import pytest

from nlcorr import DiscreteLaw, nested_sums_joint
from nlcorr import cli
from nlcorr.report import canonical_json

REPORT_KEYS = {"version", "subcommand", "inputs_digest", "seed", "results", "tolerances"}


def run_json(capsys, argv):
    code = cli.run(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


class TestReports:
    def test_schema_and_determinism(self, capsys):
        argv = ["nested", "--m", "1,2,3"]
        code, report = run_json(capsys, argv)
        assert code == 0
        assert set(report) == REPORT_KEYS
        assert report["subcommand"] == "nested"
        assert report["seed"] == cli.DEFAULT_SEED

        code2 = cli.run(argv)
        out2 = capsys.readouterr().out
        assert code2 == 0
        assert out2 == canonical_json(report) + "\n"  # byte-identical rerun

    def test_canonical_float_formatting(self):
        text = canonical_json({"x": 1.0 / 3.0, "n": 3, "b": True, "s": "a\"b"})
        assert "0.33333333333333331" in text
        assert '"s":"a\\"b"' in text

    def test_out_file_written(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        code, report = run_json(capsys, ["nested", "--m", "1,2", "--out", str(out)])
        assert code == 0
        assert json.loads(out.read_text()) == report


class TestSubcommands:
    def test_nested(self, capsys):
        code, report = run_json(capsys, ["nested", "--m", "1,2,3"])
        assert code == 0
        res = report["results"]
        assert res["lambda_max"] == pytest.approx(2.4051495785028638, abs=1e-9)
        assert res["R"][0][1] == pytest.approx(2 ** -0.5, abs=1e-12)

    def test_eig_csv(self, capsys, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1.0,0.8\n0.8,1.0\n")
        code, report = run_json(capsys, ["eig", "--input", str(path)])
        assert code == 0
        assert report["results"]["lambda_min"] == pytest.approx(0.2, abs=1e-12)
        assert report["results"]["lambda_max"] == pytest.approx(1.8, abs=1e-12)

    def test_schur_check(self, capsys, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("1.0,0.8\n0.8,1.0\n")
        code, report = run_json(
            capsys, ["schur-check", "--input", str(path), "--power", "3"]
        )
        assert code == 0
        assert report["results"]["holds"] is True

    def test_hermite(self, capsys):
        code, report = run_json(
            capsys, ["hermite", "--fn", "cube", "--order", "6", "--nodes", "32"]
        )
        assert code == 0
        coeffs = report["results"]["coeffs"]
        assert coeffs[0] == pytest.approx(3.0, abs=1e-10)
        assert coeffs[2] == pytest.approx(6 ** 0.5, abs=1e-10)

    def test_oracle_on_nested_joint(self, capsys, tmp_path):
        joint = nested_sums_joint([1, 2], DiscreteLaw.rademacher())
        path = tmp_path / "joint.json"
        path.write_text(json.dumps(joint.to_json_dict()))
        code, report = run_json(capsys, ["oracle", "--joint", str(path)])
        assert code == 0
        assert report["results"]["rho_max"] == pytest.approx(1.7071067811865475, abs=1e-9)

    def test_oracle_offdiagonal_weights(self, capsys, tmp_path):
        joint = nested_sums_joint([1, 2], DiscreteLaw.rademacher())
        path = tmp_path / "joint.json"
        path.write_text(json.dumps(joint.to_json_dict()))
        code, report = run_json(
            capsys, ["oracle", "--joint", str(path), "--weights", "offdiag"]
        )
        assert code == 0
        assert report["results"]["rho_max"] == pytest.approx(2 ** -0.5, abs=1e-9)
        assert report["results"]["rho_min"] == pytest.approx(-(2 ** -0.5), abs=1e-9)

    def test_ace(self, capsys, tmp_path, rng):
        data = rng.standard_normal((400, 2))
        path = tmp_path / "samples.csv"
        header = "x1,x2\n"
        path.write_text(header + "\n".join(f"{a},{b}" for a, b in data))
        code, report = run_json(
            capsys, ["ace", "--input", str(path), "--bins", "6", "--seed", "3"]
        )
        assert code == 0
        assert report["results"]["converged"] is True

    def test_groups(self, capsys, tmp_path):
        path = tmp_path / "groups.json"
        path.write_text(json.dumps({"groups": [[1, 2], [2, 3], [3, 4]]}))
        code, report = run_json(capsys, ["groups", "--input", str(path)])
        assert code == 0
        res = report["results"]
        assert res["extremes"]["rho_max"] == pytest.approx(1 + 2 ** -0.5, abs=1e-9)
        assert res["shadow_system"]["status"] in ("feasible", "infeasible", "unknown")

    def test_hoeffding(self, capsys, tmp_path):
        f0 = np.outer([-1.0, 1.0], [-1.0, 1.0]).ravel().tolist()
        path = tmp_path / "h.json"
        path.write_text(json.dumps({"law": "rademacher", "m": 2, "f0": f0}))
        code, report = run_json(capsys, ["hoeffding", "--input", str(path)])
        assert code == 0
        res = report["results"]
        assert res["variance_components"] == pytest.approx([0.0, 1.0], abs=1e-12)
        assert res["reconstruction_error"] <= 1e-12

    def test_sinlimit_cauchy(self, capsys):
        code, report = run_json(
            capsys, ["sinlimit", "--law", "cauchy", "--m", "1,2,3", "--t", "0.001"]
        )
        assert code == 0
        assert report["results"]["method"] == "analytic"
        assert report["results"]["max_abs_gap"] <= 1e-3

    def test_sinlimit_tabulated_law_file(self, capsys, tmp_path):
        path = tmp_path / "law.json"
        path.write_text(json.dumps({"values": [0.0, 1.0], "probs": [0.7, 0.3]}))
        code, report = run_json(
            capsys, ["sinlimit", "--law", str(path), "--m", "1,3", "--t", "0.001"]
        )
        assert code == 0
        assert report["results"]["max_abs_gap"] <= 1e-3

    def test_sinlimit_curve(self, capsys, tmp_path):
        curve = tmp_path / "c.csv"
        code, _ = run_json(
            capsys,
            ["sinlimit", "--law", "rademacher", "--m", "1,2", "--t", "0.01",
             "--curve", str(curve)],
        )
        assert code == 0
        lines = curve.read_text().strip().splitlines()
        assert lines[0] == "t,max_abs_gap" and len(lines) == 21

    def test_stationary_ar1(self, capsys, tmp_path):
        curve = tmp_path / "density.csv"
        code, report = run_json(
            capsys,
            ["stationary", "--name", "ar1", "--beta", "0.5", "--curve", str(curve),
             "--crosscheck", "200"],
        )
        assert code == 0
        ext = report["results"]["extremes"]
        assert ext["sup"] == pytest.approx(3.0, abs=1e-12)
        assert ext["inf"] == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert report["results"]["crosscheck"]["gap"] <= 0.05
        assert curve.read_text().startswith("omega,density")

    def test_stationary_named_kernels_via_json(self, capsys, tmp_path):
        ar1 = tmp_path / "ar1.json"
        ar1.write_text(json.dumps({"name": "ar1", "domain": "lattice",
                                   "params": {"beta": 0.25}}))
        code, report = run_json(capsys, ["stationary", "--input", str(ar1)])
        assert code == 0
        assert report["results"]["extremes"]["sup"] == pytest.approx(5.0 / 3.0, abs=1e-12)
        ou = tmp_path / "ou.json"
        ou.write_text(json.dumps({"name": "ou", "domain": "line"}))
        code, report = run_json(capsys, ["stationary", "--input", str(ou)])
        assert code == 0
        assert report["results"]["extremes"]["sup"] == pytest.approx(2.0, abs=1e-12)

    def test_hermite_piecewise_table_function(self, capsys, tmp_path):
        table = tmp_path / "ramp.csv"
        table.write_text("-12.0,-12.0\n12.0,12.0\n")  # identity over the node range
        code, report = run_json(
            capsys,
            ["hermite", "--fn", f"table:{table}", "--order", "4", "--nodes", "24"],
        )
        assert code == 0
        coeffs = report["results"]["coeffs"]
        assert coeffs[0] == pytest.approx(1.0, abs=1e-10)

    def test_stationary_table_json(self, capsys, tmp_path):
        path = tmp_path / "k.json"
        vals = (0.5 ** np.arange(60)).tolist()
        path.write_text(json.dumps(
            {"domain": "lattice", "name": "table", "table": {"values": vals},
             "decay": {"C": 1.0, "r": 0.5}}
        ))
        code, report = run_json(capsys, ["stationary", "--input", str(path)])
        assert code == 0
        assert report["results"]["extremes"]["sup"] == pytest.approx(3.0, abs=1e-4)

    def test_kernel(self, capsys, tmp_path):
        curve = tmp_path / "nystrom.csv"
        code, report = run_json(
            capsys, ["kernel", "--n", "50,100,200", "--curve", str(curve)]
        )
        assert code == 0
        res = report["results"]
        assert res["within_cap"] is True
        assert res["lambda_max"][0] > res["lambda_max"][1] > res["lambda_max"][2]
        assert curve.exists()

    def test_copula_check(self, capsys, tmp_path):
        sigma = (np.full((3, 3), 0.5) + 0.5 * np.eye(3)).tolist()
        path = tmp_path / "design.json"
        path.write_text(json.dumps(
            {"sigma_z": sigma, "transforms": ["identity"] * 3, "n": 20_000, "seed": 4}
        ))
        code, report = run_json(
            capsys,
            ["copula-check", "--input", str(path), "--basis-size", "8",
             "--active", "0", "--ndirs", "60"],
        )
        assert code == 0
        res = report["results"]
        assert res["kappa0"] == pytest.approx(0.5, abs=1e-12)
        assert res["clears_kappa0_at_3se"] is True

    def test_sandwich(self, capsys, tmp_path):
        sigma = (np.full((3, 3), 0.5) + 0.5 * np.eye(3)).tolist()
        path = tmp_path / "sw.json"
        path.write_text(json.dumps(
            {"sigma_z": sigma, "transforms": ["identity"] * 3,
             "f": ["zero"] * 3, "f_hat": ["hermite2"] * 3, "n_mc": 50_000, "seed": 6}
        ))
        code, report = run_json(capsys, ["sandwich", "--input", str(path)])
        assert code == 0
        assert report["results"]["verdict"] == "holds"


class TestThreads:
    def test_env_var_fallback(self, monkeypatch):
        ns = cli.build_parser().parse_args(["nested", "--m", "1,2"])
        monkeypatch.setenv("NLCORR_THREADS", "3")
        assert cli._threads(ns) == 3
        monkeypatch.delenv("NLCORR_THREADS")
        assert cli._threads(ns) == 1

    def test_flag_wins_over_env(self, monkeypatch):
        ns = cli.build_parser().parse_args(["nested", "--m", "1,2", "--threads", "2"])
        monkeypatch.setenv("NLCORR_THREADS", "7")
        assert cli._threads(ns) == 2


class TestErrorPaths:
    def test_unknown_subcommand_usage_error(self, capsys):
        assert cli.run(["frobnicate"]) == 2

    def test_missing_input_domain_error(self, capsys, tmp_path):
        code, payload = run_json(capsys, ["eig", "--input", str(tmp_path / "no.csv")])
        assert code == 1
        assert payload["error"]["type"] == "ValidationError"

    def test_malformed_joint_domain_error(self, capsys, tmp_path):
        path = tmp_path / "joint.json"
        path.write_text('{"supports": [[0, 1]], "atoms": []}')
        code, payload = run_json(capsys, ["oracle", "--joint", str(path)])
        assert code == 1
        assert "error" in payload

    def test_bad_m_list(self, capsys):
        code, payload = run_json(capsys, ["nested", "--m", "1,two"])
        assert code == 1
        assert payload["error"]["type"] == "ValidationError"

    def test_missing_json_key_reported_as_domain_error(self, capsys, tmp_path):
        path = tmp_path / "design.json"
        path.write_text('{"transforms": ["identity"], "n": 10}')
        code, payload = run_json(capsys, ["copula-check", "--input", str(path)])
        assert code == 1
        assert "sigma_z" in payload["error"]["message"]
