import csv
import json
import math

import pytest

from cavityflow.cli import main


def run_cli(args, capsys=None):
    try:
        code = main(args)
    except SystemExit as exc:  # argparse errors
        code = exc.code
    return code


class TestCheck:
    def test_case1_passes(self, capsys):
        assert run_cli(["check", "--preset", "case1"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["all_pass"] is True
        assert [c["name"] for c in payload["conditions"]] == list("ABCDEFGHIJ")
        assert all(c["passed"] for c in payload["conditions"])

    def test_case4_passes(self, capsys):
        assert run_cli(["check", "--preset", "case4"]) == 0

    def test_lambda_one_fails_with_exit_2(self, capsys):
        code = run_cli(["check", "-n", "3", "--gamma", "1.6667",
                        "--lambda", "1", "--kappa", "0"])
        assert code == 2
        payload = json.loads(capsys.readouterr().out)
        assert payload["all_pass"] is False
        by_name = {c["name"]: c for c in payload["conditions"]}
        assert by_name["A"]["passed"] is False

    def test_missing_parameters_exit_1(self, capsys):
        assert run_cli(["check", "-n", "3", "--gamma", "1.4"]) == 1

    def test_both_preset_and_explicit_exit_1(self, capsys):
        code = run_cli(["check", "--preset", "case1", "-n", "3", "--gamma", "1.4",
                        "--lambda", "1.2", "--kappa", "0.0"])
        assert code == 1

    def test_bad_number_exit_1(self, capsys):
        code = run_cli(["check", "-n", "3", "--gamma", "abc",
                        "--lambda", "1.2", "--kappa", "0"])
        assert code == 1

    def test_unknown_subcommand_exit_1(self, capsys):
        assert run_cli(["frobnicate"]) == 1

    def test_csv_format(self, capsys, tmp_path):
        out = tmp_path / "conds.csv"
        assert run_cli(["check", "--preset", "case1", "--format", "csv",
                        "--out", str(out)]) == 0
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["condition", "passed", "margin"]
        assert len(rows) == 11

    def test_fraction_gamma_accepted(self, capsys):
        code = run_cli(["check", "-n", "3", "--gamma", "5/3",
                        "--lambda", "1.25", "--kappa", "-0.01"])
        assert code == 0

    def test_sweep_around_case1(self, capsys):
        assert run_cli(["check", "--preset", "case1", "--sweep", "0.005"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["all_pass"] is True
        assert len(payload["grid"]) == 9


class TestPoints:
    def test_case1_table(self, capsys):
        assert run_cli(["points", "--preset", "case1"]) == 0
        payload = json.loads(capsys.readouterr().out)
        rows = {r["id"]: r for r in payload["critical_points"]}
        assert rows["P6"]["class"] == "node"
        assert rows["P4"]["V"] == -0.625
        assert rows["P2"]["class"] == "degenerate"
        assert rows["P1"]["class"] == "star"

    def test_csv_table(self, capsys, tmp_path):
        out = tmp_path / "points.csv"
        assert run_cli(["points", "--preset", "case1", "--format", "csv",
                        "--out", str(out)]) == 0
        rows = list(csv.reader(out.open()))
        assert rows[0][0] == "id"
        assert len(rows) == 7


class TestSolve:
    def test_case1_outputs(self, capsys, tmp_path):
        base = tmp_path / "gamma"
        assert run_cli(["solve", "--preset", "case1", "--out", str(base)]) == 0
        summary = json.loads((tmp_path / "gamma.json").read_text())
        assert summary["x0"] == -1.0
        assert -1.0 < summary["x6"] < 0.0
        assert summary["omega"] < 0.0
        assert math.isfinite(summary["nu"])
        with (tmp_path / "gamma.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["x", "V", "C", "W", "Z", "D", "G", "F", "segment"]
        assert rows[1][-1] == "P2toP6"
        assert rows[-1][-1] == "P6toP1"
        x_vals = [float(r[0]) for r in rows[1:]]
        assert all(a < b for a, b in zip(x_vals, x_vals[1:]))

    @pytest.mark.parametrize("preset", ["case2", "case3"])
    def test_other_presets_succeed(self, preset, capsys, tmp_path):
        base = tmp_path / "gamma"
        assert run_cli(["solve", "--preset", preset, "--out", str(base)]) == 0

    def test_conditions_fail_exit_2(self, capsys, tmp_path):
        code = run_cli(["solve", "-n", "3", "--gamma", "5/3", "--lambda", "2",
                        "--kappa", "-0.01", "--out", str(tmp_path / "g")])
        assert code == 2

    def test_force_then_trajectory_fail_exit_3(self, capsys, tmp_path):
        code = run_cli(["solve", "-n", "3", "--gamma", "5/3", "--lambda", "2",
                        "--kappa", "-0.01", "--force", "--out", str(tmp_path / "g")])
        assert code == 3

    def test_determinism(self, capsys, tmp_path):
        base1, base2 = tmp_path / "a", tmp_path / "b"
        assert run_cli(["solve", "--preset", "case1", "--out", str(base1)]) == 0
        assert run_cli(["solve", "--preset", "case1", "--out", str(base2)]) == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


class TestPortrait:
    def test_case1_bundle(self, capsys, tmp_path):
        out = tmp_path / "bundle.json"
        assert run_cli(["portrait", "--preset", "case1", "--out", str(out)]) == 0
        bundle = json.loads(out.read_text())
        assert set(bundle["nullclines"]) == {"F", "G_left", "G_right"}
        assert bundle["asymptote_V_star"] == pytest.approx(-0.102)
        assert "gamma" in bundle
        ids = {cp["id"] for cp in bundle["critical_points"]}
        assert ids == {"P1", "P2", "P3", "P4", "P6", "P8"}

    def test_direction_field_rightward_above_G(self, capsys, tmp_path):
        import numpy as np
        from cavityflow import Params, nullcline_G
        out = tmp_path / "bundle.json"
        assert run_cli(["portrait", "--preset", "case1", "--grid-n", "40",
                        "--out", str(out)]) == 0
        bundle = json.loads(out.read_text())
        df = bundle["direction_field"]
        V = np.array(df["V"], dtype=float)
        C = np.array(df["C"], dtype=float)
        dV = np.array(df["dV"], dtype=float)
        p = Params.from_preset("case1")
        v_minus = -0.84746064235528606
        mask = (V > -0.99) & (V < v_minus - 0.02)
        above = np.zeros_like(V, dtype=bool)
        above[mask] = C[mask] > nullcline_G(V[mask], p) + 1e-9
        vals = dV[above]
        vals = vals[np.isfinite(vals)]
        assert len(vals) > 10 and np.all(vals > 0.0)


class TestReconstruct:
    def test_case1_full_pipeline(self, capsys, tmp_path):
        base = tmp_path / "flow"
        assert run_cli(["reconstruct", "--preset", "case1", "--out", str(base)]) == 0
        header = json.loads((tmp_path / "flow.json").read_text())
        assert header["all_ok"] is True
        b = header["checks"]["boundary"]
        assert abs(b["p_exponent_fit"] / 3.3222222222222222 - 1.0) < 0.02
        assert header["checks"]["interface_kinematics"]["ok"] is True
        assert header["checks"]["adiabatic_constancy"]["ok"] is True
        with (tmp_path / "flow.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "r", "rho", "u", "c", "p"]
        assert len(rows) > 100

    def test_case6_full_pipeline(self, capsys, tmp_path):
        base = tmp_path / "flow6"
        assert run_cli(["reconstruct", "--preset", "case6", "--out", str(base)]) == 0
        header = json.loads((tmp_path / "flow6.json").read_text())
        assert header["all_ok"] is True
