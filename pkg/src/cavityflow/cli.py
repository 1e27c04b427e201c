"""Command-line front end.

Subcommands
-----------
check        evaluate the admissibility conditions (A)-(J) with margins
points       table of the critical points P1..P8
solve        construct the trajectory; writes samples CSV + summary JSON
portrait     phase-portrait bundle (nullclines, sonic line, direction
             field, critical points, trajectory) for external plotting
reconstruct  physical fields + the full verification battery

Exit codes: 0 success; 1 usage/parse error; 2 condition failure;
3 trajectory failure; 4 verification failure.

Parameters come either from ``--preset case1..case6`` or explicitly via
``-n/--gamma/--lambda/--kappa`` (decimal or fraction strings, e.g. 5/3).
All floating-point output is serialized with full round-trip precision,
and identical configurations produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import reconstruct as rec
from .params import ParameterError, Params, PRESETS
from .phaseplane import (
    classified_points,
    conditions_pass,
    full_condition_report,
    fields,
    sample_nullclines,
)
from .trajectory import GammaOptions, TrajectoryError, build_gamma

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONDITIONS = 2
EXIT_TRAJECTORY = 3
EXIT_VERIFICATION = 4


class _Parser(argparse.ArgumentParser):
    """argparse with the usage-error exit code pinned to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _jsonify(obj):
    """Make an object JSON-safe: numpy scalars/arrays out, NaN/inf -> null."""
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _dump_json(data, path: Optional[str]) -> None:
    text = json.dumps(_jsonify(data), indent=2, sort_keys=True)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _write_csv(path: Optional[str], header: Sequence[str], rows) -> None:
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format(v, ".17g") if isinstance(v, float) else v
                             for v in row])
    finally:
        if path:
            fh.close()


def _add_param_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", choices=sorted(PRESETS), help="bundled parameter set")
    parser.add_argument("-n", dest="n", help="spatial dimension (2 or 3)")
    parser.add_argument("--gamma", help="adiabatic index (decimal or fraction, e.g. 5/3)")
    parser.add_argument("--lambda", dest="lam", help="similarity exponent")
    parser.add_argument("--kappa", help="density exponent")


def _add_solver_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tol-rel", type=float, default=1e-10, help="integrator relative tolerance")
    parser.add_argument("--tol-abs", type=float, default=1e-12, help="integrator absolute tolerance")
    parser.add_argument("--eps-p2", type=float, default=None, help="start offset from P2 in W")
    parser.add_argument("--eps-p6", type=float, default=1e-4, help="departure offset beyond P6")
    parser.add_argument("--delta-p6", type=float, default=1e-5, help="arrival radius at P6")
    parser.add_argument("--delta-p1", type=float, default=1e-6, help="termination radius at P1")
    parser.add_argument("--force", action="store_true",
                        help="build the trajectory even if conditions fail")


def _params_from_args(parser: _Parser, args) -> Params:
    explicit = [args.n, args.gamma, args.lam, args.kappa]
    if args.preset and any(v is not None for v in explicit):
        parser.error("give either --preset or explicit parameters, not both")
    if args.preset:
        return Params.from_preset(args.preset)
    if any(v is None for v in explicit):
        parser.error("need --preset or all of -n, --gamma, --lambda, --kappa")
    try:
        return Params.make(args.n, args.gamma, args.lam, args.kappa)
    except ParameterError as exc:
        parser.error(str(exc))


def _condition_payload(params: Params) -> Dict[str, object]:
    report = full_condition_report(params)
    return {
        "params": params.to_dict(),
        "conditions": [c.to_dict() for c in report],
        "all_pass": conditions_pass(report),
    }


def cmd_check(parser: _Parser, args) -> int:
    params = _params_from_args(parser, args)
    if args.sweep is not None:
        step = args.sweep
        grid = []
        ok = True
        for dl in (-step, 0.0, step):
            for dk in (-step, 0.0, step):
                p = Params.make(params.n, params.gamma,
                                params.lam + dl, params.kappa + dk)
                payload = _condition_payload(p)
                payload["offset"] = {"lambda": dl, "kappa": dk}
                grid.append(payload)
                ok = ok and payload["all_pass"]
        _dump_json({"base": params.to_dict(), "step": step, "grid": grid,
                    "all_pass": ok}, args.out)
        return EXIT_OK if ok else EXIT_CONDITIONS

    payload = _condition_payload(params)
    if args.format == "csv":
        rows = [(c["name"], c["passed"], float(c["margin"]) if c["margin"] is not None else "")
                for c in payload["conditions"]]
        _write_csv(args.out, ["condition", "passed", "margin"], rows)
    else:
        _dump_json(payload, args.out)
    return EXIT_OK if payload["all_pass"] else EXIT_CONDITIONS


def cmd_points(parser: _Parser, args) -> int:
    params = _params_from_args(parser, args)
    pts = classified_points(params)
    order = ["P1", "P2", "P3", "P4", "P6", "P8"]
    table = [pts[pid].to_dict() for pid in order]
    if args.format == "csv":
        cols = ["id", "present", "V", "C", "class", "wronskian", "discriminant",
                "E1", "E2", "L1", "L2"]
        rows = []
        for d in table:
            d = dict(d)
            d["class"] = d.pop("class")
            rows.append([d.get(c, "") if d.get(c) is not None else "" for c in cols])
        _write_csv(args.out, cols, rows)
    else:
        _dump_json({"params": params.to_dict(), "critical_points": table}, args.out)
    return EXIT_OK


def _gamma_options(args) -> GammaOptions:
    return GammaOptions(
        eps=args.eps_p2 if args.eps_p2 is not None else 1e-6,
        delta6=args.delta_p6, eps6=args.eps_p6, delta1=args.delta_p1,
        rtol=args.tol_rel, atol=args.tol_abs,
        check_conditions=not args.force,
    )


def _build_or_exit(parser: _Parser, params: Params, args) -> tuple:
    report = full_condition_report(params)
    if not conditions_pass(report) and not args.force:
        failed = [c.name for c in report if c.passed is not True]
        sys.stderr.write(f"conditions failed: {', '.join(failed)} (use --force to override)\n")
        return None, EXIT_CONDITIONS
    try:
        gamma = build_gamma(params, _gamma_options(args))
    except TrajectoryError as exc:
        sys.stderr.write(f"trajectory construction failed: {exc}\n")
        return None, EXIT_TRAJECTORY
    return gamma, EXIT_OK


def _gamma_rows(gamma):
    D, G, F = gamma.field_arrays()
    seg_names = {0: "P2toP6", 1: "P6toP1"}
    for i in range(len(gamma.x)):
        yield (float(gamma.x[i]), float(gamma.V[i]), float(gamma.C[i]),
               float(gamma.W[i]), float(gamma.Z[i]), float(D[i]), float(G[i]),
               float(F[i]), seg_names[int(gamma.segment[i])])


def cmd_solve(parser: _Parser, args) -> int:
    params = _params_from_args(parser, args)
    gamma, code = _build_or_exit(parser, params, args)
    if gamma is None:
        return code
    base = args.out or "gamma"
    _write_csv(base + ".csv", ["x", "V", "C", "W", "Z", "D", "G", "F", "segment"],
               _gamma_rows(gamma))
    summary = {"params": params.to_dict(), **gamma.summary()}
    _dump_json(summary, base + ".json")
    _dump_json(summary, None)
    return EXIT_OK


def cmd_portrait(parser: _Parser, args) -> int:
    params = _params_from_args(parser, args)
    v_min, v_max = args.v_min, args.v_max
    c_max = args.c_max
    bundle: Dict[str, object] = {"params": params.to_dict()}

    nulls = sample_nullclines(params, v_min, v_max, num=args.samples)
    bundle["nullclines"] = {k: {"V": v, "C": c} for k, (v, c) in nulls.items()}
    if args.nullcline_csv:
        for key, (v, c) in nulls.items():
            _write_csv(f"{args.nullcline_csv}_{key}.csv", ["V", "C"],
                       zip(v.tolist(), c.tolist()))
    bundle["asymptote_V_star"] = params.derived.V_star
    vline = np.linspace(v_min, v_max, args.samples)
    bundle["sonic_line"] = {"V": vline, "C": np.maximum(1.0 + vline, 0.0)}
    bundle["critical_points"] = [cp.to_dict() for cp in classified_points(params).values()]

    # unit direction of the similarity flow (x < 0, x increasing):
    # (dV, dC) proportional to (G/D, F/D)
    Vg, Cg = np.meshgrid(np.linspace(v_min, v_max, args.grid_n),
                         np.linspace(c_max / args.grid_n, c_max, args.grid_n))
    mask_w = np.abs(1.0 + Vg) > 1e-9
    D = np.full_like(Vg, np.nan)
    G = np.full_like(Vg, np.nan)
    F = np.full_like(Vg, np.nan)
    D[mask_w], G[mask_w], F[mask_w] = fields(Vg[mask_w], Cg[mask_w], params)
    with np.errstate(divide="ignore", invalid="ignore"):
        dV = G / D
        dC = F / D
        norm = np.hypot(dV, dC)
        ok = np.isfinite(norm) & (norm > 0.0) & (np.abs(D) > 1e-12)
        dV = np.where(ok, dV / norm, np.nan)
        dC = np.where(ok, dC / norm, np.nan)
    bundle["direction_field"] = {"V": Vg, "C": Cg, "dV": dV, "dC": dC}

    report = full_condition_report(params)
    if conditions_pass(report):
        try:
            gamma = build_gamma(params, _gamma_options(args))
            bundle["gamma"] = {"x": gamma.x, "V": gamma.V, "C": gamma.C,
                               "segment": gamma.segment,
                               "summary": {k: v for k, v in gamma.summary().items()
                                           if k != "events"}}
        except TrajectoryError as exc:
            bundle["gamma_error"] = str(exc)
    else:
        bundle["gamma_error"] = "conditions not satisfied"

    _dump_json(bundle, args.out)
    return EXIT_OK


def cmd_reconstruct(parser: _Parser, args) -> int:
    params = _params_from_args(parser, args)
    if args.eps_p2 is None:
        args.eps_p2 = 1e-7  # resolve the interface fit window by default
    gamma, code = _build_or_exit(parser, params, args)
    if gamma is None:
        return code

    density = rec.density_from_adiabatic(gamma, params, constant=args.adiabatic_constant)
    t_values = [float(s) for s in args.t_values.split(",")]
    r0_max = max((-t) ** (1.0 / params.lam) for t in t_values)
    r_grid = np.linspace(max(args.r_min, r0_max), args.r_max, args.r_num)
    field_obj = rec.flow_field(gamma, density, params, t_values, r_grid)

    checks: Dict[str, object] = {}
    boundary = rec.boundary_exponents(gamma, density, params)
    checks["boundary"] = {
        "p_exponent_fit": boundary.p_exponent_fit,
        "p_exponent_predicted": boundary.p_exponent_predicted,
        "rho_exponent_fit": boundary.rho_exponent_fit,
        "rho_exponent_predicted": boundary.rho_exponent_predicted,
        "entropy_exponent_fit": boundary.entropy_exponent_fit,
        "entropy_exponent_predicted": boundary.entropy_exponent_predicted,
        "fit_r2": boundary.fit_r2,
        "acceleration_finite_positive": boundary.acceleration_finite_positive,
        "ok": boundary.max_relative_error() < 0.02 and boundary.acceleration_finite_positive,
    }
    kin_err = rec.interface_kinematics_error(gamma, density, params)
    checks["interface_kinematics"] = {"max_relative_error": kin_err, "ok": kin_err < 1e-6}
    ad_var = rec.adiabatic_variation(gamma, density, params)
    checks["adiabatic_constancy"] = {"relative_variation": ad_var, "ok": ad_var < 1e-7}
    integ = rec.integrability_check(gamma, density, params)
    checks["integrability"] = {
        "exponent_margins": integ.exponent_margins,
        "integrals": integ.integrals,
        "entropy_near_interface": integ.entropy_near_interface,
        "ok": integ.all_ok,
    }
    resid = rec.residual_check(gamma, density, params)
    sim_ok = max(resid.sim_ode_max.values()) < 1e-6
    pde_ok = all(abs(v - 2.0) <= 0.2 for v in resid.pde_orders.values())
    checks["residuals"] = {
        "similarity_ode_max": resid.sim_ode_max,
        "pde_orders": resid.pde_orders,
        "pde_residuals": resid.pde_residuals,
        "grid_sizes": resid.grid_sizes,
        "ok": sim_ok and pde_ok,
    }
    all_ok = all(bool(c["ok"]) for c in checks.values())

    base = args.out or "flow"
    rows = []
    for i, t in enumerate(field_obj.t):
        for j, r in enumerate(field_obj.r):
            rows.append((float(t), float(r), float(field_obj.rho[i, j]),
                         float(field_obj.u[i, j]), float(field_obj.c[i, j]),
                         float(field_obj.p[i, j])))
    _write_csv(base + ".csv", ["t", "r", "rho", "u", "c", "p"], rows)
    header = {"params": params.to_dict(), "x0": gamma.x0,
              "adiabatic_constant": density.adiabatic_constant,
              "summary": {k: v for k, v in gamma.summary().items() if k != "events"},
              "checks": checks, "all_ok": all_ok}
    _dump_json(header, base + ".json")
    _dump_json({"checks": checks, "all_ok": all_ok}, None)
    return EXIT_OK if all_ok else EXIT_VERIFICATION


def build_parser() -> _Parser:
    parser = _Parser(prog="cavityflow",
                     description="Self-similar collapsing-cavity Euler flows: "
                                 "conditions, phase portraits, trajectories, fields.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="evaluate admissibility conditions (A)-(J)")
    _add_param_args(p_check)
    p_check.add_argument("--format", choices=["json", "csv"], default="json")
    p_check.add_argument("--out", help="write to file instead of stdout")
    p_check.add_argument("--sweep", type=float, default=None, metavar="STEP",
                         help="also check a 3x3 (lambda, kappa) grid at +-STEP")
    p_check.set_defaults(func=cmd_check)

    p_points = sub.add_parser("points", help="critical-point table")
    _add_param_args(p_points)
    p_points.add_argument("--format", choices=["json", "csv"], default="json")
    p_points.add_argument("--out")
    p_points.set_defaults(func=cmd_points)

    p_solve = sub.add_parser("solve", help="construct the trajectory")
    _add_param_args(p_solve)
    _add_solver_args(p_solve)
    p_solve.add_argument("--out", help="output base path (default 'gamma')")
    p_solve.set_defaults(func=cmd_solve)

    p_port = sub.add_parser("portrait", help="phase-portrait bundle for plotting")
    _add_param_args(p_port)
    _add_solver_args(p_port)
    p_port.add_argument("--v-min", type=float, default=-1.0)
    p_port.add_argument("--v-max", type=float, default=0.5)
    p_port.add_argument("--c-max", type=float, default=1.0)
    p_port.add_argument("--samples", type=int, default=400)
    p_port.add_argument("--grid-n", type=int, default=25)
    p_port.add_argument("--nullcline-csv", metavar="BASE",
                        help="also write the nullcline polylines to BASE_<branch>.csv")
    p_port.add_argument("--out")
    p_port.set_defaults(func=cmd_portrait)

    p_rec = sub.add_parser("reconstruct", help="fields + verification battery")
    _add_param_args(p_rec)
    _add_solver_args(p_rec)
    p_rec.add_argument("--adiabatic-constant", type=float, default=1.0)
    p_rec.add_argument("--t-values", default="-1.0,-0.5,-0.25")
    p_rec.add_argument("--r-min", type=float, default=1.0)
    p_rec.add_argument("--r-max", type=float, default=3.0)
    p_rec.add_argument("--r-num", type=int, default=101)
    p_rec.add_argument("--out", help="output base path (default 'flow')")
    p_rec.set_defaults(func=cmd_reconstruct)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(parser, args)
    except ParameterError as exc:
        sys.stderr.write(f"parameter error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
