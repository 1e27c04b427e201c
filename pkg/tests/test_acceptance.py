"""Acceptance suite: one test per acceptance criterion, each printing a
PASS line with the measured figures when it holds (run with -s to see
them).  All tolerances are pinned here; nothing is deferred to later
calibration."""

import math
import time
from types import SimpleNamespace

import numpy as np
import pytest
from scipy.optimize import brentq

from cavityflow import (
    Params,
    adiabatic_variation,
    boundary_exponents,
    build_gamma,
    density_from_adiabatic,
    full_condition_report,
    conditions_pass,
    integrability_check,
    integrate_phase,
    interface_kinematics_error,
    nullcline_F,
    nullcline_G,
    residual_check,
    start_at_P2,
)
from cavityflow.params import PRESETS
from cavityflow.phaseplane import critical_points, classify, linearize, fields, _cg_squared
from cavityflow.trajectory import GammaOptions

PRESET_NAMES = sorted(PRESETS)

# independently computed sonic-line roots for case 1 (50-digit oracle)
CASE1_V_MINUS = -0.84746064235528606
CASE1_V_PLUS = -0.18053935764471394


@pytest.fixture(scope="module")
def suite():
    data = {}
    for name in PRESET_NAMES:
        p = Params.from_preset(name)
        t0 = time.perf_counter()
        g = build_gamma(p, GammaOptions(eps=1e-7))
        build_time = time.perf_counter() - t0
        d = density_from_adiabatic(g, p)
        data[name] = SimpleNamespace(params=p, gamma=g, density=d,
                                     build_time=build_time)
    return data


def test_criterion_1_conditions_suite():
    t0 = time.perf_counter()
    for name in PRESET_NAMES:
        report = full_condition_report(Params.from_preset(name))
        assert conditions_pass(report), f"{name}: conditions failed"
        assert [c.name for c in report] == list("ABCDEFGHIJ")
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0, f"condition suite took {elapsed:.3f} s"
    print(f"\n[criterion 1] PASS: all ten conditions hold for the six presets "
          f"({elapsed * 1e3:.1f} ms)")


def test_criterion_2_sonic_identity():
    worst = 0.0
    for name in PRESET_NAMES:
        p = Params.from_preset(name)
        rng = np.random.default_rng(271828)
        V = rng.uniform(-1.0, 2.0, size=100)
        V = V[np.abs(1.0 + V) > 1e-9]
        for sign in (1.0, -1.0):
            C = sign * (1.0 + V)
            _, G, F = fields(V, C, p)
            resid = np.abs(F + sign * 0.5 * (p.gamma - 1.0) * G)
            scale = 1.0 + np.abs(F) + np.abs(G)
            worst = max(worst, float(np.max(resid / scale)))
            assert np.all(resid <= 1e-12 * scale), name
    print(f"\n[criterion 2] PASS: sonic-line proportionality within "
          f"{worst:.2e} (tolerance 1e-12, scaled)")


def test_criterion_3_critical_point_identities():
    for name in PRESET_NAMES:
        p = Params.from_preset(name)
        pts = critical_points(p)
        for pid in ("P6", "P8"):
            cp = pts[pid]
            assert abs(_cg_squared(cp.V, p) - (1.0 + cp.V) ** 2) <= 1e-10, (name, pid)
        p6 = classify(linearize(pts["P6"], p), p)
        w_prod = (p.derived.K * p6.C ** 2 * (p6.V - pts["P4"].V)
                  * (p6.V - pts["P8"].V))
        assert abs(w_prod - p6.wronskian) <= 1e-8 * abs(p6.wronskian), name
    pts1 = critical_points(Params.from_preset("case1"))
    assert pts1["P4"].V == -0.625
    assert abs(pts1["P6"].V - CASE1_V_MINUS) < 1e-4
    assert abs(pts1["P8"].V - CASE1_V_PLUS) < 1e-4
    print("\n[criterion 3] PASS: sonic-line membership (1e-10), Wronskian "
          "product form (rel 1e-8), case1 roots match the oracle")


def test_criterion_4_connectivity(suite):
    for name in PRESET_NAMES:
        s = suite[name]
        g = s.gamma
        assert g.x0 == -1.0 and -1.0 < g.x6 < 0.0, name
        assert g.omega < 0.0 and math.isfinite(g.nu), name
        assert s.build_time < 10.0, f"{name} build took {s.build_time:.2f} s"
        g2 = build_gamma(s.params, GammaOptions(eps=1e-7, rtol=0.5e-10,
                                                atol=0.5e-12))
        for attr in ("x6", "nu", "omega"):
            a, b = getattr(g, attr), getattr(g2, attr)
            assert abs(a - b) / abs(a) < 1e-6, (name, attr)
    times = ", ".join(f"{suite[n].build_time:.2f}s" for n in PRESET_NAMES)
    print(f"\n[criterion 4] PASS: all six trajectories connect the interface "
          f"to the origin, tolerance-halving stable to 1e-6 (builds: {times})")


def test_criterion_5_trapping(suite):
    for name in PRESET_NAMES:
        s = suite[name]
        g = s.gamma
        seg0 = g.segment == 0
        V0s, C0s = g.V[seg0], g.C[seg0]
        assert np.all(C0s <= nullcline_F(V0s, s.params) + 1e-8), name
        assert np.all(C0s >= nullcline_G(V0s, s.params) - 1e-8), name

        p0 = next(e for e in g.events if e["name"] == "p0_f_zero")
        V_p0, C_p0 = p0["V"], p0["C"]
        mask = g.x > p0["x"]
        assert mask.sum() > 100, name

        def cg_minus_c0(v):
            return nullcline_G(v, s.params) - C_p0

        v_hat = brentq(cg_minus_c0, 1e-12, 5.0, xtol=1e-14)
        tol = 1e-8
        assert np.all(g.V[mask] >= V_p0 - tol), name
        assert np.all(g.V[mask] <= v_hat + tol), name
        assert np.all(g.C[mask] > 0.0), name
        assert np.all(g.C[mask] <= C_p0 + tol), name
    print("\n[criterion 5] PASS: interface leg trapped between the "
          "nullclines, terminal leg trapped in the corner rectangle")


def test_criterion_6_boundary_physics(suite):
    worst_exp, worst_kin = 0.0, 0.0
    for name in PRESET_NAMES:
        s = suite[name]
        rep = boundary_exponents(s.gamma, s.density, s.params)
        err_p = abs(rep.p_exponent_fit / rep.p_exponent_predicted - 1.0)
        err_rho = abs(rep.rho_exponent_fit / rep.rho_exponent_predicted - 1.0)
        assert err_p < 0.02 and err_rho < 0.02, name
        worst_exp = max(worst_exp, err_p, err_rho)
        kin = interface_kinematics_error(s.gamma, s.density, s.params,
                                         t_values=(-1.0, -0.5, -0.1, -1e-2, -1e-3))
        assert kin < 1e-6, name
        worst_kin = max(worst_kin, kin)
    print(f"\n[criterion 6] PASS: interface exponents within {100 * worst_exp:.3f}% "
          f"(tolerance 2%), kinematics mismatch <= {worst_kin:.2e} (tolerance 1e-6)")


def test_criterion_7_conservation_consistency(suite):
    worst = {"adiabatic": 0.0, "sim_ode": 0.0}
    orders_all = []
    for name in PRESET_NAMES:
        s = suite[name]
        var = adiabatic_variation(s.gamma, s.density, s.params)
        assert var < 1e-7, name
        worst["adiabatic"] = max(worst["adiabatic"], var)
        rep = residual_check(s.gamma, s.density, s.params)
        sim_max = max(rep.sim_ode_max.values())
        assert sim_max < 1e-6, (name, rep.sim_ode_max)
        worst["sim_ode"] = max(worst["sim_ode"], sim_max)
        for eq, order in rep.pde_orders.items():
            assert abs(order - 2.0) <= 0.2, (name, eq, order)
            orders_all.append(order)
    print(f"\n[criterion 7] PASS: adiabatic variation <= {worst['adiabatic']:.2e} "
          f"(1e-7), similarity-ODE residuals <= {worst['sim_ode']:.2e} (1e-6), "
          f"PDE orders in [{min(orders_all):.2f}, {max(orders_all):.2f}] (2.0 +- 0.2)")


def test_criterion_8_integrability(suite):
    worst = 0.0
    for name in PRESET_NAMES:
        s = suite[name]
        rep = integrability_check(s.gamma, s.density, s.params)
        assert all(m > 0.0 for m in rep.exponent_margins.values()), name
        for which, res in rep.integrals.items():
            assert res["converged"], (name, which)
            assert res["relative_error"] < 0.01, (name, which)
            worst = max(worst, res["relative_error"])
    print(f"\n[criterion 8] PASS: collapse-time mass/momentum/energy integrals "
          f"match closed forms within {worst:.2e} (tolerance 1%)")


def test_criterion_9_vertical_ray_exclusion():
    eps = np.finfo(float).eps
    rng = np.random.default_rng(31415)
    worst = 0.0
    count = 0
    while count < 1000:
        n = int(rng.choice([2, 3]))
        g = float(rng.uniform(1.05, 3.5))
        mu = float(rng.uniform(1e-3, 0.95 * n * (g - 1.0) / 2.0))
        kbar = -2.0 * mu / (g - 1.0)
        kap = float(rng.uniform(max(kbar + 1e-3, -0.9 * n), 2.0))
        if not mu < (kap + n) / 2.0:
            continue
        p = Params.make(n, g, 1.0 + mu, kap)
        d = p.derived
        scale = (abs(d.a_vertical * g) + abs((1.0 - d.a_vertical) * d.q))
        scale = max(scale / abs(g - 1.0 - d.q), 1.0)
        assert abs(d.b_vertical) <= 8 * eps * scale
        worst = max(worst, abs(d.b_vertical) / (eps * scale))
        count += 1
    print(f"\n[criterion 9] PASS: vertical-ray pressure exponent vanishes to "
          f"{worst:.2f} ulps over 1000 admissible draws (tolerance 8)")


def test_criterion_10_isentropic_regression():
    base = Params.from_preset("case1")
    p = Params.make(3, "5/3", "1.25", base.derived.kappa_bar)
    assert p.derived.alpha == 0.0
    report = full_condition_report(p)
    assert not conditions_pass(report)  # (C) fails by construction
    s = start_at_P2(p, eps=1e-6)
    run = integrate_phase(s.point, p, None, log_x0=s.log_x, s_max=0.1)
    log_sigma = ((1.0 - p.gamma) * run.log_R[1:]
                 + 2.0 * np.log(run.C[1:]) - 2.0 * run.log_x[1:])
    variation = float(np.max(np.abs(np.exp(log_sigma - log_sigma[0]) - 1.0)))
    assert variation < 1e-6
    print(f"\n[criterion 10] PASS: isentropic reduced integral constant to "
          f"{variation:.2e} along the local interface trajectory (tolerance 1e-6)")
