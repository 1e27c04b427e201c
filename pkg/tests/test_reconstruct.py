import math

import numpy as np
import pytest

from cavityflow import (
    FluidRegionError,
    Params,
    ReconstructError,
    adiabatic_variation,
    boundary_exponents,
    build_gamma,
    density_from_adiabatic,
    flow_field,
    integrability_check,
    interface_kinematics_error,
    residual_check,
    start_at_P2,
    integrate_phase,
)
from cavityflow.trajectory import GammaOptions


class TestDensity:
    def test_positive_and_vanishing_at_interface(self, case1_gamma, case1_density):
        den = case1_density
        assert np.all(den.R > 0.0)
        seg0 = case1_gamma.segment == 0
        assert den.R[seg0][0] < 1e-12  # W ~ 1e-7 at the first sample

    def test_exponent_negative(self, case1, case1_density):
        g, q = case1.gamma, case1.derived.q
        assert case1_density.exponent == 1.0 / (1.0 - g + q)
        assert case1_density.exponent < 0.0

    def test_adiabatic_combination_constant(self, case1, case1_gamma, case1_density):
        # closed-form inversion: exact by construction (roundoff only)
        assert adiabatic_variation(case1_gamma, case1_density, case1) < 1e-7

    def test_transport_route_consistency(self, case1, case1_gamma, case1_density):
        # independent conservation check through the transport-integrated R
        var = adiabatic_variation(case1_gamma, case1_density, case1,
                                  use_transport=True)
        assert var < 1e-6

    def test_interface_power_law(self, case1, case1_gamma, case1_density):
        q, g = case1.derived.q, case1.gamma
        expo = (q + 1.0) / (g - 1.0 - q)
        seg0 = case1_gamma.segment == 0
        W = case1_gamma.W[seg0]
        R = case1_density.R[seg0]
        mask = (W > 1e-6) & (W < 1e-4)
        ratio = R[mask] / W[mask] ** expo
        assert np.ptp(ratio) / np.mean(ratio) < 0.05

    def test_gauge_covariance(self, case1, case1_gamma, case1_density):
        den2 = density_from_adiabatic(case1_gamma, case1, constant=2.0)
        factor = 2.0 ** case1_density.exponent
        assert np.allclose(den2.R, factor * case1_density.R, rtol=1e-12)
        assert den2.R_collapse == pytest.approx(
            factor * case1_density.R_collapse, rel=1e-12)

    def test_rejects_nonpositive_constant(self, case1, case1_gamma):
        with pytest.raises(ReconstructError):
            density_from_adiabatic(case1_gamma, case1, constant=0.0)

    def test_collapse_limit_matches_tail(self, case1_gamma, case1_density):
        # R tends to the collapse value as x -> 0
        assert case1_density.R[-1] == pytest.approx(
            case1_density.R_collapse, rel=1e-4)


class TestIsentropicRegression:
    def test_reduced_integral_constant(self):
        # kappa = kappa_bar makes q = 0 and the adiabatic combination
        # collapses to R^(1-gamma) (C/x)^2 = const; the transported density
        # along a locally constructed interface trajectory must honor it
        base = Params.from_preset("case1")
        p = Params.make(3, "5/3", "1.25", base.derived.kappa_bar)
        assert p.derived.alpha == 0.0
        s = start_at_P2(p, eps=1e-6)
        run = integrate_phase(s.point, p, None, log_x0=s.log_x, s_max=0.1)
        assert run.stop_reason == "s_exhausted"
        keep = slice(1, None)
        log_sigma = ((1.0 - p.gamma) * run.log_R[keep]
                     + 2.0 * np.log(run.C[keep])
                     - 2.0 * run.log_x[keep])
        sig = np.exp(log_sigma - log_sigma[0])
        assert np.max(np.abs(sig - 1.0)) < 1e-6

    def test_isentropic_start_slope(self):
        # the interface slope collapses to gamma (gamma-1) mu / (n(gamma-1) - 2 mu)
        base = Params.from_preset("case1")
        p = Params.make(3, "5/3", "1.25", base.derived.kappa_bar)
        g, mu, n = p.gamma, p.derived.mu, p.n
        expected = g * (g - 1.0) * mu / (n * (g - 1.0) - 2.0 * mu)
        assert p.derived.sigma == pytest.approx(expected, rel=1e-12)


class TestFlowField:
    def test_interface_kinematics(self, case1, case1_gamma, case1_density):
        err = interface_kinematics_error(case1_gamma, case1_density, case1,
                                         t_values=(-1.0, -0.5, -0.1, -1e-2, -1e-3))
        assert err < 1e-6

    def test_interface_values_exact(self, case1, case1_gamma, case1_density):
        t = -0.5
        r0 = (-t) ** (1.0 / case1.lam)
        ff = flow_field(case1_gamma, case1_density, case1, [t], [r0])
        assert ff.rho[0, 0] == 0.0
        assert ff.p[0, 0] == 0.0

    def test_pressure_vanishes_toward_interface(self, case1, case1_gamma, case1_density):
        t = -0.5
        r0 = (-t) ** (1.0 / case1.lam)
        deltas = np.array([1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
        ff = flow_field(case1_gamma, case1_density, case1, [t], r0 * (1.0 + deltas))
        p_vals = ff.p[0]
        assert np.all(np.diff(p_vals) < 0.0)  # decreasing toward the interface
        assert p_vals[-1] < 1e-12 * p_vals[0]

    def test_collapse_profile(self, case1, case1_gamma, case1_density):
        # u -> -(nu/lambda) r^(1-lambda), c -> -(omega/lambda) r^(1-lambda)
        lam = case1.lam
        t = -1e-8
        r = np.array([0.7, 1.0, 1.9])
        ff = flow_field(case1_gamma, case1_density, case1, [t], r)
        u_expected = -(case1_gamma.nu / lam) * r ** (1.0 - lam)
        c_expected = -(case1_gamma.omega / lam) * r ** (1.0 - lam)
        assert np.allclose(ff.u[0], u_expected, rtol=1e-4)
        assert np.allclose(ff.c[0], c_expected, rtol=1e-4)

    def test_velocity_sign_convention(self, case1, case1_gamma, case1_density):
        # u and V/x have opposite signs pointwise (prefactor -r^(1-lam)/lam)
        t = -0.5
        r = np.linspace(1.0, 2.5, 7)
        ff = flow_field(case1_gamma, case1_density, case1, [t], r)
        x = t / r ** case1.lam
        itp = np.interp(x, case1_gamma.x, case1_gamma.V) / x
        assert np.all(np.sign(ff.u[0]) == -np.sign(itp))

    def test_outside_fluid_region(self, case1, case1_gamma, case1_density):
        t = -1.0
        r0 = 1.0
        with pytest.raises(FluidRegionError):
            flow_field(case1_gamma, case1_density, case1, [t], [0.9 * r0])

    def test_rejects_nonnegative_time(self, case1, case1_gamma, case1_density):
        with pytest.raises(ReconstructError):
            flow_field(case1_gamma, case1_density, case1, [0.0], [1.0])

    def test_positivity(self, case1, case1_gamma, case1_density):
        t = np.array([-1.0, -0.3])
        r = np.linspace(1.0, 3.0, 40)
        ff = flow_field(case1_gamma, case1_density, case1, t, r)
        assert np.all(ff.p >= 0.0)
        assert np.all(ff.rho[:, 1:] > 0.0)
        assert np.all(np.isfinite(ff.u)) and np.all(np.isfinite(ff.c))


class TestBoundaryExponents:
    def test_case1_fits(self, case1, case1_gamma, case1_density):
        rep = boundary_exponents(case1_gamma, case1_density, case1)
        assert rep.p_exponent_predicted == pytest.approx(3.3222222222222222, rel=1e-12)
        assert rep.rho_exponent_predicted == pytest.approx(2.3222222222222222, rel=1e-12)
        assert rep.entropy_exponent_predicted == pytest.approx(
            -0.54814814814814815, rel=1e-12)
        assert abs(rep.p_exponent_fit / rep.p_exponent_predicted - 1.0) < 0.02
        assert abs(rep.rho_exponent_fit / rep.rho_exponent_predicted - 1.0) < 0.02
        assert abs(rep.entropy_exponent_fit / rep.entropy_exponent_predicted - 1.0) < 0.02
        assert all(r2 > 0.999 for r2 in rep.fit_r2.values())

    def test_entropy_blows_up_at_interface(self, case1, case1_gamma, case1_density):
        # negative exponent: exp(S/c_v) -> +inf as W -> 0
        rep = boundary_exponents(case1_gamma, case1_density, case1)
        assert rep.entropy_exponent_fit < 0.0

    def test_acceleration_finite_positive(self, case1, case1_gamma, case1_density):
        rep = boundary_exponents(case1_gamma, case1_density, case1)
        assert rep.acceleration_finite_positive
        assert np.all(rep.acceleration_values > 0.0)
        # zero net W-power: fitted exponents of p and rho differ by one
        assert rep.p_exponent_fit - rep.rho_exponent_fit == pytest.approx(1.0, abs=1e-3)

    def test_unresolved_window(self, case1, case1_gamma, case1_density):
        with pytest.raises(ReconstructError, match="fit window unresolved"):
            boundary_exponents(case1_gamma, case1_density, case1,
                               window=(1e-12, 1e-10))


class TestIntegrability:
    def test_case1_all_finite(self, case1, case1_gamma, case1_density):
        rep = integrability_check(case1_gamma, case1_density, case1)
        assert rep.all_ok
        assert all(m > 0.0 for m in rep.exponent_margins.values())
        for res in rep.integrals.values():
            assert res["relative_error"] < 0.01
            assert res["converged"]

    def test_case1_energy_integrand_exponent(self, case1):
        # kappa + m + 2 - 2 lambda = 1.49 > -1 for case 1
        kap, lam, n = case1.kappa, case1.lam, case1.n
        assert kap + (n - 1) + 2.0 - 2.0 * lam == pytest.approx(1.49, abs=1e-12)

    def test_boundary_of_A_flagged(self, case1, case1_gamma, case1_density):
        # lambda = 1 + (kappa+n)/2 sits exactly on the (A) boundary
        kap = case1.kappa
        p_bad = Params.make(3, "5/3", 1.0 + (kap + 3) / 2.0, kap)
        rep = integrability_check(case1_gamma, case1_density, p_bad)
        assert rep.exponent_margins["energy"] == pytest.approx(0.0, abs=1e-14)
        assert not rep.all_ok

    def test_entropy_content_near_interface(self, case1, case1_gamma, case1_density):
        rep = integrability_check(case1_gamma, case1_density, case1)
        ent = rep.entropy_near_interface
        assert ent["converged"]
        vals = ent["values"]
        assert abs(vals[2] - vals[1]) <= abs(vals[1] - vals[0]) + 1e-15


class TestResiduals:
    def test_case1(self, case1, case1_gamma, case1_density):
        rep = residual_check(case1_gamma, case1_density, case1)
        assert max(rep.sim_ode_max.values()) < 1e-6
        for name, order in rep.pde_orders.items():
            assert abs(order - 2.0) <= 0.2, (name, order)
        for seq in rep.pde_residuals.values():
            assert seq[0] > seq[-1]  # refinement reduces the residual
