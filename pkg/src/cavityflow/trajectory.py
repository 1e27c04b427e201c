"""Construction of the connecting trajectory of the similarity system.

The physically meaningful profile starts at the vacuum-interface point
P2 = (-1, 0), crosses the sonic line C = 1 + V at the node P6, and ends at
the origin P1, which is reached as x -> 0 with finite limits V/x -> nu and
C/x -> omega.  This module builds that trajectory numerically:

* local analysis at P2 (integral rays of the truncated (W, Z) dynamics and
  the exponents that exclude a vertical interface approach);
* the unique admissible start direction Z = sigma W, refined by one
  Richardson step;
* adaptive integration of the phase curve in arclength parametrization,

      dV/ds = s* G / N,   dC/ds = s* F / N,      N = |(F, G)|,

  with s* the sign of D in the current region, which traverses the curve
  in the direction of increasing x and is smooth across horizontal (F = 0)
  and vertical (G = 0) tangencies.  The similarity coordinate and the
  transported density ride along as extra states:

      d log|x| / ds = -lambda |D| / N
      d log R / ds  = -s* ((kappa + n) V D + G) / (N (1 + V));

* the nodal crossing at P6 along the primary slope L1, with the small gap
  bridged by linearization limits;
* recovery of nu and omega by extrapolation over the last decade of |x|.

Everything is gauge-fixed to x0 = -1: the system is invariant under
x -> a x, and this choice makes the interface path r0(t) = (-t)^(1/lambda).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from .params import Params
from .phaseplane import (
    CriticalPoint,
    NullclineDomainError,
    PhasePoint,
    classify,
    critical_points,
    fields,
    full_condition_report,
    conditions_pass,
    linearize,
    nullcline_F,
    nullcline_G,
)

__all__ = [
    "TrajectoryError", "RayAnalysisP2", "StartP2", "GammaOptions", "PhaseRun",
    "GammaResult", "analyze_p2_rays", "dg_limit_at_p2", "start_at_P2",
    "integrate_phase", "recover_x", "cross_P6", "build_gamma",
]


class TrajectoryError(Exception):
    """Raised when the trajectory construction fails."""


@dataclass(frozen=True)
class RayAnalysisP2:
    """Integral rays of the truncated dynamics at P2 in the (W, Z) plane.

    Exactly three integral half-rays exist in the closed first quadrant,
    at polar angles 0, pi/2, and arctan(sigma).  The horizontal ray carries
    only the flat C == 0 trajectory; the vertical ray would give a flow
    whose interface pressure exponent b is identically zero (p does not
    vanish), so only the sloped ray generates cavity flows.
    """

    phi1: float
    phi2: float
    phi3: float
    phi1_class: str
    phi2_class: str
    phi3_class: str
    a: float
    b: float


def analyze_p2_rays(params: Params) -> RayAnalysisP2:
    """Classify the three integral rays at P2 as isolated or nodal.

    The vertical ray is isolated iff kappa > kappa_bar; the sloped ray is
    isolated iff mu < n (gamma - 1)/2, in which case a unique trajectory
    approaches P2 tangent to it.
    """
    n, g = params.gas.n, params.gas.gamma
    d = params.derived
    phi2_class = "isolated" if params.sim.kappa > d.kappa_bar else "nodal"
    phi3_class = "isolated" if d.mu < n * (g - 1.0) / 2.0 else "nodal"
    return RayAnalysisP2(
        phi1=0.0, phi2=math.pi / 2.0, phi3=math.atan(d.sigma),
        phi1_class="isolated", phi2_class=phi2_class, phi3_class=phi3_class,
        a=d.a_vertical, b=d.b_vertical,
    )


def dg_limit_at_p2(params: Params) -> float:
    """Limit of D/G along the interface trajectory as P2 is approached.

    With Z ~ sigma W near P2, both D and G vanish linearly in W and
    D/G -> -sigma / (mu - n W* sigma), a finite nonzero value; this is what
    makes the interface coordinate x0 finite.
    """
    n = params.gas.n
    d = params.derived
    return -d.sigma / (d.mu - n * d.W_star * d.sigma)


@dataclass(frozen=True)
class StartP2:
    """Starting state for the interface trajectory, offset by W = eps from P2."""

    point: PhasePoint
    log_x: float
    eps: float


def _unit_tangent_rhs(params: Params, region_sign: float):
    """Right-hand side of the arclength system for states (V, C, log|x|, logR)."""
    n, lam = params.gas.n, params.sim.lam
    kap = params.sim.kappa
    d = params.derived
    V_star, alpha = d.V_star, d.alpha
    k1, k2, k3 = d.k1, d.k2, d.k3
    kn = kap + n

    def rhs(s, y):
        V, C = y[0], y[1]
        W = 1.0 + V
        Z = C * C
        D = W * W - Z
        G = n * Z * (V - V_star) - V * W * (lam + V)
        F = C * (Z * (W + alpha) / W - k1 * W * W + k2 * W - k3)
        N = math.hypot(F, G)
        if N == 0.0:
            return (0.0, 0.0, 0.0, 0.0)
        dV = region_sign * G / N
        dC = region_sign * F / N
        dlx = -lam * abs(D) / N
        dlr = -region_sign * (kn * V * D + G) / (N * W)
        return (dV, dC, dlx, dlr)

    return rhs


@dataclass
class PhaseRun:
    """Result of one adaptive integration leg of the phase system."""

    s: np.ndarray
    V: np.ndarray
    C: np.ndarray
    log_x: np.ndarray
    log_R: np.ndarray
    stop_reason: str
    events: List[Dict[str, float]]
    sol: object  # dense OdeSolution over [s[0], s[-1]]

    def state_at(self, s):
        return self.sol(s)


def integrate_phase(start: PhasePoint, params: Params, stop_event: str = "p6", *,
                    region_sign: Optional[float] = None,
                    log_x0: float = 0.0, log_R0: float = 0.0,
                    p6_radius: float = 1e-5, p1_radius: float = 1e-6,
                    rtol: float = 1e-10, atol: float = 1e-12,
                    max_step: float = 0.05, s_max: float = 20.0,
                    record_nullcline_events: bool = False) -> PhaseRun:
    """Integrate the phase curve from ``start`` until a stop event fires.

    ``stop_event`` chooses the terminal condition: "p6" (entering the
    p6_radius ball around P6), "p1" (entering the p1_radius ball around the
    origin), or "f_zero" (crossing the {F=0} nullcline).  Crossing the
    sonic line away from a triple point (sign change of D) and leaving a
    generous bounding box are always terminal failures ("domain exit");
    integrator breakdown surfaces as "step underflow".

    The embedded-pair stepper keeps the local error below
    rtol * |y| + atol componentwise; events are located by sign change and
    root polishing on the dense output.
    """
    D0, _, _ = fields(start.V, start.C, params)
    sign = region_sign if region_sign is not None else (-1.0 if D0 < 0.0 else 1.0)
    rhs = _unit_tangent_rhs(params, sign)

    pts = critical_points(params)
    p6 = pts["P6"]

    event_fns = []
    names = []

    def make_distance_event(Vc, Cc, radius):
        def ev(s, y):
            return math.hypot(y[0] - Vc, y[1] - Cc) - radius
        ev.direction = -1
        return ev

    if stop_event == "p6":
        if not p6.present:
            raise TrajectoryError("stop event p6 requested but P6 is absent")
        ev = make_distance_event(p6.V, p6.C, p6_radius)
        ev.terminal = True
        event_fns.append(ev)
        names.append("p6")
    elif stop_event == "p1":
        ev = make_distance_event(0.0, 0.0, p1_radius)
        ev.terminal = True
        event_fns.append(ev)
        names.append("p1")
    elif stop_event == "f_zero":
        def ev_f_stop(s, y):
            _, _, F = fields(y[0], y[1], params)
            return F
        ev_f_stop.terminal = True
        ev_f_stop.direction = 0
        event_fns.append(ev_f_stop)
        names.append("f_zero")
    elif stop_event is None:
        pass  # run out the arclength budget; stop_reason = "s_exhausted"
    else:
        raise ValueError(f"unknown stop_event {stop_event!r}")

    def ev_d_zero(s, y):
        D, _, _ = fields(y[0], y[1], params)
        return D
    ev_d_zero.terminal = True
    ev_d_zero.direction = 0
    event_fns.append(ev_d_zero)
    names.append("d_zero")

    def ev_box(s, y):
        return min(y[0] + 1.05, 2.0 - y[0], y[1] + 1e-3, 3.0 - y[1])
    ev_box.terminal = True
    ev_box.direction = -1
    event_fns.append(ev_box)
    names.append("box_exit")

    if record_nullcline_events:
        def ev_f(s, y):
            _, _, F = fields(y[0], y[1], params)
            return F
        ev_f.terminal = False
        event_fns.append(ev_f)
        names.append("f_zero_crossing")

        def ev_g(s, y):
            _, G, _ = fields(y[0], y[1], params)
            return G
        ev_g.terminal = False
        event_fns.append(ev_g)
        names.append("g_zero_crossing")

    sol = solve_ivp(rhs, (0.0, s_max), [start.V, start.C, log_x0, log_R0],
                    method="DOP853", rtol=rtol, atol=atol, max_step=max_step,
                    dense_output=True, events=event_fns)
    if sol.status == -1:
        raise TrajectoryError(f"step underflow: {sol.message}")

    events: List[Dict[str, float]] = []
    for name, s_ev, y_ev in zip(names, sol.t_events, sol.y_events):
        for k in range(len(s_ev)):
            events.append({"name": name, "s": float(s_ev[k]),
                           "V": float(y_ev[k][0]), "C": float(y_ev[k][1]),
                           "x": -math.exp(float(y_ev[k][2]))})

    if sol.status == 1:
        fired = [names[i] for i, t in enumerate(sol.t_events) if len(t) > 0]
        if stop_event is not None and stop_event in fired:
            stop_reason = stop_event
        elif "d_zero" in fired or "box_exit" in fired:
            raise TrajectoryError(
                "domain exit: trajectory left the admissible region "
                f"(events: {', '.join(fired)})"
            )
        else:
            stop_reason = fired[0] if fired else "s_exhausted"
    else:
        stop_reason = "s_exhausted"

    return PhaseRun(s=sol.t, V=sol.y[0], C=sol.y[1], log_x=sol.y[2],
                    log_R=sol.y[3], stop_reason=stop_reason, events=events,
                    sol=sol.sol)


def start_at_P2(params: Params, eps: float = 1e-6, *,
                rtol: float = 1e-12, atol: float = 1e-14) -> StartP2:
    """First point of the interface trajectory, W = eps off P2.

    The unique admissible trajectory leaves P2 with slope sigma in the
    (W, Z) plane, so the first-order start is Z = sigma eps.  One
    Richardson step (start at eps/2, integrate the phase curve to W = eps,
    extrapolate against the direct value) removes the leading O(eps^2)
    truncation.  The log|x| anchor is set from the finite limit of D/G at
    P2 so that P2 itself sits at x0 = -1.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    d = params.derived
    sigma = d.sigma

    def check_in_strip(V, C, label):
        try:
            c_lo = nullcline_G(V, params)
            c_hi = nullcline_F(V, params)
        except NullclineDomainError as exc:
            raise TrajectoryError(
                f"start offset eps={eps:g} leaves the trapping strip ({exc})"
            ) from None
        if not (c_lo < C < c_hi):
            raise TrajectoryError(
                f"start offset eps={eps:g} leaves the trapping strip: "
                f"{label} C={C:.6g} not in ({c_lo:.6g}, {c_hi:.6g})"
            )

    for e in (eps, eps / 2.0):
        check_in_strip(e - 1.0, math.sqrt(sigma * e), f"ray point at W={e:g}")

    def z_reached(eps_start: float, w_target: float) -> float:
        v0 = eps_start - 1.0
        c0 = math.sqrt(sigma * eps_start)

        def hit_w(s, y):
            return (1.0 + y[0]) - w_target
        hit_w.terminal = True
        hit_w.direction = 1

        # the arc from W = eps/2 to W = eps stays short: bound it generously
        s_span = 100.0 * (math.sqrt(sigma * w_target) + w_target)
        rhs = _unit_tangent_rhs(params, -1.0)
        sol = solve_ivp(rhs, (0.0, s_span), [v0, c0, 0.0, 0.0], method="DOP853",
                        rtol=rtol, atol=atol, events=hit_w, dense_output=False,
                        max_step=s_span / 10.0)
        if sol.status != 1:
            raise TrajectoryError("start refinement failed to reach the target offset")
        return float(sol.y[1, -1]) ** 2

    z_direct = sigma * eps
    z_half = z_reached(eps / 2.0, eps)
    z_refined = (4.0 * z_half - z_direct) / 3.0
    if z_refined <= 0.0:
        raise TrajectoryError("start refinement produced a nonpositive Z")

    V0 = eps - 1.0
    C0 = math.sqrt(z_refined)
    check_in_strip(V0, C0, "refined start")

    log_x = -params.sim.lam * dg_limit_at_p2(params) * eps  # relative to log|x0| = 0
    return StartP2(point=PhasePoint(V0, C0), log_x=log_x, eps=eps)


def recover_x(V: np.ndarray, C: np.ndarray, params: Params,
              log_x_anchor: float = 0.0, anchor_index: int = 0) -> np.ndarray:
    """Similarity coordinate along a phase polyline, by path quadrature.

    Integrates d log|x| = -lambda (D/G) dV = -lambda (D/F) dC segment by
    segment with Simpson's rule on the chord, choosing per segment the
    form whose denominator is larger at the chord midpoint (the V-form
    degenerates at vertical tangencies, the C-form at horizontal ones).
    Returns the x samples (negative), anchored so that
    x[anchor_index] = -exp(log_x_anchor).

    This is an independent route to the co-integrated log|x| carried by
    :func:`integrate_phase` and is used to cross-check it.
    """
    V = np.asarray(V, dtype=float)
    C = np.asarray(C, dtype=float)
    if V.shape != C.shape or V.ndim != 1 or len(V) < 2:
        raise ValueError("recover_x expects two equal-length 1-d arrays")
    lam = params.sim.lam

    D, G, F = fields(V, C, params)
    Vm = 0.5 * (V[:-1] + V[1:])
    Cm = 0.5 * (C[:-1] + C[1:])
    Dm, Gm, Fm = fields(Vm, Cm, params)

    dV = np.diff(V)
    dC = np.diff(C)
    use_v = np.abs(Gm) >= np.abs(Fm)

    with np.errstate(divide="ignore", invalid="ignore"):
        tv = D / G
        tvm = Dm / Gm
        tc = D / F
        tcm = Dm / Fm
    dy_v = -(lam / 6.0) * (tv[:-1] + 4.0 * tvm + tv[1:]) * dV
    dy_c = -(lam / 6.0) * (tc[:-1] + 4.0 * tcm + tc[1:]) * dC
    dy = np.where(use_v, dy_v, dy_c)
    if not np.all(np.isfinite(dy)):
        bad = int(np.flatnonzero(~np.isfinite(dy))[0])
        raise TrajectoryError(
            f"nonintegrable segment in x recovery near index {bad} "
            f"(V={V[bad]:.6g}, C={C[bad]:.6g})"
        )

    log_x = np.empty_like(V)
    log_x[0] = 0.0
    np.cumsum(dy, out=log_x[1:])
    log_x += log_x_anchor - log_x[anchor_index]
    return -np.exp(log_x)


@dataclass(frozen=True)
class P6Crossing:
    """Geometry of the sonic-line crossing at the node P6.

    The arrival gap is bridged with the linearization limits along the
    primary slope L1 (the incoming direction); the departure gap with the
    limits along the actual departure direction.
    """

    departure: PhasePoint
    p6: CriticalPoint
    arrival_angle_error: float
    slope: float
    d_arrival: float
    d_departure: float
    rates_arrival: Tuple[float, float]    # (dlog|x|/ds, dlogR/ds) along L1
    rates_departure: Tuple[float, float]  # same along the departure direction

    @property
    def delta_log_x(self) -> float:
        return (self.rates_arrival[0] * self.d_arrival
                + self.rates_departure[0] * self.d_departure)

    @property
    def delta_log_x_to_p6(self) -> float:
        return self.rates_arrival[0] * self.d_arrival

    @property
    def delta_log_R(self) -> float:
        return (self.rates_arrival[1] * self.d_arrival
                + self.rates_departure[1] * self.d_departure)


def _refine_to_node(point: PhasePoint, params: Params, region_sign: float,
                    p6: CriticalPoint, r_in: float, forward: bool,
                    rtol: float, atol: float):
    """Integrate from ``point`` (forward or backward along the flow) until
    the distance to P6 drops to ``r_in``.

    Returns the end point and the accumulated (delta log|x|, delta log R)
    of the *forward* traversal of that arc.  Used to bridge the crossing
    gap at P6 numerically, leaving only an O(r_in) core to the
    linearization limits.
    """
    rhs = _unit_tangent_rhs(params, region_sign)

    def ev(s, y):
        return math.hypot(y[0] - p6.V, y[1] - p6.C) - r_in
    ev.terminal = True
    ev.direction = -1

    span = (0.0, 1.0) if forward else (0.0, -1.0)
    sol = solve_ivp(rhs, span, [point.V, point.C, 0.0, 0.0], method="DOP853",
                    rtol=rtol, atol=atol, events=ev, max_step=0.01)
    if sol.status != 1:
        raise TrajectoryError(f"node bridge refinement failed: {sol.message}")
    y = sol.y[:, -1]
    end = PhasePoint(float(y[0]), float(y[1]))
    if forward:
        return end, float(y[2]), float(y[3])
    # backward run accumulates the negated forward increments
    return end, -float(y[2]), -float(y[3])


def _p6_gap_limits(params: Params, p6: CriticalPoint, slope: float) -> Tuple[float, float]:
    """Limits of d log|x|/ds and d log R/ds at P6 along the direction (1, slope).

    All of D, G, F vanish linearly at the triple point, so the transported
    quantities have finite rates there, obtained from directional
    derivatives of the fields.
    """
    lam = params.sim.lam
    kn = params.sim.kappa + params.gas.n
    h = math.hypot(1.0, slope)
    D_dir = 2.0 * p6.C * (1.0 - slope) / h
    F_dir = (p6.F_V + slope * p6.F_C) / h
    G_dir = (p6.G_V + slope * p6.G_C) / h
    N_dir = math.hypot(F_dir, G_dir)
    dlogx = -lam * abs(D_dir) / N_dir
    # the rate of log R is continuous through the crossing; evaluate it on
    # the departure side (sign +1, distance +d along the ray)
    dlogR = -(kn * p6.V * D_dir + G_dir) / (N_dir * (1.0 + p6.V))
    return dlogx, dlogR


def cross_P6(arrival: PhasePoint, params: Params, eps6: float = 1e-4, *,
             slope_override: Optional[float] = None,
             normal_offset: float = 0.0,
             angle_tol: float = 1e-3) -> P6Crossing:
    """Cross the sonic line at P6 along the primary nodal direction.

    Verifies that the arrival direction (from the arrival point toward P6)
    matches the primary slope L1 within ``angle_tol`` radians, then returns
    a departure point at distance ~eps6 on the far side of the sonic line
    (D > 0), below {G=0} and above {F=0}.

    All continuations beyond P6 leave tangent to L1, but they split into a
    family that meets {F=0} (and proceeds to the origin) and a family that
    escapes through {G=0}; the separatrix between them is itself tangent
    to L1, so a departure point on the exact L1 ray can land on either
    side.  The default departure direction is therefore the angular
    bisector of L1 and the {F=0} tangent at P6, which for small eps6 is
    strictly below the separatrix and selects a continuation that crosses
    {F=0} just right of P6.  The small gap from the arrival point through
    P6 to the departure point is bridged by the linearization limits
    collected in the returned crossing record.

    ``slope_override`` and ``normal_offset`` displace the departure (used
    by the fan sweep that exhibits the multiplicity of continuations).
    """
    pts = critical_points(params)
    p6 = pts["P6"]
    if not p6.present:
        raise TrajectoryError("cannot cross at P6: point absent")
    linearize(p6, params)
    classify(p6, params, strict=True)
    if p6.cls != "node":
        raise TrajectoryError(f"P6 is not a node (class={p6.cls}); no primary slope")

    d_arr = math.hypot(arrival.V - p6.V, arrival.C - p6.C)
    arrival_angle = math.atan2(p6.C - arrival.C, p6.V - arrival.V)
    primary_angle = math.atan2(p6.L1, 1.0)
    angle_err = abs(arrival_angle - primary_angle)
    secondary_err = abs(arrival_angle - math.atan2(p6.L2, 1.0))
    if angle_err > angle_tol:
        which = "secondary slope L2" if secondary_err < angle_err else "no characteristic slope"
        raise TrajectoryError(
            f"wrong arrival slope at P6: direction off L1 by {angle_err:.3e} rad "
            f"(matches {which})"
        )

    if slope_override is not None:
        slope = slope_override
    else:
        f_tangent = -p6.F_V / p6.F_C
        slope = math.tan(0.5 * (math.atan(p6.L1) + math.atan(f_tangent)))
    h = math.hypot(1.0, slope)
    Vd = p6.V + eps6 * 1.0 + normal_offset * eps6 * (-slope / h)
    Cd = p6.C + eps6 * slope + normal_offset * eps6 * (1.0 / h)
    departure = PhasePoint(Vd, Cd)
    d_dep = math.hypot(Vd - p6.V, Cd - p6.C)

    return P6Crossing(departure=departure, p6=p6, arrival_angle_error=angle_err,
                      slope=slope, d_arrival=d_arr, d_departure=d_dep,
                      rates_arrival=_p6_gap_limits(params, p6, p6.L1),
                      rates_departure=_p6_gap_limits(params, p6, slope))


@dataclass(frozen=True)
class GammaOptions:
    """Tunable offsets and tolerances for the trajectory construction.

    The departure offset eps6 trades locality against reproducibility:
    trajectories spread apart when leaving the node, so integration error
    picked up deep inside the nodal zone is amplified downstream.  1e-4
    keeps the collapse limits stable to ~1e-9 under tolerance changes
    (the crossing gap itself is integrated numerically, so accuracy does
    not suffer).
    """

    eps: float = 1e-6          # P2 start offset in W
    delta6: float = 1e-5       # P6 arrival radius
    eps6: float = 1e-4         # P6 departure offset beyond the node
    delta1: float = 1e-6       # P1 termination radius
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = 0.05
    resample: int = 700        # added samples per segment beyond solver steps
    departure_slope: Optional[float] = None
    departure_normal_offset: float = 0.0
    check_conditions: bool = True


@dataclass
class GammaResult:
    """The constructed trajectory with recovered similarity coordinate.

    ``segment`` is 0 on the interface-to-node leg (P2 -> P6) and 1 on the
    node-to-origin leg (P6 -> P1).  ``R`` is populated by the
    reconstruction module; ``log_R_ode`` carries the transport-integrated
    log-density (defined up to an additive constant), which provides an
    independent check of the closed-form density.
    """

    params: Params
    options: GammaOptions
    x: np.ndarray
    V: np.ndarray
    C: np.ndarray
    log_R_ode: np.ndarray
    segment: np.ndarray
    x0: float
    x6: float
    nu: float
    omega: float
    ell: float
    events: List[Dict[str, float]]
    route: str
    crossing: P6Crossing
    R: Optional[np.ndarray] = None

    @property
    def W(self) -> np.ndarray:
        return 1.0 + self.V

    @property
    def Z(self) -> np.ndarray:
        return self.C * self.C

    def field_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return fields(self.V, self.C, self.params)

    def summary(self) -> Dict[str, object]:
        return {
            "x0": self.x0, "x6": self.x6, "nu": self.nu, "omega": self.omega,
            "ell": self.ell, "route": self.route, "samples": int(len(self.x)),
            "events": self.events,
        }


def _resample_leg(run: PhaseRun, n_extra: int, refine: str) -> np.ndarray:
    """Merged s-grid for a leg: solver steps plus geometric refinement."""
    s_end = run.s[-1]
    if s_end <= 0.0 or n_extra <= 0:
        return run.s
    if refine == "start":
        extra = np.geomspace(s_end * 1e-9, s_end, n_extra)
    elif refine == "end":
        extra = s_end - np.geomspace(s_end * 1e-9, s_end, n_extra)
    else:
        extra = np.linspace(0.0, s_end, n_extra)
    grid = np.unique(np.concatenate([run.s, extra, np.linspace(0.0, s_end, n_extra // 2)]))
    return grid[(grid >= 0.0) & (grid <= s_end)]


def _eval_leg(run: PhaseRun, grid: np.ndarray):
    y = run.sol(grid)
    return y[0], y[1], y[2], y[3]


def _collapse_limits(run: PhaseRun) -> Tuple[float, float]:
    """nu = lim V/x and omega = lim C/x by extrapolation toward x = 0.

    Samples the dense output at fixed |x| levels 2^k |x_end| (found by
    inverting the carried log|x| state), then removes the leading
    corrections with the basis [1, x, x log|x|].  The log term is present
    generically at a star point (equal characteristic values); anchoring
    the levels to the endpoint keeps the result reproducible under
    tolerance changes.
    """
    from scipy.optimize import brentq

    s_lo, s_hi = run.s[0], run.s[-1]
    y_end = float(run.log_x[-1])
    levels = []
    for k in range(9):
        y_target = y_end + k * math.log(2.0)
        if y_target >= float(run.log_x[0]):
            break
        if k == 0:
            levels.append(s_hi)
            continue
        s_k = brentq(lambda s: float(run.sol(s)[2]) - y_target, s_lo, s_hi,
                     xtol=1e-13)
        levels.append(s_k)
    states = np.array([run.sol(s) for s in levels])
    x = -np.exp(states[:, 2])
    scale = np.max(np.abs(x))
    t = x / scale
    A = np.column_stack([np.ones_like(t), t, t * np.log(np.abs(x))])
    nu = float(np.linalg.lstsq(A, states[:, 0] / x, rcond=None)[0][0])
    omega = float(np.linalg.lstsq(A, states[:, 1] / x, rcond=None)[0][0])
    return nu, omega


def build_gamma(params: Params, options: Optional[GammaOptions] = None) -> GammaResult:
    """Construct the full trajectory from the interface to the origin.

    Chains: start at P2 (offset eps) -> integrate to the P6 ball ->
    cross the sonic line along the primary slope -> integrate through the
    {F=0} crossing (P0) and down to the P1 ball -> recover the collapse
    limits nu, omega.  The similarity coordinate is carried throughout,
    gauge-fixed to x0 = -1 at the interface.

    Raises :class:`TrajectoryError` when the admissibility conditions fail
    (unless options.check_conditions is off) or when any leg stops for the
    wrong reason.
    """
    opts = options or GammaOptions()
    if opts.check_conditions:
        report = full_condition_report(params)
        if not conditions_pass(report):
            failed = [c.name for c in report if c.passed is not True]
            raise TrajectoryError(
                f"admissibility conditions not satisfied: {', '.join(failed)}"
            )

    start = start_at_P2(params, opts.eps)
    run1 = integrate_phase(start.point, params, "p6",
                           log_x0=start.log_x, log_R0=0.0,
                           p6_radius=opts.delta6, rtol=opts.rtol, atol=opts.atol,
                           max_step=opts.max_step)
    if run1.stop_reason != "p6":
        raise TrajectoryError(f"interface leg did not reach P6: {run1.stop_reason}")

    arrival = PhasePoint(float(run1.V[-1]), float(run1.C[-1]))
    crossing = cross_P6(arrival, params, opts.eps6,
                        slope_override=opts.departure_slope,
                        normal_offset=opts.departure_normal_offset)
    dep = crossing.departure

    log_x_arr = float(run1.log_x[-1])
    log_R_arr = float(run1.log_R[-1])

    # bridge the crossing gap: integrate both sides down to a small inner
    # radius around P6 and close the remaining core with the linearization
    # limits along the incoming direction (both half-arcs are tangent to
    # L1 at that scale)
    r_in = max(1e-9, 1e-4 * opts.delta6)
    _, dy_in, dlr_in = _refine_to_node(arrival, params, -1.0, crossing.p6,
                                       r_in, True, opts.rtol, opts.atol)
    _, dy_out, dlr_out = _refine_to_node(dep, params, 1.0, crossing.p6,
                                         r_in, False, opts.rtol, opts.atol)
    rate_x, rate_R = crossing.rates_arrival
    log_x6 = log_x_arr + dy_in + rate_x * r_in
    log_x_dep = log_x6 + rate_x * r_in + dy_out
    log_R_dep = log_R_arr + dlr_in + 2.0 * rate_R * r_in + dlr_out
    D_dep, G_dep, F_dep = fields(dep.V, dep.C, params)
    if not (D_dep > 0.0):
        raise TrajectoryError("departure point is not beyond the sonic line (D <= 0)")

    run2 = integrate_phase(dep, params, "p1",
                           log_x0=log_x_dep, log_R0=log_R_dep,
                           p1_radius=opts.delta1, rtol=opts.rtol, atol=opts.atol,
                           max_step=opts.max_step, record_nullcline_events=True)
    if run2.stop_reason != "p1":
        raise TrajectoryError(f"did not reach P1: terminal leg stopped with "
                              f"{run2.stop_reason}")

    grid1 = _resample_leg(run1, opts.resample, "start")
    grid2 = _resample_leg(run2, opts.resample, "end")
    V1, C1, lx1, lr1 = _eval_leg(run1, grid1)
    V2, C2, lx2, lr2 = _eval_leg(run2, grid2)

    x = -np.exp(np.concatenate([lx1, lx2]))
    V = np.concatenate([V1, V2])
    C = np.concatenate([C1, C2])
    log_R = np.concatenate([lr1, lr2])
    segment = np.concatenate([np.zeros(len(V1), dtype=int), np.ones(len(V2), dtype=int)])

    nu, omega = _collapse_limits(run2)
    ell = omega / nu if nu != 0.0 else math.inf

    f_crossings = [e for e in run2.events if e["name"] == "f_zero_crossing"]
    g_crossings = [e for e in run2.events if e["name"] == "g_zero_crossing"]
    route = "second_quadrant"
    if f_crossings and any(e["s"] > f_crossings[0]["s"] for e in g_crossings):
        route = "crossed_G"

    events: List[Dict[str, object]] = [
        {"name": "start", "x": float(x[0]), "V": float(V[0]), "C": float(C[0])},
        {"name": "p6_arrival", "x": -math.exp(log_x_arr),
         "V": arrival.V, "C": arrival.C,
         "angle_error": crossing.arrival_angle_error},
        {"name": "p6", "x": -math.exp(log_x6), "V": crossing.p6.V, "C": crossing.p6.C},
        {"name": "departure", "x": -math.exp(log_x_dep), "V": dep.V, "C": dep.C},
    ]
    for e in f_crossings[:1]:
        events.append({"name": "p0_f_zero", "x": e["x"], "V": e["V"], "C": e["C"]})
    for e in g_crossings:
        events.append({"name": "g_zero", "x": e["x"], "V": e["V"], "C": e["C"]})
    events.append({"name": "p1_arrival", "x": float(x[-1]),
                   "V": float(V[-1]), "C": float(C[-1])})

    return GammaResult(
        params=params, options=opts, x=x, V=V, C=C, log_R_ode=log_R,
        segment=segment, x0=-1.0, x6=-math.exp(log_x6), nu=nu, omega=omega,
        ell=ell, events=events, route=route, crossing=crossing,
    )
