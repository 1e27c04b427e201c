"""Phase-plane structure of the reduced similarity system.

Radial self-similar Euler profiles trace trajectories of the reduced ODE

    dC/dV = F(V, C) / G(V, C)

in the (V, C) plane, where

    D(V, C) = (1 + V)^2 - C^2
    G(V, C) = n C^2 (V - V*) - V (1 + V) (lambda + V)
    F(V, C) = C [C^2 (1 + alpha/(1+V)) - k1 (1+V)^2 + k2 (1+V) - k3].

D controls the direction of traversal of the underlying non-autonomous
system and degenerates on the sonic lines C = +-(1 + V).  On those lines
F and G are proportional, F = -+ ((gamma-1)/2) G, so a trajectory can only
cross them at a triple point where F = G = D = 0 simultaneously.

This module evaluates the fields, the two nullclines {F=0} and {G=0}, the
critical points P1..P8 with their linearizations and classification, and
the admissibility conditions (G)-(J).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .params import ConditionCheck, Params, check_algebraic_conditions

__all__ = [
    "PhasePlaneError", "SonicPoleError", "NullclineDomainError",
    "DegenerateLinearizationError", "ClassificationError",
    "PhasePoint", "RhsValues", "CriticalPoint",
    "eval_rhs", "fields", "nullcline_F", "nullcline_G",
    "critical_points", "linearize", "classify",
    "check_conditions_G_to_J", "full_condition_report", "sample_nullclines",
]


class PhasePlaneError(Exception):
    """Base class for phase-plane evaluation errors."""


class SonicPoleError(PhasePlaneError):
    """F requested exactly at V = -1 with C != 0, where it has a pole."""


class NullclineDomainError(PhasePlaneError):
    """Nullcline evaluated outside its branch domain or with a negative radicand."""


class DegenerateLinearizationError(PhasePlaneError):
    """Linearization undefined: partials vanish or do not exist."""


class ClassificationError(PhasePlaneError):
    """Classification impossible (nonpositive discriminant or coalescent point)."""


@dataclass(frozen=True)
class PhasePoint:
    """A point in the (V, C) phase plane, with (W, Z) = (1+V, C^2) views."""

    V: float
    C: float

    @property
    def W(self) -> float:
        return 1.0 + self.V

    @property
    def Z(self) -> float:
        return self.C * self.C


@dataclass(frozen=True)
class RhsValues:
    """The three scalar fields (D, G, F) at a phase point."""

    D: float
    G: float
    F: float


def fields(V, C, params: Params):
    """Vectorized evaluation of (D, G, F).

    Assumes 1 + V != 0 everywhere (the interface pole is handled only by the
    scalar :func:`eval_rhs`).  Accepts floats or numpy arrays.
    """
    n = params.gas.n
    lam = params.sim.lam
    d = params.derived
    W = 1.0 + np.asarray(V, dtype=float)
    C = np.asarray(C, dtype=float)
    Z = C * C
    D = W * W - Z
    G = n * Z * (W - d.W_star) - (W - 1.0) * W * (lam - 1.0 + W)
    F = C * (Z * (W + d.alpha) / W - d.k1 * W * W + d.k2 * W - d.k3)
    return D, G, F


def eval_rhs(p: PhasePoint, params: Params) -> RhsValues:
    """Evaluate (D, G, F) at a single point, handling the interface pole.

    At V = -1 the F formula carries a 1/(1+V) factor.  The value is defined
    there only by continuous extension along C -> 0 paths: F(-1, 0) = 0.
    For C != 0 the limit is direction dependent (unless alpha = 0), so such
    queries raise :class:`SonicPoleError` rather than return a limit.
    """
    V, C = p.V, p.C
    W = 1.0 + V
    Z = C * C
    d = params.derived
    n, lam = params.gas.n, params.sim.lam
    D = W * W - Z
    G = n * Z * (V - d.V_star) - V * W * (lam + V)
    if W == 0.0:
        if C == 0.0:
            F = 0.0
        elif d.alpha == 0.0:
            # isentropic degeneration: the pole coefficient vanishes
            F = C * (Z - d.k3)
        else:
            raise SonicPoleError(
                "F has a pole at V = -1 with C != 0 (alpha != 0); "
                "evaluate along C -> 0 paths instead"
            )
    else:
        F = C * (Z * (W + d.alpha) / W - d.k1 * W * W + d.k2 * W - d.k3)
    return RhsValues(D=float(D), G=float(G), F=float(F))


def nullcline_F(V, params: Params):
    """C-value of the sound-speed nullcline {F=0}, i.e. C_F(V) for V > -1.

    In (W, Z) variables the branch is Z = f(W) = W (k1 W^2 - k2 W + k3)/(W + alpha),
    a single increasing graph on W > 0 when conditions (A)-(E) hold.
    Raises :class:`NullclineDomainError` for V < -1 or a negative radicand.
    """
    d = params.derived
    W = 1.0 + np.asarray(V, dtype=float)
    if np.any(W < 0.0):
        raise NullclineDomainError("nullcline {F=0} is defined for V >= -1 only")
    denom = W + d.alpha
    if np.any(denom <= 0.0):
        raise NullclineDomainError("W + alpha <= 0: condition (C) violated")
    rad = W * (d.k1 * W * W - d.k2 * W + d.k3) / denom
    if np.any(rad < 0.0):
        raise NullclineDomainError("negative radicand on {F=0}: conditions (A)-(E) violated")
    out = np.sqrt(rad)
    return float(out) if np.isscalar(V) or np.ndim(V) == 0 else out


def nullcline_G(V, params: Params):
    """C-value of the flow nullcline {G=0} on its upper-half-plane branches.

    C_G(V)^2 = V (1+V) (lambda+V) / (n (V - V*)), defined for
    V in [-1, V*) and [0, inf); there is a vertical asymptote at V = V*.
    Raises :class:`NullclineDomainError` between the branches, V in [V*, 0).
    """
    n, lam = params.gas.n, params.sim.lam
    V_star = params.derived.V_star
    Varr = np.asarray(V, dtype=float)
    if np.any(Varr < -1.0):
        raise NullclineDomainError("nullcline {G=0} branch domain starts at V = -1")
    if np.any((Varr >= V_star) & (Varr < 0.0)):
        raise NullclineDomainError(
            f"V in [V*, 0) = [{V_star:.6g}, 0) is outside the {{G=0}} branch domain"
        )
    rad = Varr * (1.0 + Varr) * (lam + Varr) / (n * (Varr - V_star))
    # on the branch domain the radicand is nonnegative; clip the exact
    # zeros at V = -1, 0 that roundoff can push to -0.0
    out = np.sqrt(np.maximum(rad, 0.0))
    return float(out) if np.isscalar(V) or np.ndim(V) == 0 else out


@dataclass
class CriticalPoint:
    """A critical point of the reduced ODE with its local data.

    Partials and classification data are filled in by :func:`linearize`
    and :func:`classify`; ``cls`` is one of star, node, saddle, degenerate,
    unclassified.
    """

    id: str
    present: bool
    V: float
    C: float
    F_V: Optional[float] = None
    F_C: Optional[float] = None
    G_V: Optional[float] = None
    G_C: Optional[float] = None
    wronskian: Optional[float] = None
    discriminant: Optional[float] = None
    E1: Optional[float] = None
    E2: Optional[float] = None
    L1: Optional[float] = None
    L2: Optional[float] = None
    cls: str = "unclassified"
    note: str = ""

    @property
    def location(self) -> PhasePoint:
        return PhasePoint(self.V, self.C)

    def to_dict(self) -> Dict[str, object]:
        return {
            "id": self.id, "present": self.present, "V": self.V, "C": self.C,
            "F_V": self.F_V, "F_C": self.F_C, "G_V": self.G_V, "G_C": self.G_C,
            "wronskian": self.wronskian, "discriminant": self.discriminant,
            "E1": self.E1, "E2": self.E2, "L1": self.L1, "L2": self.L2,
            "class": self.cls, "note": self.note,
        }


def _v_axis_points(params: Params) -> List[CriticalPoint]:
    lam = params.sim.lam
    return [
        CriticalPoint(id="P1", present=True, V=0.0, C=0.0),
        CriticalPoint(id="P2", present=True, V=-1.0, C=0.0),
        CriticalPoint(id="P3", present=True, V=-lam, C=0.0),
    ]


def _sonic_quadratic(params: Params) -> Tuple[float, float, float]:
    """Linear coefficient, radicand, and root product of the V+- quadratic."""
    g = params.gas.gamma
    kap = params.sim.kappa
    mu = params.derived.mu
    m = params.derived.m
    b = (g - 2.0) * mu + kap - m * g
    rad = ((g - 2.0) ** 2 * mu * mu
           - 2.0 * (g * m * (g + 2.0) - kap * (g - 2.0)) * mu
           + (g * m + kap) ** 2)
    product = (b * b - rad) / (2.0 * m * g) ** 2
    return b, rad, product


def _cg_squared(V: float, params: Params) -> float:
    n, lam = params.gas.n, params.sim.lam
    denom = n * (V - params.derived.V_star)
    if denom == 0.0:
        return math.nan  # on the asymptote; treated as not present
    return V * (1.0 + V) * (lam + V) / denom


def critical_points(params: Params) -> Dict[str, CriticalPoint]:
    """Locate P1, P2, P3 (always present) and P4, P6, P8 (presence flagged).

    P1 = (0,0), P2 = (-1,0), P3 = (-lambda,0) come from the factorization
    G(V, 0) = -V (1+V) (lambda+V).  The upper-half-plane points solve
    {F=0, G=0}: the cubic's real root gives V4 = -2 lambda/(2 + n(gamma-1));
    the companion quadratic gives V-+ (evaluated with the product-form
    companion root to avoid cancellation).  P6 = (V-, 1+V-) and
    P8 = (V+, 1+V+) sit on the sonic line C = 1 + V whenever present.
    """
    n, g = params.gas.n, params.gas.gamma
    lam = params.sim.lam
    m = params.derived.m
    pts = {cp.id: cp for cp in _v_axis_points(params)}

    V4 = -2.0 * lam / (2.0 + n * (g - 1.0))
    cg2_4 = _cg_squared(V4, params)
    pts["P4"] = CriticalPoint(id="P4", present=bool(cg2_4 > 0.0), V=V4,
                              C=math.sqrt(cg2_4) if cg2_4 > 0.0 else math.nan)

    b, rad, product = _sonic_quadratic(params)
    if rad < 0.0:
        pts["P6"] = CriticalPoint(id="P6", present=False, V=math.nan, C=math.nan,
                                  note="radicand negative")
        pts["P8"] = CriticalPoint(id="P8", present=False, V=math.nan, C=math.nan,
                                  note="radicand negative")
        return pts

    s = math.sqrt(rad)
    # companion-root (q-formula) evaluation: take the root with no
    # cancellation directly, recover the other from the product
    if b <= 0.0:
        V_minus = (b - s) / (2.0 * m * g)
        V_plus = product / V_minus if V_minus != 0.0 else (b + s) / (2.0 * m * g)
    else:
        V_plus = (b + s) / (2.0 * m * g)
        V_minus = product / V_plus if V_plus != 0.0 else (b - s) / (2.0 * m * g)

    coalescent = rad == 0.0
    for pid, Vr in (("P6", V_minus), ("P8", V_plus)):
        cg2 = _cg_squared(Vr, params)
        present = bool(cg2 > 0.0)
        cp = CriticalPoint(id=pid, present=present, V=Vr,
                           C=1.0 + Vr if present else math.nan)
        if coalescent:
            cp.note = "coalescent (V- = V+)"
        pts[pid] = cp
    return pts


def _generic_partials(V: float, C: float, params: Params) -> Tuple[float, float, float, float]:
    """Analytic partials of F and G at a point with 1 + V != 0."""
    n, lam = params.gas.n, params.sim.lam
    d = params.derived
    W = 1.0 + V
    Z = C * C
    bracket = Z * (W + d.alpha) / W - d.k1 * W * W + d.k2 * W - d.k3
    F_C = bracket + 2.0 * Z * (W + d.alpha) / W
    F_V = C * (-d.alpha * Z / (W * W) - 2.0 * d.k1 * W + d.k2)
    G_C = 2.0 * n * C * (V - d.V_star)
    G_V = n * Z - (W * (lam + V) + V * (lam + V) + V * W)
    return F_V, F_C, G_V, G_C


def _sonic_partials(V: float, C: float, params: Params) -> Tuple[float, float, float, float]:
    """Simplified partials valid at the sonic-line triple points P6, P8."""
    n, lam = params.gas.n, params.sim.lam
    d = params.derived
    F_C = 2.0 * C * (1.0 + d.alpha + V)
    F_V = C * (d.k2 - d.alpha - 2.0 * d.k1 * (1.0 + V))
    G_C = 2.0 * n * C * (V - d.V_star)
    G_V = C * (n * (1.0 + d.V_star) - 2.0 * V - lam)
    return F_V, F_C, G_V, G_C


def linearize(cp: CriticalPoint, params: Params) -> CriticalPoint:
    """Fill in the partials (F_V, F_C, G_V, G_C) at a present critical point.

    At P6 and P8 the simplified sonic-line forms are used after a
    cross-check against the generic analytic partials (relative 1e-8).
    Raises :class:`DegenerateLinearizationError` at the interface point P2,
    where F is not differentiable, and whenever all four partials vanish.
    """
    if not cp.present:
        raise ValueError(f"cannot linearize absent critical point {cp.id}")
    if 1.0 + cp.V == 0.0:
        # F is not differentiable at the interface point when alpha != 0
        raise DegenerateLinearizationError(
            "linearization undefined at the interface triple point V = -1"
        )

    if cp.id in ("P6", "P8"):
        F_V, F_C, G_V, G_C = _sonic_partials(cp.V, cp.C, params)
        gF_V, gF_C, gG_V, gG_C = _generic_partials(cp.V, cp.C, params)
        for simp, gen in ((F_V, gF_V), (F_C, gF_C), (G_V, gG_V), (G_C, gG_C)):
            scale = max(abs(simp), abs(gen), 1e-300)
            if abs(simp - gen) > 1e-8 * scale:
                raise DegenerateLinearizationError(
                    f"sonic-line partials disagree with generic partials at {cp.id}: "
                    f"{simp!r} vs {gen!r}"
                )
    else:
        F_V, F_C, G_V, G_C = _generic_partials(cp.V, cp.C, params)

    if F_V == 0.0 and F_C == 0.0 and G_V == 0.0 and G_C == 0.0:
        raise DegenerateLinearizationError(f"all partials vanish at {cp.id}")

    cp.F_V, cp.F_C, cp.G_V, cp.G_C = F_V, F_C, G_V, G_C
    return cp


def classify(cp: CriticalPoint, params: Params, strict: bool = False) -> CriticalPoint:
    """Classify a critical point from its linearization.

    Wronskian  W  = F_C G_V - F_V G_C
    Discriminant R^2 = (F_C - G_V)^2 + 4 F_V G_C = (F_C + G_V)^2 - 4 W
    Slopes     L_{1,2} = (F_C - G_V +- R) / (2 G_C)
    Char. values E_{1,2} = (F_C + G_V +- R) / (2 G_C), signs paired with L,
    indexed so |E1| <= |E2|.  Node iff R^2 > 0 and W > 0; saddle iff
    R^2 > 0 and W < 0.

    P1 is a star point (the linearized slope field is dC/dV = C/V, every
    direction characteristic) and is classified explicitly; P2 is the
    degenerate interface triple point.  With ``strict`` a nonpositive
    discriminant raises :class:`ClassificationError` instead of leaving the
    point unclassified.
    """
    if cp.id == "P1":
        lam = params.sim.lam
        cp.F_V, cp.F_C, cp.G_V, cp.G_C = 0.0, -lam, -lam, 0.0
        cp.wronskian = lam * lam
        cp.discriminant = 0.0
        cp.cls = "star"
        cp.note = "proper node: equal characteristic values, every slope characteristic"
        return cp
    if cp.id == "P2":
        cp.cls = "degenerate"
        cp.note = "interface triple point; local structure resolved in (W, Z) variables"
        return cp
    if not cp.present:
        cp.cls = "unclassified"
        return cp
    if "coalescent" in cp.note:
        if strict:
            raise ClassificationError("coalescent critical point: classification refused")
        cp.cls = "degenerate"
        return cp
    if cp.F_V is None:
        linearize(cp, params)

    F_V, F_C, G_V, G_C = cp.F_V, cp.F_C, cp.G_V, cp.G_C
    w = F_C * G_V - F_V * G_C
    r2 = (F_C + G_V) ** 2 - 4.0 * w
    cp.wronskian = w
    cp.discriminant = r2

    if cp.id == "P6":
        # independent product form of the Wronskian through the other
        # sonic-line roots; guards the quadratic root extraction
        pts = critical_points(params)
        V4, V8 = pts["P4"].V, pts["P8"].V
        w_product = params.derived.K * cp.C**2 * (cp.V - V4) * (cp.V - V8)
        if abs(w_product - w) > 1e-8 * max(abs(w), abs(w_product), 1e-300):
            raise ClassificationError(
                f"Wronskian product form disagrees with direct value at P6: "
                f"{w_product!r} vs {w!r}"
            )

    if r2 <= 0.0:
        if strict:
            raise ClassificationError(f"discriminant nonpositive at {cp.id}: R^2 = {r2!r}")
        cp.cls = "degenerate" if r2 == 0.0 else "unclassified"
        cp.note = (cp.note + "; " if cp.note else "") + "nonpositive discriminant"
        return cp

    r = math.sqrt(r2)
    if G_C == 0.0:
        if strict:
            raise ClassificationError(f"G_C = 0 at {cp.id}: slopes unbounded")
        cp.cls = "unclassified"
        cp.note = (cp.note + "; " if cp.note else "") + "G_C = 0"
        return cp

    e_minus = (F_C + G_V - r) / (2.0 * G_C)
    e_plus = (F_C + G_V + r) / (2.0 * G_C)
    l_minus = (F_C - G_V - r) / (2.0 * G_C)
    l_plus = (F_C - G_V + r) / (2.0 * G_C)
    if abs(e_minus) <= abs(e_plus):
        cp.E1, cp.E2, cp.L1, cp.L2 = e_minus, e_plus, l_minus, l_plus
    else:
        cp.E1, cp.E2, cp.L1, cp.L2 = e_plus, e_minus, l_plus, l_minus

    cp.cls = "node" if w > 0.0 else ("saddle" if w < 0.0 else "degenerate")
    return cp


def classified_points(params: Params) -> Dict[str, CriticalPoint]:
    """Critical points with linearization and classification filled in.

    P3 and P8 are reported with location and presence only (their local
    structure plays no role in the construction).
    """
    pts = critical_points(params)
    for pid in ("P1", "P2"):
        classify(pts[pid], params)
    for pid in ("P4", "P6"):
        cp = pts[pid]
        if cp.present:
            linearize(cp, params)
            classify(cp, params)
    return pts


def check_conditions_G_to_J(params: Params) -> List[ConditionCheck]:
    """Evaluate conditions (G)-(J), which concern the sonic-line node P6.

    (G) P6 present: positive radicand and C_G(V-)^2 > 0
    (H) V- < V4 < V+ (P4 between the sonic-line points)
    (I) discriminant R^2 > 0 at P6
    (J) L2 < -F_V/F_C < L1 < -G_V/G_C at P6 (the primary slope, and only it,
        is intermediate to the nullcline slopes)

    (H)-(J) are reported as not evaluable when P6 is absent.
    """
    checks: List[ConditionCheck] = []
    _, rad, _ = _sonic_quadratic(params)
    pts = critical_points(params)
    p6, p8, p4 = pts["P6"], pts["P8"], pts["P4"]

    not_evaluable = [
        ConditionCheck(name=nm, passed=None, margin=None, values={},
                       note="not evaluable: P6 absent")
        for nm in "HIJ"
    ]

    if rad <= 0.0 or not p6.present:
        g_vals = {"radicand": rad}
        if rad > 0.0:
            g_vals["C_G_squared_at_V_minus"] = _cg_squared(p6.V, params)
            margin = min(rad, g_vals["C_G_squared_at_V_minus"])
        else:
            margin = rad
        checks.append(ConditionCheck(name="G", passed=False, margin=margin, values=g_vals))
        checks.extend(not_evaluable)
        return checks

    cg2_minus = _cg_squared(p6.V, params)
    checks.append(_check_gj("G", min(rad, cg2_minus),
                            {"radicand": rad, "C_G_squared_at_V_minus": cg2_minus}))

    h_vals = {"V_minus": p6.V, "V4": p4.V, "V_plus": p8.V}
    checks.append(_check_gj("H", min(p4.V - p6.V, p8.V - p4.V), h_vals))

    linearize(p6, params)
    classify(p6, params)
    r2 = p6.discriminant
    checks.append(_check_gj("I", r2, {"discriminant_at_P6": r2}))

    if p6.L1 is None:
        checks.append(ConditionCheck(name="J", passed=None, margin=None, values={},
                                     note="not evaluable: P6 slopes undefined"))
        return checks

    slope_f = -p6.F_V / p6.F_C
    slope_g = -p6.G_V / p6.G_C
    j_vals = {"L2": p6.L2, "F_nullcline_slope": slope_f,
              "L1": p6.L1, "G_nullcline_slope": slope_g}
    margin = min(slope_f - p6.L2, p6.L1 - slope_f, slope_g - p6.L1)
    checks.append(_check_gj("J", margin, j_vals))
    return checks


def _check_gj(name: str, margin: float, values: Dict[str, float]) -> ConditionCheck:
    return ConditionCheck(name=name, passed=bool(margin > 0.0), margin=margin, values=values)


def full_condition_report(params: Params) -> List[ConditionCheck]:
    """All ten admissibility conditions (A)-(J) in order."""
    return check_algebraic_conditions(params) + check_conditions_G_to_J(params)


def conditions_pass(checks: List[ConditionCheck]) -> bool:
    return all(c.passed is True for c in checks)


def sample_nullclines(params: Params, v_min: float, v_max: float,
                      num: int = 400) -> Dict[str, Tuple[np.ndarray, np.ndarray]]:
    """Sample the nullcline branches as polylines over [v_min, v_max].

    Returns a dict with keys 'F', 'G_left', 'G_right'; each value is a
    (V, C) array pair clipped to the branch domain.  The {G=0} left branch
    stops short of the vertical asymptote at V*.
    """
    d = params.derived
    out: Dict[str, Tuple[np.ndarray, np.ndarray]] = {}

    lo = max(v_min, -1.0)
    if lo <= v_max:
        Vf = np.linspace(lo, v_max, num)
        out["F"] = (Vf, nullcline_F(Vf, params))

    asympt_gap = max(1e-9, 1e-6 * abs(d.V_star + 1.0))
    hi_left = min(v_max, d.V_star - asympt_gap)
    if lo <= hi_left:
        Vgl = np.linspace(lo, hi_left, num)
        out["G_left"] = (Vgl, nullcline_G(Vgl, params))

    lo_right = max(v_min, 0.0)
    if lo_right <= v_max:
        Vgr = np.linspace(lo_right, v_max, num)
        out["G_right"] = (Vgr, nullcline_G(Vgr, params))
    return out
