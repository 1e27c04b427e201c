"""Problem parameters, derived constants, and the algebraic admissibility
conditions (A)-(F) for self-similar collapsing-cavity Euler flows.

A flow of the family handled by this package is fixed by four numbers:

* ``n``      -- spatial dimension (2 or 3),
* ``gamma``  -- adiabatic index of the ideal polytropic gas (> 1),
* ``lambda`` -- similarity exponent (> 1 in the collapse regime),
* ``kappa``  -- density scaling exponent.

The similarity ansatz is

    x = t / r**lambda
    rho(t, r) = r**kappa * R(x)
    u(t, r)   = -(r**(1 - lambda) / lambda) * V(x) / x
    c(t, r)   = -(r**(1 - lambda) / lambda) * C(x) / x

with t < 0 before collapse.  Everything downstream (phase-plane analysis,
trajectory construction, field reconstruction) works with the derived
constants computed once here.

Admissibility of a parameter quadruple is governed by ten strict
inequalities labelled (A)-(J).  Conditions (A)-(F) are closed forms in the
parameters and are evaluated here; (G)-(J) concern the critical points of
the reduced phase-plane system and live in :mod:`cavityflow.phaseplane`.
Every check reports the numeric values of its inequality members together
with a signed margin (distance to the boundary), so near-degenerate
parameter choices are visible.  Comparisons are strict with zero
tolerance: a borderline value fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Union

Number = Union[int, float, str, Fraction]

__all__ = [
    "ParameterError",
    "GasParams",
    "SimilarityParams",
    "DerivedConstants",
    "Params",
    "ConditionCheck",
    "derive",
    "check_algebraic_conditions",
    "parse_number",
    "PRESETS",
]


class ParameterError(ValueError):
    """Raised for parameter values outside the model's domain."""


#: Bundled parameter sets, all of which satisfy conditions (A)-(J).
#: Values are kept as exact fraction/decimal strings and converted to
#: binary floating point exactly once, so they reproduce their printed
#: digits.
PRESETS: Dict[str, Dict[str, str]] = {
    "case1": {"n": "3", "gamma": "5/3", "lambda": "1.25", "kappa": "-0.01"},
    "case2": {"n": "3", "gamma": "7/5", "lambda": "1.16", "kappa": "-0.01"},
    "case3": {"n": "3", "gamma": "3", "lambda": "1.6", "kappa": "0.9"},
    "case4": {"n": "2", "gamma": "5/3", "lambda": "1.09", "kappa": "-0.01"},
    "case5": {"n": "2", "gamma": "7/5", "lambda": "1.06", "kappa": "-0.01"},
    "case6": {"n": "2", "gamma": "3", "lambda": "1.28", "kappa": "-0.01"},
}


def parse_number(value: Number) -> float:
    """Convert a decimal or fraction string ('1.25', '5/3') to float.

    Strings go through :class:`fractions.Fraction`, so the conversion to
    binary floating point happens in a single rounding step.
    """
    if isinstance(value, str):
        try:
            return float(Fraction(value))
        except (ValueError, ZeroDivisionError) as exc:
            raise ParameterError(f"cannot parse number {value!r}") from exc
    if isinstance(value, Fraction):
        return float(value)
    return float(value)


@dataclass(frozen=True)
class GasParams:
    """Gas description: spatial dimension and adiabatic index."""

    n: int
    gamma: float

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ParameterError(f"spatial dimension must be 2 or 3, got {self.n}")
        if not (math.isfinite(self.gamma) and self.gamma > 1.0):
            raise ParameterError(f"adiabatic index must satisfy gamma > 1, got {self.gamma}")


@dataclass(frozen=True)
class SimilarityParams:
    """Similarity exponents: lambda (time scaling) and kappa (density).

    lambda > 1 is the standing assumption for collapsing cavities (mu > 0);
    it is *reported* through condition (A) rather than enforced here, so
    that boundary cases such as lambda = 1 can still be examined.
    """

    lam: float
    kappa: float

    def __post_init__(self):
        if not math.isfinite(self.lam):
            raise ParameterError(f"similarity exponent must be finite, got {self.lam}")
        if not math.isfinite(self.kappa):
            raise ParameterError(f"density exponent must be finite, got {self.kappa}")


@dataclass(frozen=True)
class DerivedConstants:
    """All constants derived from (n, gamma, lambda, kappa).

    mu          = lambda - 1
    alpha       = (mu + kappa (gamma-1)/2) / gamma
    q           = (kappa (gamma-1) + 2 mu) / (kappa + n)    adiabatic exponent
    sigma       = gamma mu / (kappa + n)                    interface slope in (W, Z)
    kappa_bar   = -2 mu / (gamma - 1)                       isentropic density exponent
    k1, k2, k3  coefficients of the sound-speed nullcline cubic; k1 - k2 + k3 = lambda
    V_star      = (kappa - 2 mu) / (n gamma)                vertical asymptote of {G=0}
    W_star      = 1 + V_star
    m           = n - 1
    K           = m (n (gamma-1) + 2)                       Wronskian prefactor at P6
    a_vertical  leading exponent of Z vs W along a vertical interface approach
    b_vertical  corresponding pressure exponent; identically 0, which is what
                rules the vertical approach out on physical grounds
    """

    mu: float
    alpha: float
    q: float
    sigma: float
    kappa_bar: float
    k1: float
    k2: float
    k3: float
    V_star: float
    W_star: float
    m: int
    K: float
    a_vertical: float
    b_vertical: float


def derive(gas: GasParams, sim: SimilarityParams) -> DerivedConstants:
    """Evaluate every derived constant by direct evaluation of its closed form.

    Raises :class:`ParameterError` when kappa + n == 0, which would divide
    by zero in q, sigma, and related constants.
    """
    n, g = gas.n, gas.gamma
    lam, kap = sim.lam, sim.kappa
    if kap + n == 0.0:
        raise ParameterError("kappa + n must be nonzero")

    mu = lam - 1.0
    alpha = (mu + kap * (g - 1.0) / 2.0) / g
    q = (kap * (g - 1.0) + 2.0 * mu) / (kap + n)
    sigma = g * mu / (kap + n)
    kappa_bar = -2.0 * mu / (g - 1.0)
    k1 = 1.0 + (n - 1) * (g - 1.0) / 2.0
    k2 = ((n - 1) * (g - 1.0) + (g - 3.0) * mu) / 2.0
    k3 = (g - 1.0) * mu / 2.0
    V_star = (kap - 2.0 * mu) / (n * g)
    W_star = 1.0 + V_star
    m = n - 1
    K = m * (n * (g - 1.0) + 2.0)

    denom_a = 2.0 * mu - kap - n * g
    a_vertical = (2.0 * mu + kap * (g - 1.0)) / denom_a if denom_a != 0.0 else math.nan
    denom_b = g - 1.0 - q
    if denom_b != 0.0 and math.isfinite(a_vertical):
        b_vertical = (a_vertical * g + (1.0 - a_vertical) * q) / denom_b
    else:
        b_vertical = math.nan

    return DerivedConstants(
        mu=mu, alpha=alpha, q=q, sigma=sigma, kappa_bar=kappa_bar,
        k1=k1, k2=k2, k3=k3, V_star=V_star, W_star=W_star,
        m=m, K=K, a_vertical=a_vertical, b_vertical=b_vertical,
    )


@dataclass(frozen=True)
class Params:
    """Bundle of gas parameters, similarity parameters, and derived constants."""

    gas: GasParams
    sim: SimilarityParams
    derived: DerivedConstants

    @classmethod
    def make(cls, n: Number, gamma: Number, lam: Number, kappa: Number) -> "Params":
        gas = GasParams(n=int(parse_number(n)), gamma=parse_number(gamma))
        sim = SimilarityParams(lam=parse_number(lam), kappa=parse_number(kappa))
        return cls(gas=gas, sim=sim, derived=derive(gas, sim))

    @classmethod
    def from_preset(cls, name: str) -> "Params":
        try:
            spec = PRESETS[name]
        except KeyError:
            raise ParameterError(
                f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
            ) from None
        return cls.from_dict(spec)

    @classmethod
    def from_dict(cls, data: Dict[str, Number]) -> "Params":
        """Build from the JSON parameter schema {n, gamma, lambda, kappa}."""
        try:
            return cls.make(data["n"], data["gamma"], data["lambda"], data["kappa"])
        except KeyError as exc:
            raise ParameterError(f"missing parameter field {exc.args[0]!r}") from None

    def to_dict(self) -> Dict[str, float]:
        return {"n": self.gas.n, "gamma": self.gas.gamma,
                "lambda": self.sim.lam, "kappa": self.sim.kappa}

    # shorthand accessors used throughout the numerics
    @property
    def n(self) -> int:
        return self.gas.n

    @property
    def gamma(self) -> float:
        return self.gas.gamma

    @property
    def lam(self) -> float:
        return self.sim.lam

    @property
    def kappa(self) -> float:
        return self.sim.kappa


@dataclass
class ConditionCheck:
    """Outcome of one admissibility condition.

    ``passed`` is None when the condition cannot be evaluated (e.g. the
    critical point it refers to is absent); ``margin`` is the signed
    distance to the inequality boundary, positive iff the condition holds.
    ``values`` records the numeric members of each inequality.
    """

    name: str
    passed: Optional[bool]
    margin: Optional[float]
    values: Dict[str, float] = field(default_factory=dict)
    note: str = ""

    def to_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "passed": self.passed,
            "margin": self.margin,
            "values": dict(self.values),
            "note": self.note,
        }


def _check(name: str, margin: float, values: Dict[str, float], note: str = "") -> ConditionCheck:
    return ConditionCheck(name=name, passed=bool(margin > 0.0), margin=margin,
                          values=values, note=note)


def check_algebraic_conditions(params: Params) -> List[ConditionCheck]:
    """Evaluate conditions (A)-(F), the purely algebraic part of admissibility.

    (A) 0 < mu < (kappa + n)/2           local integrability of mass/momentum/energy
    (B) mu < n (gamma - 1)/2             pressure vanishes at the interface
    (C) kappa > kappa_bar (alpha > 0)    strictly non-isentropic side of the family
    (D) k2 > 0
    (E) phi(W+) > 0 with W+ = k2/(3 k1)  {F=0} is the graph of an increasing function
    (F) kappa < 2 mu, (1-mu)/3 < W*, psi(W*) > 0
                                         both {G=0} branches increase in V
    """
    n, g = params.gas.n, params.gas.gamma
    kap = params.sim.kappa
    d = params.derived
    mu, alpha = d.mu, d.alpha
    k1, k2, k3 = d.k1, d.k2, d.k3
    W_star = d.W_star

    checks: List[ConditionCheck] = []

    upper_a = (kap + n) / 2.0
    checks.append(_check("A", min(mu, upper_a - mu),
                         {"mu": mu, "half_kappa_plus_n": upper_a}))

    bound_b = n * (g - 1.0) / 2.0
    checks.append(_check("B", bound_b - mu,
                         {"mu": mu, "half_n_gamma_minus_one": bound_b}))

    checks.append(_check("C", kap - d.kappa_bar,
                         {"kappa": kap, "kappa_bar": d.kappa_bar, "alpha": alpha}))

    checks.append(_check("D", k2, {"k2": k2}))

    # phi(W) = 2 k1 W^3 + (3 alpha k1 - k2) W^2 - 2 alpha k2 W + alpha k3 controls
    # the slope of the {F=0} nullcline; its local minimum on W > 0 sits at W+.
    w_plus = k2 / (3.0 * k1)
    phi_min = -k2**3 / (27.0 * k1**2) - alpha * k2**2 / (3.0 * k1) + alpha * k3
    checks.append(_check("E", phi_min, {"W_plus": w_plus, "phi_at_W_plus": phi_min}))

    psi_at_w_star = W_star * (-W_star**2 + (1.0 - mu) * W_star + mu)
    f_members = {
        "two_mu_minus_kappa": 2.0 * mu - kap,
        "W_star_minus_third": W_star - (1.0 - mu) / 3.0,
        "psi_at_W_star": psi_at_w_star,
    }
    checks.append(_check("F", min(f_members.values()), f_members))

    return checks
