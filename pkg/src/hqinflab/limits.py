"""Deterministic fluid surfaces and Gaussian variance/covariance surfaces.

Everything here is a one-dimensional quadrature against the arrival measure
dabar(s) = rate(s) ds (or a closed form where the service law admits one):

  fluid residual count   qr(t,y)  = int_0^t F^c(t+y-s) dabar(s)
  fluid elapsed count    qe(t,y)  = int_{t-y}^t F^c(t-s) dabar(s)
  variance (Brownian-family arrival limit, variability c_a^2)
      var_qr(t,y) = (c_a^2 - 1) int_0^t F^c(t+y-s)^2 dabar(s) + qr(t,y)

plus the three-way variance split by noise source (arrival, service sampling,
multinomial splitting of arrivals across the atomic service components),
whose sum must reproduce var_qr exactly; the workload variance triple
integral; the mean-square increment of the service-noise component; and the
initial-condition/total-count limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arrivals import ArrivalModel
from .fields import Grid, TwoParamField
from .quadrature import integrate
from .service import MixtureDecomposition, ServiceModel

__all__ = [
    "InitialLimits",
    "LimitInputs",
    "VarianceComponents",
    "fluid_qr",
    "fluid_qe",
    "fluid_qt",
    "fluid_age_residual",
    "fluid_workload",
    "fluid_workload_steady",
    "fluid_totals",
    "var_qr",
    "var_qe",
    "var_components",
    "var_workload",
    "cov_x2_increment",
    "initial_and_total_limits",
    "surface",
]

QUAD_TOL = 1e-8
TAIL_EPS = 1e-6     # truncation level for F^c in workload integrals
STEADY_HORIZON_MEANS = 40.0   # "t -> infinity" evaluated at 40 mean services


@dataclass(frozen=True)
class InitialLimits:
    """Initial-condition block: scaled count level, its CLT variance, and the
    residual-time c.d.f. of the customers present at time zero."""
    qbar_it: float
    var_qit: float
    residual: ServiceModel

    def __post_init__(self):
        if self.qbar_it < 0 or self.var_qit < 0:
            raise ValueError("initial level and variance must be nonnegative")


@dataclass(frozen=True)
class VarianceComponents:
    arrival: float      # carried by the arrival limit (Ito isometry)
    service: float      # service sampling noise (continuous part)
    splitting: float    # multinomial splitting across service components

    @property
    def total(self) -> float:
        return self.arrival + self.service + self.splitting


class LimitInputs:
    """Bundle of everything the limit formulas consume."""

    def __init__(self, abar, rate, ca2: float, service: ServiceModel,
                 standard_rate: float | None = None,
                 init: InitialLimits | None = None):
        self.abar = abar
        self.rate = rate
        self.ca2 = float(ca2)
        if self.ca2 < 0:
            raise ValueError("c_a^2 must be nonnegative")
        self.service = service
        self.standard_rate = standard_rate
        self.init = init
        self.decomposition: MixtureDecomposition = service.decompose()

    @classmethod
    def from_models(cls, arrival: ArrivalModel, service: ServiceModel,
                    init: InitialLimits | None = None) -> "LimitInputs":
        return cls(abar=arrival.cumulative_rate,
                   rate=arrival.rate,
                   ca2=arrival.ca2,
                   service=service,
                   standard_rate=arrival.constant_rate,
                   init=init)

    def _cuts(self, shift: float):
        """Quadrature breakpoints in s for integrands built from F(shift - s)."""
        return [shift - b for b in self.service.breakpoints()]

    def int_abar(self, g, lo: float, hi: float, cuts=()) -> float:
        """int_lo^hi g(s) dabar(s)."""
        if hi <= lo:
            return 0.0
        return integrate(lambda s: g(s) * float(self.rate(s)), lo, hi,
                         tol=QUAD_TOL, breakpoints=cuts)

    def abar_at(self, t: float) -> float:
        return float(self.abar(max(t, 0.0)))

    def require_standard(self, what: str) -> float:
        if self.standard_rate is None:
            raise ValueError(f"{what} requires the standard case abar(t) = lambda*t")
        return self.standard_rate

    def require_finite_mean(self, what: str) -> float:
        m = self.service.moments().mean
        if not math.isfinite(m):
            raise ValueError(f"{what} requires a finite service mean")
        return m


# -- fluid limits ------------------------------------------------------------

def fluid_qr(inputs: LimitInputs, t: float, y: float) -> float:
    """qr(t, y) = int_0^t F^c(t+y-s) dabar(s)."""
    if t < 0 or y < 0:
        raise ValueError("t and y must be nonnegative")
    sf = inputs.service.sf
    return inputs.int_abar(lambda s: float(sf(t + y - s)), 0.0, t,
                           inputs._cuts(t + y))


def fluid_qe(inputs: LimitInputs, t: float, y: float) -> float:
    """qe(t, y) = int_{t-y}^t F^c(t-s) dabar(s) for 0 <= y <= t."""
    if y < 0 or t < 0:
        raise ValueError("t and y must be nonnegative")
    if y > t:
        raise ValueError(f"fluid_qe needs y <= t, got y={y} > t={t}")
    sf = inputs.service.sf
    return inputs.int_abar(lambda s: float(sf(t - s)), t - y, t, inputs._cuts(t))


def fluid_qt(inputs: LimitInputs, t: float) -> float:
    return fluid_qr(inputs, t, 0.0)


def fluid_age_residual(inputs: LimitInputs, t: float, y: float) -> tuple[float, float]:
    """(limiting age c.d.f., limiting residual complement) at (t, y)."""
    qt = fluid_qt(inputs, t)
    if qt <= 0.0:
        raise ValueError("limiting age/residual distribution undefined: q^t(t) = 0")
    return fluid_qe(inputs, t, min(y, t)) / qt, fluid_qr(inputs, t, y) / qt


def fluid_workload(inputs: LimitInputs, t: float, y: float) -> float:
    """w^r(t,y) = (lambda/mu) int_0^t F_e^c(y+s) ds  (standard case).

    F_e^c(z) = 1 - mu * int_0^z F^c, so the integrand is
    mean - integrated_sf(y+s), exact per service kind.
    """
    lam = inputs.require_standard("fluid workload")
    mean = inputs.require_finite_mean("fluid workload")
    svc = inputs.service
    if t <= 0:
        return 0.0
    return lam * integrate(lambda s: mean - svc.integrated_sf(y + s), 0.0, t,
                           tol=QUAD_TOL,
                           breakpoints=[b - y for b in svc.breakpoints()])


def fluid_workload_steady(inputs: LimitInputs) -> tuple[float, float]:
    """(quadrature value of w^t at a long horizon, analytic limit
    lambda (c_s^2 + 1) / (2 mu^2)).  Needs a finite second moment."""
    lam = inputs.require_standard("steady-state workload")
    mom = inputs.service.moments()
    if not math.isfinite(mom.mean) or not math.isfinite(mom.second_moment):
        raise ValueError("steady-state workload requires a finite second moment")
    mu = 1.0 / mom.mean
    horizon = STEADY_HORIZON_MEANS / mu
    analytic = lam * (mom.scv + 1.0) / (2.0 * mu * mu)
    return fluid_workload(inputs, horizon, 0.0), analytic


def fluid_totals(inputs: LimitInputs, t: float) -> tuple[float, float, float]:
    """(w^t, input i, completed c) at time t in the standard case."""
    lam = inputs.require_standard("fluid totals")
    mean = inputs.require_finite_mean("fluid totals")
    wt = fluid_workload(inputs, t, 0.0)
    i_t = lam * t * mean
    return wt, i_t, i_t - wt


# -- Gaussian variances -------------------------------------------------------

def var_qr(inputs: LimitInputs, t: float, y: float) -> float:
    """(c_a^2 - 1) int_0^t F^c(t+y-s)^2 dabar(s) + qr(t, y)."""
    sf = inputs.service.sf
    extra = 0.0
    if inputs.ca2 != 1.0:
        extra = (inputs.ca2 - 1.0) * inputs.int_abar(
            lambda s: float(sf(t + y - s)) ** 2, 0.0, t, inputs._cuts(t + y))
    return extra + fluid_qr(inputs, t, y)


def var_qe(inputs: LimitInputs, t: float, y: float) -> float:
    if y > t:
        raise ValueError(f"var_qe needs y <= t, got y={y} > t={t}")
    sf = inputs.service.sf
    extra = 0.0
    if inputs.ca2 != 1.0:
        extra = (inputs.ca2 - 1.0) * inputs.int_abar(
            lambda s: float(sf(t - s)) ** 2, t - y, t, inputs._cuts(t))
    return extra + fluid_qe(inputs, t, y)


def var_components(inputs: LimitInputs, t: float, y: float) -> VarianceComponents:
    """Variance of the residual-count limit split by noise source.

    arrival   = c_a^2 int_0^t F^c(t+y-s)^2 dabar(s)
    service   = p_c int_0^t F_c(t+y-s) F_c^c(t+y-s) dabar(s)
    splitting = p_d p_c int F_c^c(.)^2 dabar
                + sum_i C_ii (abar(t) - abar(t - (x_i - y)^+))
                + 2 sum_{i<j} C_ij (abar(t) - abar(t - (x_i ^ x_j - y)^+))
                + 2 sum_i C_ci int_{t-(x_i-y)^+}^t F_c^c(t+y-s) dabar(s)
    with the multinomial covariances C_ii = p_d p_i (1 - p_d p_i),
    C_ij = -p_d^2 p_i p_j, C_ci = -p_c p_d p_i.  The sum of the three parts
    equals var_qr identically (the additivity identity is the ground truth
    for this split).
    """
    dec = inputs.decomposition
    sf = inputs.service.sf
    arrival = inputs.ca2 * inputs.int_abar(
        lambda s: float(sf(t + y - s)) ** 2, 0.0, t, inputs._cuts(t + y)) if t > 0 else 0.0

    p_c, p_d = dec.p_c, dec.p_d
    cont = dec.continuous_part
    service = 0.0
    if p_c > 0.0 and t > 0:
        csf = cont.sf
        ccd = cont.cdf
        cuts = [t + y - b for b in cont.breakpoints()]
        service = p_c * inputs.int_abar(
            lambda s: float(ccd(t + y - s)) * float(csf(t + y - s)), 0.0, t, cuts)

    splitting = 0.0
    if p_d > 0.0 and t > 0:
        atoms = dec.atoms
        abar_t = inputs.abar_at(t)
        starts = [max(t - max(loc - y, 0.0), 0.0) for loc, _ in atoms]
        if p_c > 0.0:
            csf = cont.sf
            cuts = [t + y - b for b in cont.breakpoints()]
            splitting += p_d * p_c * inputs.int_abar(
                lambda s: float(csf(t + y - s)) ** 2, 0.0, t, cuts)
            for (loc, mass), s0 in zip(atoms, starts):
                c_ci = -p_c * p_d * mass
                splitting += 2.0 * c_ci * inputs.int_abar(
                    lambda s: float(csf(t + y - s)), s0, t, cuts)
        for i, ((loc_i, m_i), s_i) in enumerate(zip(atoms, starts)):
            pdi = p_d * m_i
            splitting += pdi * (1.0 - pdi) * (abar_t - inputs.abar_at(s_i))
            for (loc_j, m_j), s_j in zip(atoms[i + 1:], starts[i + 1:]):
                later = max(s_i, s_j)
                splitting += 2.0 * (-p_d * p_d * m_i * m_j) * (abar_t - inputs.abar_at(later))
    return VarianceComponents(arrival=arrival, service=service, splitting=splitting)


def var_workload(inputs: LimitInputs, t: float, y: float,
                 panel_points: int = 24) -> float:
    """Variance of the remaining-workload limit:

    c_a^2 iint_{[y,xmax]^2} int_0^t F^c(t+x-s) F^c(t+z-s) dabar(s) dx dz
        + iint int_0^t F(t + x^z - s) F^c(t + xvz - s) dabar(s) dx dz,

    with the outer square truncated at xmax where F^c(xmax) < 1e-6 and the
    symmetric integrand folded onto x <= z.
    """
    inputs.require_standard("workload variance")
    inputs.require_finite_mean("workload variance")
    if t <= 0:
        return 0.0
    svc = inputs.service
    xmax = max(svc.sf_quantile(TAIL_EPS), y)
    if xmax <= y:
        return 0.0
    sf = svc.sf
    cd = svc.cdf

    def inner(x: float, z: float) -> float:
        lo_arg, hi_arg = (x, z) if x <= z else (z, x)
        cuts = inputs._cuts(t + lo_arg) + inputs._cuts(t + hi_arg)
        return inputs.int_abar(
            lambda s: (inputs.ca2 * float(sf(t + x - s)) * float(sf(t + z - s))
                       + float(cd(t + lo_arg - s)) * float(sf(t + hi_arg - s))),
            0.0, t, cuts)

    # Gauss-Legendre panels over the (x, z) square, x <= z half doubled
    nodes, weights = np.polynomial.legendre.leggauss(panel_points)
    xs = y + 0.5 * (nodes + 1.0) * (xmax - y)
    ws = 0.5 * (xmax - y) * weights
    total = 0.0
    for a, wa in zip(xs, ws):
        for b, wb in zip(xs, ws):
            if b < a:
                continue
            val = inner(a, b)
            total += wa * wb * val * (1.0 if b == a else 2.0)
    return total


def cov_x2_increment(inputs: LimitInputs, t: float, y: float,
                     t2: float, y2: float) -> float:
    """Mean-square increment of the service-noise component between (t, y)
    and (t2, y2) with t <= t2, y <= y2:

    int_0^t (F_c(t2+y2-u) - F_c(t+y-u)) (1 + F_c(t+y-u) - F_c(t2+y2-u))
    dabar^c(u),   dabar^c = p_c dabar.
    """
    if t2 < t or y2 < y:
        raise ValueError("increment ordering requires t <= t2 and y <= y2")
    dec = inputs.decomposition
    if dec.p_c == 0.0 or t <= 0:
        return 0.0
    cont = dec.continuous_part
    cd = cont.cdf
    cuts = inputs._cuts(t + y) + inputs._cuts(t2 + y2)

    def g(u: float) -> float:
        diff = float(cd(t2 + y2 - u)) - float(cd(t + y - u))
        return diff * (1.0 - diff)

    return dec.p_c * inputs.int_abar(g, 0.0, t, cuts)


def initial_and_total_limits(inputs: LimitInputs, t: float, y: float
                             ) -> tuple[float, float, float, float]:
    """(qir(y), Var Qir-hat(y), qTr(t,y), Var QTr-hat(t,y)).

    qir(y) = F_i^c(y) q^{i,t};  the CLT variance adds the Brownian-bridge
    term q^{i,t} F_i(y) F_i^c(y) to the count-noise term
    F_i^c(y)^2 Var(Q^{i,t}-hat).  Totals add the independent new-arrival
    surface with the initial part evaluated at t + y.
    """
    if inputs.init is None:
        raise ValueError("no initial-condition block configured")
    init = inputs.init
    fi = float(init.residual.cdf(y))
    fic = 1.0 - fi
    qir = fic * init.qbar_it
    var_qir = fic * fic * init.var_qit + init.qbar_it * fi * fic
    fi_shift = float(init.residual.cdf(t + y))
    fic_shift = 1.0 - fi_shift
    qtr = fic_shift * init.qbar_it + fluid_qr(inputs, t, y)
    var_qtr = (fic_shift * fic_shift * init.var_qit
               + init.qbar_it * fi_shift * fic_shift
               + var_qr(inputs, t, y))
    return qir, var_qir, qtr, var_qtr


# -- grid evaluation -----------------------------------------------------------

def surface(inputs: LimitInputs, grid: Grid, which: str) -> TwoParamField:
    """Evaluate a named limit surface on a grid.

    ``fluid_qe``/``var_qe`` clamp y to t (matching the prelimit convention
    that the elapsed-count field is constant in y beyond y = t).
    """
    fns = {
        "fluid_qr": lambda t, y: fluid_qr(inputs, t, y),
        "fluid_qe": lambda t, y: fluid_qe(inputs, t, min(y, t)),
        "fluid_wr": lambda t, y: fluid_workload(inputs, t, y),
        "var_qr": lambda t, y: var_qr(inputs, t, y),
        "var_qe": lambda t, y: var_qe(inputs, t, min(y, t)),
        "var_w": lambda t, y: var_workload(inputs, t, y),
        "var_total": lambda t, y: initial_and_total_limits(inputs, t, y)[3],
        "fluid_total": lambda t, y: initial_and_total_limits(inputs, t, y)[2],
    }
    if which not in fns:
        raise ValueError(f"unknown surface {which!r} (known: {sorted(fns)})")
    fn = fns[which]
    vals = np.array([[fn(float(t), float(y)) for y in grid.y] for t in grid.t])
    return TwoParamField(grid, vals, which)
