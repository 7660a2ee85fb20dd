"""Arrival-stream models for the n-th system.

Each model carries the base cumulative rate abar(t) (arrivals per unit of the
scale parameter n) and the asymptotic variability c_a^2 of the stream, and can
generate one realization of the n-th system's arrival epochs.  Rate functions
are restricted to a declarative catalog (constant, linear, sinusoidal) so the
cumulative rate and its inverse stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .service import ServiceModel, service_from_spec

__all__ = [
    "RateFunction",
    "ArrivalModel",
    "PoissonArrivals",
    "NHPPArrivals",
    "RenewalArrivals",
    "TimeChangedRenewalArrivals",
    "arrival_from_spec",
]


@dataclass(frozen=True)
class RateFunction:
    """lambda(t) = a + b*t (linear) or a + b*sin(c*t + d) (sinusoidal).

    Constant rates are the linear form with b = 0.  The rate must stay
    nonnegative on [0, inf); for the sinusoidal form that means a >= |b|.
    """
    form: str
    a: float
    b: float = 0.0
    c: float = 1.0
    d: float = 0.0

    def __post_init__(self):
        if self.form not in ("constant", "linear", "sinusoidal"):
            raise ValueError(f"unknown rate-function form {self.form!r}")
        if self.form == "constant" and self.a <= 0:
            raise ValueError("rate must be positive")
        if self.form == "linear" and (self.a < 0 or self.b < 0 or self.a + self.b == 0):
            raise ValueError("linear rate must be nonnegative and nondegenerate")
        if self.form == "sinusoidal" and (self.a <= 0 or self.a < abs(self.b)):
            raise ValueError("sinusoidal rate requires a >= |b| > 0 to stay nonnegative")

    def rate(self, t):
        t = np.asarray(t, dtype=float)
        if self.form == "constant":
            out = np.full_like(t, self.a)
        elif self.form == "linear":
            out = self.a + self.b * t
        else:
            out = self.a + self.b * np.sin(self.c * t + self.d)
        return float(out) if out.ndim == 0 else out

    def cumulative(self, t):
        t = np.asarray(t, dtype=float)
        if self.form == "constant":
            out = self.a * t
        elif self.form == "linear":
            out = self.a * t + 0.5 * self.b * t * t
        else:
            out = self.a * t + (self.b / self.c) * (np.cos(self.d) - np.cos(self.c * t + self.d))
        return float(out) if out.ndim == 0 else out

    @property
    def constant_rate(self) -> float | None:
        if self.form == "constant" or (self.form == "linear" and self.b == 0.0):
            return self.a
        if self.form == "sinusoidal" and self.b == 0.0:
            return self.a
        return None

    def invert_cumulative(self, levels: np.ndarray, horizon: float) -> np.ndarray:
        """Solve cumulative(t) = level for each level in [0, cumulative(horizon)]."""
        const = self.constant_rate
        if const is not None:
            return levels / const
        lo = np.zeros_like(levels)
        hi = np.full_like(levels, horizon)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            below = self.cumulative(mid) < levels
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)


def _strictify(epochs: np.ndarray) -> np.ndarray:
    """Perturb exact ties so epochs are strictly increasing (jitter < 1e-12)."""
    if len(epochs) < 2:
        return epochs
    out = epochs.copy()
    for i in range(1, len(out)):
        if out[i] <= out[i - 1]:
            out[i] = out[i - 1] + 1e-13 * (1.0 + out[i - 1])
    return out


class ArrivalModel:
    """Base class: cumulative base rate, asymptotic parameters, generation."""

    ca2: float

    def cumulative_rate(self, t) -> float:
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0):
            raise ValueError("cumulative rate undefined for t < 0")
        return self._cumulative(t)

    def _cumulative(self, t):
        raise NotImplementedError

    def rate(self, t):
        raise NotImplementedError

    def asymptotic_params(self):
        """(constant rate or rate function, c_a^2)."""
        raise NotImplementedError

    @property
    def constant_rate(self) -> float | None:
        """lambda when abar(t) = lambda * t, else None."""
        return None

    def generate(self, n: int, horizon: float, rng: np.random.Generator) -> np.ndarray:
        if n < 1:
            raise ValueError("scale n must be >= 1")
        if horizon <= 0:
            raise ValueError("horizon must be positive")
        return _strictify(self._generate(int(n), float(horizon), rng))

    def _generate(self, n, horizon, rng):
        raise NotImplementedError


def _unit_poisson_levels(total: float, rng: np.random.Generator) -> np.ndarray:
    """Cumulative jump levels of a unit-rate Poisson stream on [0, total]."""
    levels = []
    pos = 0.0
    batch = max(int(total + 6.0 * math.sqrt(total + 1.0)), 16)
    while pos <= total:
        gaps = rng.exponential(1.0, size=batch)
        cum = pos + np.cumsum(gaps)
        levels.append(cum)
        pos = cum[-1]
    levels = np.concatenate(levels)
    return levels[levels <= total]


@dataclass(frozen=True)
class PoissonArrivals(ArrivalModel):
    rate_per_scale: float

    def __post_init__(self):
        if self.rate_per_scale <= 0:
            raise ValueError("rate must be positive")
        object.__setattr__(self, "ca2", 1.0)

    def _cumulative(self, t):
        out = self.rate_per_scale * np.asarray(t, dtype=float)
        return float(out) if out.ndim == 0 else out

    def rate(self, t):
        return self.rate_per_scale

    def asymptotic_params(self):
        return self.rate_per_scale, 1.0

    @property
    def constant_rate(self):
        return self.rate_per_scale

    def _generate(self, n, horizon, rng):
        levels = _unit_poisson_levels(n * self.rate_per_scale * horizon, rng)
        return levels / (n * self.rate_per_scale)


@dataclass(frozen=True)
class NHPPArrivals(ArrivalModel):
    rate_fn: RateFunction

    def __post_init__(self):
        object.__setattr__(self, "ca2", 1.0)

    def _cumulative(self, t):
        return self.rate_fn.cumulative(t)

    def rate(self, t):
        return self.rate_fn.rate(t)

    def asymptotic_params(self):
        return self.rate_fn, 1.0

    @property
    def constant_rate(self):
        return self.rate_fn.constant_rate

    def _generate(self, n, horizon, rng):
        # Inversion: unit-rate Poisson levels mapped through (n * abar)^(-1).
        levels = _unit_poisson_levels(n * self.rate_fn.cumulative(horizon), rng)
        return self.rate_fn.invert_cumulative(levels / n, horizon)


@dataclass(frozen=True)
class RenewalArrivals(ArrivalModel):
    interarrival: ServiceModel

    def __post_init__(self):
        m = self.interarrival.moments()
        if not math.isfinite(m.mean) or m.mean <= 0:
            raise ValueError("interarrival law needs a positive finite mean")
        object.__setattr__(self, "ca2", m.scv)

    @property
    def _lambda(self):
        return 1.0 / self.interarrival.moments().mean

    def _cumulative(self, t):
        t = np.asarray(t, dtype=float)
        out = self._lambda * t
        return float(out) if out.ndim == 0 else out

    def rate(self, t):
        return self._lambda

    def asymptotic_params(self):
        return self._lambda, self.ca2

    @property
    def constant_rate(self):
        return self._lambda

    def _renewal_epochs(self, total_time: float, rng) -> np.ndarray:
        """Partial sums of raw interarrivals up to total_time."""
        mean = self.interarrival.moments().mean
        epochs = []
        pos = 0.0
        batch = max(int(total_time / mean * 1.1 + 6.0 * math.sqrt(total_time / mean + 1.0)), 16)
        while pos <= total_time:
            draws = np.asarray(self.interarrival.sample(rng, size=batch), dtype=float)
            cum = pos + np.cumsum(draws)
            epochs.append(cum)
            pos = cum[-1]
        epochs = np.concatenate(epochs)
        return epochs[epochs <= total_time]

    def _generate(self, n, horizon, rng):
        # interarrivals shrunk by 1/n: partial sums S_k / n up to horizon
        return self._renewal_epochs(n * horizon, rng) / n


@dataclass(frozen=True)
class TimeChangedRenewalArrivals(ArrivalModel):
    """A_n(t) = R(n * abar(t)) for a rate-1 stationary renewal stream R."""
    interarrival: ServiceModel
    rate_fn: RateFunction

    def __post_init__(self):
        m = self.interarrival.moments()
        if not math.isfinite(m.mean) or m.mean <= 0:
            raise ValueError("interarrival law needs a positive finite mean")
        object.__setattr__(self, "ca2", m.scv)

    def _cumulative(self, t):
        return self.rate_fn.cumulative(t)

    def rate(self, t):
        return self.rate_fn.rate(t)

    def asymptotic_params(self):
        return self.rate_fn, self.ca2

    @property
    def constant_rate(self):
        return self.rate_fn.constant_rate

    def _generate(self, n, horizon, rng):
        mean = self.interarrival.moments().mean
        total = n * self.rate_fn.cumulative(horizon)
        epochs = []
        pos = 0.0
        batch = max(int(total * 1.1 + 6.0 * math.sqrt(total + 1.0)), 16)
        while pos <= total:
            # normalized to mean 1: the driving stream must have rate 1
            draws = np.asarray(self.interarrival.sample(rng, size=batch), dtype=float) / mean
            cum = pos + np.cumsum(draws)
            epochs.append(cum)
            pos = cum[-1]
        levels = np.concatenate(epochs)
        levels = levels[levels <= total]
        return self.rate_fn.invert_cumulative(levels / n, horizon)


def _rate_fn_from_spec(spec: dict, where: str) -> RateFunction:
    if not isinstance(spec, dict) or "form" not in spec:
        raise ValueError(f"{where}: expected a mapping with a 'form' key")
    allowed = {"form", "a", "b", "c", "d"}
    extra = set(spec) - allowed
    if extra:
        raise ValueError(f"{where}: unknown keys {sorted(extra)}")
    kwargs = {k: float(v) for k, v in spec.items() if k != "form"}
    return RateFunction(form=spec["form"], **kwargs)


def arrival_from_spec(spec: dict, where: str = "arrival") -> ArrivalModel:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError(f"{where}: expected a mapping with a 'kind' key")
    kind = spec["kind"]
    keys = {
        "poisson": {"rate"},
        "nhpp": {"rate_fn"},
        "renewal": {"interarrival"},
        "time_changed_renewal": {"interarrival", "rate_fn"},
    }
    if kind not in keys:
        raise ValueError(f"{where}: unknown arrival kind {kind!r} (known: {sorted(keys)})")
    extra = set(spec) - keys[kind] - {"kind"}
    if extra:
        raise ValueError(f"{where}: unknown keys {sorted(extra)} for kind {kind!r}")
    missing = keys[kind] - set(spec)
    if missing:
        raise ValueError(f"{where}: missing keys {sorted(missing)} for kind {kind!r}")
    if kind == "poisson":
        rate = float(spec["rate"])
        if rate <= 0:
            raise ValueError(f"{where}: rate must be positive")
        return PoissonArrivals(rate_per_scale=rate)
    if kind == "nhpp":
        return NHPPArrivals(rate_fn=_rate_fn_from_spec(spec["rate_fn"], where + ".rate_fn"))
    if kind == "renewal":
        return RenewalArrivals(interarrival=service_from_spec(spec["interarrival"], where + ".interarrival"))
    return TimeChangedRenewalArrivals(
        interarrival=service_from_spec(spec["interarrival"], where + ".interarrival"),
        rate_fn=_rate_fn_from_spec(spec["rate_fn"], where + ".rate_fn"))
