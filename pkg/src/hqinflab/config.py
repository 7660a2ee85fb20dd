"""Experiment configuration: YAML parsing with strict validation.

A config is a nested mapping with sections ``arrival``, ``service``,
optional ``init``, ``grid``, experiment selection and knobs.  Unknown keys
are rejected with the offending path so typos cannot silently change an
experiment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .arrivals import ArrivalModel, arrival_from_spec
from .fields import Grid
from .limits import InitialLimits
from .service import ServiceModel, service_from_spec
from .simulate import CountLaw, InitialConditions

__all__ = ["ExperimentConfig", "parse_config", "config_from_dict",
           "DEFAULT_TOLERANCES", "EXPERIMENTS"]

EXPERIMENTS = (
    "fwlln",
    "fclt_variance",
    "age_distribution",
    "poisson_property",
    "limit_path_validation",
    "markov_check",
    "workload",
)

DEFAULT_TOLERANCES = {
    "fluid_abs": 0.05,          # |mean LLN field - fluid surface|
    "workload_abs": 0.07,       # |mean workload - fluid workload|
    "variance_rel": 0.10,       # sample variance vs analytic variance
    "variance_rel_loose": 0.15, # secondary variance targets
    "dispersion_abs": 0.10,     # |var/mean - 1| for the Poisson property
    "identity_abs": 1e-9,       # exact per-replication identities
    "analytic_abs": 1e-6,       # quadrature vs closed form
    "ks_abs": 0.05,             # sup-norm distance of empirical age c.d.f.
    "age_pass_fraction": 0.90,  # fraction of seeds that must pass
    "corr_abs": 0.06,           # independence proxies
    "skew_abs": 0.10,           # marginal normality
    "kurt_abs": 0.20,
    "poisson_collapse_abs": 1e-8,
    "markov_residual_grid_mult": 5.0,
}

_TOP_KEYS = {"arrival", "service", "init", "grid", "n_list", "replications",
             "k", "master_seed", "experiment", "tolerances", "markov",
             "workload", "increment_probe"}


@dataclass(frozen=True)
class ExperimentConfig:
    arrival: ArrivalModel
    service: ServiceModel
    grid: Grid
    experiment: str
    n_list: tuple[int, ...]
    replications: int
    k: int
    master_seed: int
    tolerances: dict
    init_sim: InitialConditions | None
    init_limits: InitialLimits | None
    markov_probes: tuple[tuple[float, float, float], ...]
    workload: bool
    increment_probe: tuple[float, float, float, float] | None
    echo: dict = field(repr=False, default_factory=dict)

    @property
    def horizon(self) -> float:
        return float(self.grid.t[-1])


def _fail(where: str, msg: str):
    raise ValueError(f"config error at {where}: {msg}")


def _parse_init(spec: dict):
    allowed = {"count", "residual"}
    extra = set(spec) - allowed
    if extra:
        _fail("init", f"unknown keys {sorted(extra)}")
    if "count" not in spec or "residual" not in spec:
        _fail("init", "needs both 'count' and 'residual'")
    cspec = spec["count"]
    if not isinstance(cspec, dict) or set(cspec) - {"kind", "level"}:
        _fail("init.count", "expected {kind: fixed|poisson, level: <float>}")
    law = CountLaw(kind=cspec.get("kind", "fixed"), level=float(cspec.get("level", 0.0)))
    residual = service_from_spec(spec["residual"], "init.residual")
    sim = InitialConditions(count=law, residual=residual)
    limits = InitialLimits(qbar_it=law.level, var_qit=law.clt_variance, residual=residual)
    return sim, limits


def config_from_dict(raw: dict, source: str = "<dict>") -> ExperimentConfig:
    if not isinstance(raw, dict):
        _fail(source, "top level must be a mapping")
    extra = set(raw) - _TOP_KEYS
    if extra:
        _fail(source, f"unknown top-level keys {sorted(extra)}")
    for req in ("arrival", "service", "grid", "experiment"):
        if req not in raw:
            _fail(source, f"missing required section {req!r}")

    arrival = arrival_from_spec(raw["arrival"])
    service = service_from_spec(raw["service"])

    gspec = raw["grid"]
    if not isinstance(gspec, dict) or set(gspec) - {"t", "y"}:
        _fail("grid", "expected {t: [...], y: [...]}")
    t_pts = list(gspec.get("t", ()))
    y_pts = list(gspec.get("y", ()))
    for name, pts in (("t", t_pts), ("y", y_pts)):
        if len(set(pts)) != len(pts):
            _fail(f"grid.{name}", "duplicate grid points")
    try:
        grid = Grid(sorted(float(v) for v in t_pts), sorted(float(v) for v in y_pts))
    except ValueError as exc:
        _fail("grid", str(exc))

    experiment = raw["experiment"]
    if experiment not in EXPERIMENTS:
        _fail("experiment", f"unknown experiment {experiment!r} (known: {list(EXPERIMENTS)})")

    n_list = tuple(int(n) for n in raw.get("n_list", (400,)))
    if not n_list or any(n < 1 for n in n_list):
        _fail("n_list", "must be a nonempty list of integers >= 1")
    replications = int(raw.get("replications", 200))
    if replications < 1:
        _fail("replications", "must be >= 1")
    k = int(raw.get("k", 200))
    if k < 1:
        _fail("k", "must be >= 1")
    master_seed = int(raw.get("master_seed", 20100709))

    tolerances = dict(DEFAULT_TOLERANCES)
    for key, val in (raw.get("tolerances") or {}).items():
        if key not in DEFAULT_TOLERANCES:
            _fail("tolerances", f"unknown tolerance {key!r}")
        tolerances[key] = float(val)

    init_sim = init_limits = None
    if raw.get("init") is not None:
        init_sim, init_limits = _parse_init(raw["init"])

    probes = []
    for probe in (raw.get("markov") or ()):
        if not isinstance(probe, (list, tuple)) or len(probe) != 3:
            _fail("markov", "each probe must be [t1, t2, y]")
        t1, t2, y = (float(v) for v in probe)
        if not (0.0 <= t1 <= t2 <= grid.t[-1]) or y < 0:
            _fail("markov", f"probe ({t1}, {t2}, {y}) out of range")
        probes.append((t1, t2, y))

    inc = raw.get("increment_probe")
    if inc is not None:
        if not isinstance(inc, (list, tuple)) or len(inc) != 4:
            _fail("increment_probe", "expected [t, y, t2, y2]")
        inc = tuple(float(v) for v in inc)

    return ExperimentConfig(
        arrival=arrival, service=service, grid=grid, experiment=experiment,
        n_list=n_list, replications=replications, k=k, master_seed=master_seed,
        tolerances=tolerances, init_sim=init_sim, init_limits=init_limits,
        markov_probes=tuple(probes), workload=bool(raw.get("workload", False)),
        increment_probe=inc, echo=raw)


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        at = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise ValueError(f"malformed config {path}{at}: {exc}") from exc
    return config_from_dict(raw, source=str(path))
