"""Registry of named ODE families for the CLI and the acceptance suite.

Each entry couples a numeric ODE with (when available) its closed-form
dependence maps, the true right-hand side for reconstruction comparisons,
and the sampling domain on which the family is well-conditioned enough for
tight residual thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np

from .closed_forms import (
    COS_SIN_BASIS,
    ConicParams,
    angelesco_residual,
    conic_F,
    conic_S,
    cos_sin_S,
    free_fall_F,
    free_fall_S,
    linear_F,
)
from .functional_laws import (
    DependenceEvaluator,
    EvalDomain,
    LawReport,
    SampleSpec,
    Splitmix64,
    _Aggregator,
    _jsonable,
    _SAMPLE_ERRORS,
    evaluator_from_ode,
    evaluator_from_scalar,
)
from .bvp_shooting import DEFAULT_SHOOTING, ShootingConfig
from .ode_core import SecondOrderOde

__all__ = [
    "CatalogEntry",
    "CATALOG",
    "catalog_names",
    "get_entry",
    "resolve_params",
    "make_ode",
    "closed_evaluator",
    "numeric_evaluator",
    "rhs_true",
    "check_angelesco",
]


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    defaults: Mapping[str, float]
    make_ode: Callable[[Mapping[str, float]], SecondOrderOde]
    domain: Callable[[Mapping[str, float]], EvalDomain]
    closed_f: Optional[Callable] = None  # params -> (tau,alpha,beta,a,b)->x
    closed_s: Optional[Callable] = None  # params -> (tau,alpha,beta,a,v)->x
    rhs_true: Optional[Callable] = None  # params -> (tau,x,v)->xdd


def _free_fall_ode(p):
    g = p["g"]

    def rhs1(tau: float, x: float, v: float) -> float:
        return g

    return SecondOrderOde.from_scalar(rhs1, label="free_fall")


def _conic_ode(p):
    k, g = p["k"], p["g"]

    def rhs1(tau: float, x: float, v: float) -> float:
        return k ** 2 * x + g

    return SecondOrderOde.from_scalar(rhs1, label="conic")


def _linear_zero_ode(p):
    def rhs1(tau: float, x: float, v: float) -> float:
        return 0.0

    return SecondOrderOde.from_scalar(rhs1, label="linear_zero")


def _oscillator_ode(p):
    w2 = p["omega"] ** 2

    def rhs1(tau: float, x: float, v: float) -> float:
        return -w2 * x

    return SecondOrderOde.from_scalar(rhs1, label="oscillator")


def _cos_sin_ode(p):
    def rhs1(tau: float, x: float, v: float) -> float:
        return -x

    return SecondOrderOde.from_scalar(rhs1, label="linear_basis")


def _conic_domain(p) -> EvalDomain:
    # Hyperbolic solutions grow like exp(|k| L); shrink the box as |k| grows
    # so closed-vs-rebased comparisons stay far below the acceptance
    # thresholds, and keep endpoints separated enough that the interpolation
    # weights stay O(1).
    k = abs(p["k"])
    if k == 0.0:
        return EvalDomain(min_separation=0.25)
    half_width = min(max(1.5 / k, 0.75), 2.0)
    box = (-half_width, half_width)
    return EvalDomain(tau_range=box, alpha_beta_range=box,
                      min_separation=0.25)


def _oscillator_domain(p) -> EvalDomain:
    omega = p["omega"]
    if omega <= 0:
        raise ValueError("omega must be > 0")
    return EvalDomain(max_interval=3.0 / omega)


CATALOG: dict[str, CatalogEntry] = {
    "free_fall": CatalogEntry(
        name="free_fall",
        defaults={"g": -9.8},
        make_ode=_free_fall_ode,
        domain=lambda p: EvalDomain(),
        closed_f=lambda p: (lambda t, al, be, a, b:
                            free_fall_F(p["g"], t, al, be, a, b)),
        closed_s=lambda p: (lambda t, al, be, a, v:
                            free_fall_S(p["g"], t, al, be, a, v)),
        rhs_true=lambda p: (lambda t, x, v: p["g"]),
    ),
    "conic": CatalogEntry(
        name="conic",
        defaults={"k": 1.0, "g": -9.8},
        make_ode=_conic_ode,
        domain=_conic_domain,
        closed_f=lambda p: (lambda t, al, be, a, b:
                            conic_F(ConicParams(p["k"], p["g"]),
                                    t, al, be, a, b)),
        closed_s=lambda p: (lambda t, al, be, a, v:
                            conic_S(ConicParams(p["k"], p["g"]),
                                    t, al, be, a, v)),
        rhs_true=lambda p: (lambda t, x, v: p["k"] ** 2 * x + p["g"]),
    ),
    "linear_zero": CatalogEntry(
        name="linear_zero",
        defaults={},
        make_ode=_linear_zero_ode,
        domain=lambda p: EvalDomain(),
        closed_f=lambda p: (lambda t, al, be, a, b:
                            free_fall_F(0.0, t, al, be, a, b)),
        closed_s=lambda p: (lambda t, al, be, a, v:
                            free_fall_S(0.0, t, al, be, a, v)),
        rhs_true=lambda p: (lambda t, x, v: 0.0),
    ),
    "oscillator": CatalogEntry(
        name="oscillator",
        defaults={"omega": 1.0},
        make_ode=_oscillator_ode,
        domain=_oscillator_domain,
        rhs_true=lambda p: (lambda t, x, v: -p["omega"] ** 2 * x),
    ),
    "linear_basis": CatalogEntry(
        name="linear_basis",
        defaults={},
        make_ode=_cos_sin_ode,
        domain=lambda p: EvalDomain(max_interval=3.0),
        closed_f=lambda p: (lambda t, al, be, a, b:
                            linear_F(COS_SIN_BASIS, t, al, be, a, b)),
        closed_s=lambda p: (lambda t, al, be, a, v:
                            cos_sin_S(t, al, be, a, v)),
        rhs_true=lambda p: (lambda t, x, v: -x),
    ),
}


def catalog_names() -> list[str]:
    return sorted(CATALOG)


def get_entry(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise ValueError(
            f"unknown catalog family '{name}' "
            f"(available: {', '.join(catalog_names())})")


def resolve_params(entry: CatalogEntry,
                   overrides: Mapping[str, float] | None) -> dict[str, float]:
    params = dict(entry.defaults)
    for key, val in (overrides or {}).items():
        if key not in params:
            raise ValueError(
                f"family '{entry.name}' has no parameter '{key}' "
                f"(accepts: {', '.join(sorted(params)) or 'none'})")
        params[key] = float(val)
    return params


def make_ode(name: str, overrides: Mapping[str, float] | None = None
             ) -> tuple[SecondOrderOde, dict[str, float]]:
    entry = get_entry(name)
    params = resolve_params(entry, overrides)
    return entry.make_ode(params), params


def closed_evaluator(name: str,
                     overrides: Mapping[str, float] | None = None
                     ) -> DependenceEvaluator:
    entry = get_entry(name)
    if entry.closed_f is None:
        raise ValueError(f"family '{entry.name}' has no closed form")
    params = resolve_params(entry, overrides)
    closed_s = entry.closed_s(params) if entry.closed_s else None
    return evaluator_from_scalar(entry.closed_f(params), closed_s,
                                 domain=entry.domain(params),
                                 label=f"{entry.name}[closed]")


def numeric_evaluator(name: str,
                      overrides: Mapping[str, float] | None = None,
                      cfg: ShootingConfig = DEFAULT_SHOOTING
                      ) -> DependenceEvaluator:
    entry = get_entry(name)
    params = resolve_params(entry, overrides)
    ode = entry.make_ode(params)
    return evaluator_from_ode(ode, cfg, domain=entry.domain(params),
                              label=f"{entry.name}[numeric]")


def rhs_true(name: str, overrides: Mapping[str, float] | None = None
             ) -> Optional[Callable]:
    entry = get_entry(name)
    if entry.rhs_true is None:
        return None
    return entry.rhs_true(resolve_params(entry, overrides))


def check_angelesco(spec: SampleSpec,
                    params: Mapping[str, float] | None = None) -> LawReport:
    """Five-point product residual over sampled members of the
    xdd = k^2 x + g family, relative to the larger product magnitude.

    When params fixes k and g, only the member varies; otherwise k is drawn
    from [0.25, 2] and g from the sampling plan's ab_range.  Draw order
    per sample:
    [k; g;] (alpha, beta) endpoint pair; a; b; tau0 from tau_range; delta
    from [0.1, 0.5].
    """
    rng = Splitmix64(spec.seed)
    agg = _Aggregator("angelesco")
    fixed_k = params.get("k") if params else None
    fixed_g = params.get("g") if params else None
    lo, hi = spec.alpha_beta_range
    for _ in range(spec.count):
        k = float(fixed_k) if fixed_k is not None else rng.uniform(0.25, 2.0)
        g = float(fixed_g) if fixed_g is not None else rng.uniform(
            *spec.ab_range)
        alpha = rng.uniform(lo, hi)
        beta = rng.uniform(lo, hi)
        while abs(beta - alpha) < spec.min_separation:
            alpha = rng.uniform(lo, hi)
            beta = rng.uniform(lo, hi)
        a = rng.uniform(*spec.ab_range)
        b = rng.uniform(*spec.ab_range)
        tau0 = rng.uniform(*spec.tau_range)
        delta = rng.uniform(0.1, 0.5)
        p = ConicParams(k, g)

        def member(t: float) -> float:
            return conic_F(p, t, alpha, beta, a, b)

        try:
            residual = angelesco_residual(member, tau0, delta)
            x0 = member(tau0)
            x1 = member(tau0 + delta)
            x2 = member(tau0 + 2 * delta)
            x3 = member(tau0 + 3 * delta)
            x4 = member(tau0 + 4 * delta)
        except _SAMPLE_ERRORS:
            agg.fail()
            continue
        scale = max(abs((x4 - x1) * (x2 - x1)), abs((x3 - x0) * (x3 - x2)),
                    1e-30)
        agg.add(abs(residual) / scale,
                _jsonable(k=k, g=g, alpha=alpha, beta=beta, a=a, b=b,
                          tau0=tau0, delta=delta))
    return agg.report()
