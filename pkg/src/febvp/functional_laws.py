"""Randomized residual checks for the functional laws a dependence map must
satisfy: composition, boundary behavior, smooth extension across the
diagonal, and the equivalence of endpoint data with average-slope data.

Every check draws its samples from a seeded splitmix64 stream so that any
implementation, in any language, can reproduce the exact sample tuples.  The
draw order is part of the contract and is documented on each check; all
scalars are drawn as lo + (hi - lo) * u where u = (z >> 11) * 2^-53 and z is
the next splitmix64 output.  Interval pairs are drawn by whole-pair
rejection: draw both endpoints, accept when the separation constraints hold,
retry otherwise (at most 1000 attempts, then the configuration is rejected
as unsatisfiable).

Residuals use the componentwise infinity norm.  A sample whose evaluation
raises a solver/domain error, or whose residual is non-finite, increments
the report's failure count and contributes nothing to the aggregates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import FebvpError
from .ode_core import SecondOrderOde
from .bvp_shooting import (
    DEFAULT_SHOOTING,
    IntegralConditions,
    NeumannConditions,
    ShootingConfig,
    eval_F,
    eval_S,
    solve_integral,
    solve_neumann,
)

__all__ = [
    "Splitmix64",
    "EvaluatorFailure",
    "EvalDomain",
    "DependenceEvaluator",
    "SampleSpec",
    "LawReport",
    "DIAG_EPSILONS",
    "check_composition",
    "check_boundary",
    "check_extension",
    "check_lemma1_equivalence",
    "evaluator_from_scalar",
    "evaluator_from_ode",
]


class EvaluatorFailure(FebvpError):
    """An evaluator could not produce a value for a sample (domain fault,
    solver breakdown).  Recorded per sample, never fatal to a check."""

    code = "evaluator_failure"


_MASK64 = (1 << 64) - 1


class Splitmix64:
    """The splitmix64 generator (Steele, Lea, Flood 2014), used verbatim so
    sample streams are reproducible across implementations.

    state += 0x9E3779B97F4A7C15
    z = state; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9
    z = (z ^ z>>27) * 0x94D049BB133111EB; return z ^ z>>31
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self, lo: float, hi: float) -> float:
        u = (self.next_u64() >> 11) * 2.0 ** -53
        return lo + (hi - lo) * u


@dataclass(frozen=True)
class EvalDomain:
    """Box constraints under which an evaluator is defined and
    well-conditioned.  None leaves the harness range unrestricted;
    min_separation and max_interval constrain |beta - alpha|."""

    tau_range: Optional[tuple[float, float]] = None
    alpha_beta_range: Optional[tuple[float, float]] = None
    ab_range: Optional[tuple[float, float]] = None
    min_separation: float = 0.0
    max_interval: Optional[float] = None


@dataclass(eq=False)
class DependenceEvaluator:
    """A dependence map under test: eval_f(tau, alpha, beta, a, b) -> value
    (scalar or length-dim vector), optional eval_s(tau, alpha, beta, a, v),
    and the domain it is defined on."""

    dim: int
    eval_f: Callable
    eval_s: Optional[Callable] = None
    domain: EvalDomain = field(default_factory=EvalDomain)
    label: str = ""


@dataclass(frozen=True)
class SampleSpec:
    """Sampling plan: how many tuples, from which seed, over which ranges.
    Ranges are intersected with the evaluator's domain before drawing."""

    count: int
    seed: int
    tau_range: tuple[float, float] = (-2.0, 2.0)
    alpha_beta_range: tuple[float, float] = (-2.0, 2.0)
    ab_range: tuple[float, float] = (-2.0, 2.0)
    min_separation: float = 0.05

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not self.min_separation > 0:
            raise ValueError("min_separation must be > 0")


@dataclass(eq=False)
class LawReport:
    """Aggregated residuals of one law over one sample stream."""

    law_name: str
    samples: int
    max_residual: float
    mean_residual: float
    worst_case: Optional[dict]
    failures: int

    def __post_init__(self):
        if self.samples and self.max_residual < self.mean_residual:
            raise ValueError("max_residual must dominate mean_residual")

    def to_json(self) -> dict:
        return {
            "law": self.law_name,
            "samples": self.samples,
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "worst_case": self.worst_case,
            "failures": self.failures,
        }


DIAG_EPSILONS = (1e-2, 1e-3, 1e-4)

_MAX_PAIR_TRIES = 1000

# Errors that mark a sample as failed rather than aborting the whole check.
_SAMPLE_ERRORS = (FebvpError, ValueError, ZeroDivisionError,
                  OverflowError, FloatingPointError)


def _intersect(spec_range: tuple[float, float],
               dom_range: Optional[tuple[float, float]],
               what: str) -> tuple[float, float]:
    if dom_range is None:
        return spec_range
    lo = max(spec_range[0], dom_range[0])
    hi = min(spec_range[1], dom_range[1])
    if not lo < hi:
        raise ValueError(f"empty {what} range after domain intersection")
    return (lo, hi)


@dataclass(frozen=True)
class _Box:
    tau: tuple[float, float]
    endpoints: tuple[float, float]
    values: tuple[float, float]
    min_sep: float
    max_interval: Optional[float]

    @staticmethod
    def of(spec: SampleSpec, domain: EvalDomain) -> "_Box":
        return _Box(
            tau=_intersect(spec.tau_range, domain.tau_range, "tau"),
            endpoints=_intersect(spec.alpha_beta_range,
                                 domain.alpha_beta_range, "alpha/beta"),
            values=_intersect(spec.ab_range, domain.ab_range, "a/b"),
            min_sep=max(spec.min_separation, domain.min_separation),
            max_interval=domain.max_interval,
        )


def _draw_pair(rng: Splitmix64, box: _Box) -> tuple[float, float]:
    lo, hi = box.endpoints
    for _ in range(_MAX_PAIR_TRIES):
        p = rng.uniform(lo, hi)
        q = rng.uniform(lo, hi)
        sep = abs(q - p)
        if sep < box.min_sep:
            continue
        if box.max_interval is not None and sep > box.max_interval:
            continue
        return p, q
    raise ValueError(
        "could not draw an admissible endpoint pair in "
        f"{_MAX_PAIR_TRIES} attempts (range {box.endpoints}, "
        f"min_separation {box.min_sep}, max_interval {box.max_interval})")


def _draw_vec(rng: Splitmix64, box: _Box, n: int) -> np.ndarray:
    lo, hi = box.values
    return np.array([rng.uniform(lo, hi) for _ in range(n)])


def _as_value(raw, dim: int) -> np.ndarray:
    out = np.atleast_1d(np.asarray(raw, dtype=float))
    if out.shape != (dim,):
        raise EvaluatorFailure(
            f"evaluator returned shape {out.shape}, expected ({dim},)")
    return out


class _Aggregator:
    def __init__(self, law_name: str):
        self.law_name = law_name
        self.n = 0
        self.failures = 0
        self.total = 0.0
        self.max_residual = 0.0
        self.worst_case: Optional[dict] = None

    def add(self, residual: float, case: dict):
        self.n += 1
        if not math.isfinite(residual):
            self.failures += 1
            return
        self.total += residual
        if residual >= self.max_residual:
            self.max_residual = residual
            self.worst_case = case

    def fail(self):
        self.n += 1
        self.failures += 1

    def report(self) -> LawReport:
        ok = self.n - self.failures
        return LawReport(
            law_name=self.law_name,
            samples=self.n,
            max_residual=self.max_residual,
            mean_residual=self.total / ok if ok else 0.0,
            worst_case=self.worst_case,
            failures=self.failures,
        )


def _jsonable(**kwargs) -> dict:
    out = {}
    for key, val in kwargs.items():
        if isinstance(val, np.ndarray):
            out[key] = [float(c) for c in val]
        else:
            out[key] = float(val)
    return out


def check_composition(F: DependenceEvaluator, spec: SampleSpec) -> LawReport:
    """Residual of rebasing the map onto an inner interval:

        F(tau, alpha, beta, a, b)
        vs F(tau, gamma, delta, F(gamma, alpha, beta, a, b),
                                F(delta, alpha, beta, a, b)).

    Draw order per sample: tau; (alpha, beta) pair; (gamma, delta) pair;
    a components; b components.
    """
    box = _Box.of(spec, F.domain)
    rng = Splitmix64(spec.seed)
    agg = _Aggregator("composition")
    for _ in range(spec.count):
        tau = rng.uniform(*box.tau)
        alpha, beta = _draw_pair(rng, box)
        gamma, delta = _draw_pair(rng, box)
        a = _draw_vec(rng, box, F.dim)
        b = _draw_vec(rng, box, F.dim)
        try:
            direct = _as_value(F.eval_f(tau, alpha, beta, a, b), F.dim)
            at_gamma = _as_value(F.eval_f(gamma, alpha, beta, a, b), F.dim)
            at_delta = _as_value(F.eval_f(delta, alpha, beta, a, b), F.dim)
            rebased = _as_value(
                F.eval_f(tau, gamma, delta, at_gamma, at_delta), F.dim)
        except _SAMPLE_ERRORS:
            agg.fail()
            continue
        residual = float(np.max(np.abs(direct - rebased)))
        agg.add(residual, _jsonable(tau=tau, alpha=alpha, beta=beta,
                                    gamma=gamma, delta=delta, a=a, b=b))
    return agg.report()


def check_boundary(F: DependenceEvaluator, spec: SampleSpec) -> LawReport:
    """Residual of the endpoint conditions:
    max(|F(alpha, alpha, beta, a, b) - a|, |F(beta, alpha, beta, a, b) - b|).

    Draw order per sample: (alpha, beta) pair; a components; b components.
    """
    box = _Box.of(spec, F.domain)
    rng = Splitmix64(spec.seed)
    agg = _Aggregator("boundary")
    for _ in range(spec.count):
        alpha, beta = _draw_pair(rng, box)
        a = _draw_vec(rng, box, F.dim)
        b = _draw_vec(rng, box, F.dim)
        try:
            at_alpha = _as_value(F.eval_f(alpha, alpha, beta, a, b), F.dim)
            at_beta = _as_value(F.eval_f(beta, alpha, beta, a, b), F.dim)
        except _SAMPLE_ERRORS:
            agg.fail()
            continue
        residual = float(max(np.max(np.abs(at_alpha - a)),
                             np.max(np.abs(at_beta - b))))
        agg.add(residual, _jsonable(alpha=alpha, beta=beta, a=a, b=b))
    return agg.report()


def check_extension(F: DependenceEvaluator,
                    spec: SampleSpec) -> list[LawReport]:
    """Two residual families for the smooth extension, four reports total.

    extension_offdiag: |S(tau, alpha, beta, a, v)
                        - F(tau, alpha, beta, a, a + v (beta - alpha))|
    for the sampled off-diagonal pair.

    extension_diag_<eps> (eps in 1e-2, 1e-3, 1e-4):
    |S(tau, alpha, alpha+eps, a, v) - S(tau, alpha, alpha, a, v)|,
    evaluated on the same sample tuples for all three eps so the three maxima
    are comparable; they must shrink as eps does for a continuous extension.

    Draw order per sample: tau; (alpha, beta) pair; a components;
    v components.  The diagonal family reuses tau, alpha, a, v.
    """
    if F.eval_s is None:
        raise ValueError("check_extension requires an evaluator with eval_s")
    box = _Box.of(spec, F.domain)
    rng = Splitmix64(spec.seed)
    agg_off = _Aggregator("extension_offdiag")
    agg_diag = {eps: _Aggregator(f"extension_diag_{eps:.0e}".replace("e-0", "e-"))
                for eps in DIAG_EPSILONS}
    for _ in range(spec.count):
        tau = rng.uniform(*box.tau)
        alpha, beta = _draw_pair(rng, box)
        a = _draw_vec(rng, box, F.dim)
        v = _draw_vec(rng, box, F.dim)
        try:
            s_val = _as_value(F.eval_s(tau, alpha, beta, a, v), F.dim)
            f_val = _as_value(
                F.eval_f(tau, alpha, beta, a, a + v * (beta - alpha)), F.dim)
        except _SAMPLE_ERRORS:
            agg_off.fail()
        else:
            agg_off.add(float(np.max(np.abs(s_val - f_val))),
                        _jsonable(tau=tau, alpha=alpha, beta=beta, a=a, v=v))
        try:
            on_diag = _as_value(F.eval_s(tau, alpha, alpha, a, v), F.dim)
        except _SAMPLE_ERRORS:
            for agg in agg_diag.values():
                agg.fail()
            continue
        for eps, agg in agg_diag.items():
            try:
                near = _as_value(F.eval_s(tau, alpha, alpha + eps, a, v),
                                 F.dim)
            except _SAMPLE_ERRORS:
                agg.fail()
                continue
            agg.add(float(np.max(np.abs(near - on_diag))),
                    _jsonable(tau=tau, alpha=alpha, eps=eps, a=a, v=v))
    return [agg_off.report()] + [agg_diag[eps].report()
                                 for eps in DIAG_EPSILONS]


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)
# mapped from [-1, 1] to [0, 1]
_GL01_NODES = 0.5 * (_GL_NODES + 1.0)
_GL01_WEIGHTS = 0.5 * _GL_WEIGHTS


def check_lemma1_equivalence(ode: SecondOrderOde, spec: SampleSpec,
                             cfg: ShootingConfig = DEFAULT_SHOOTING
                             ) -> list[LawReport]:
    """Equivalence of endpoint data and average-slope data, two reports.

    lemma1_agreement: solve under average-slope data (alpha, beta, a, v) and
    under endpoint data (alpha, beta, a, a + v (beta - alpha)); compare the
    trajectories at 20 equally spaced points of [alpha, beta].

    lemma1_quadrature: independently verify the average-slope property of
    the integral-data solution by 64-point Gauss-Legendre quadrature:
    integral over gamma in [0, 1] of xdot((1-gamma) alpha + gamma beta)
    equals v.

    Draw order per sample: (alpha, beta) pair; a components; v components.
    Solver breakdowns (conjugate intervals included) count as failures in
    both reports.
    """
    box = _Box.of(spec, EvalDomain())
    rng = Splitmix64(spec.seed)
    agg_agree = _Aggregator("lemma1_agreement")
    agg_quad = _Aggregator("lemma1_quadrature")
    for _ in range(spec.count):
        alpha, beta = _draw_pair(rng, box)
        a = _draw_vec(rng, box, ode.dim)
        v = _draw_vec(rng, box, ode.dim)
        case = _jsonable(alpha=alpha, beta=beta, a=a, v=v)
        try:
            by_integral = solve_integral(
                ode, IntegralConditions(alpha, beta, a, v), cfg)
            b = a + v * (beta - alpha)
            by_endpoint = solve_neumann(
                ode, NeumannConditions(alpha, beta, a, b), cfg)
        except _SAMPLE_ERRORS:
            agg_agree.fail()
            agg_quad.fail()
            continue
        taus = np.linspace(alpha, beta, 20)
        worst = 0.0
        for t in taus:
            diff = (by_integral.trajectory.eval(float(t)).x
                    - by_endpoint.trajectory.eval(float(t)).x)
            worst = max(worst, float(np.max(np.abs(diff))))
        agg_agree.add(worst, case)

        mean_slope = np.zeros(ode.dim)
        for node, weight in zip(_GL01_NODES, _GL01_WEIGHTS):
            t = (1.0 - node) * alpha + node * beta
            mean_slope += weight * by_integral.trajectory.eval(float(t)).v
        agg_quad.add(float(np.max(np.abs(mean_slope - v))), case)
    return [agg_agree.report(), agg_quad.report()]


def evaluator_from_scalar(eval_f: Callable, eval_s: Optional[Callable] = None,
                          domain: EvalDomain = EvalDomain(),
                          label: str = "") -> DependenceEvaluator:
    """Wrap scalar closed forms f(tau, alpha, beta, a, b) (and optionally
    s(tau, alpha, beta, a, v)) taking/returning plain floats."""

    def f_vec(tau, alpha, beta, a, b):
        return np.array([eval_f(tau, alpha, beta, float(a[0]), float(b[0]))])

    s_vec = None
    if eval_s is not None:
        def s_vec(tau, alpha, beta, a, v):
            return np.array(
                [eval_s(tau, alpha, beta, float(a[0]), float(v[0]))])

    return DependenceEvaluator(dim=1, eval_f=f_vec, eval_s=s_vec,
                               domain=domain, label=label)


def evaluator_from_ode(ode: SecondOrderOde,
                       cfg: ShootingConfig = DEFAULT_SHOOTING,
                       domain: EvalDomain = EvalDomain(),
                       label: str = "") -> DependenceEvaluator:
    """Wrap the numeric shooting solver on an ODE as a DependenceEvaluator."""

    def f_vec(tau, alpha, beta, a, b):
        cond = NeumannConditions(alpha, beta, np.asarray(a, dtype=float),
                                 np.asarray(b, dtype=float))
        return eval_F(ode, tau, cond, cfg)

    def s_vec(tau, alpha, beta, a, v):
        cond = IntegralConditions(alpha, beta, np.asarray(a, dtype=float),
                                  np.asarray(v, dtype=float))
        return eval_S(ode, tau, cond, cfg)

    return DependenceEvaluator(dim=ode.dim, eval_f=f_vec, eval_s=s_vec,
                               domain=domain, label=label or ode.label)
