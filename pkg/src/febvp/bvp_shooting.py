"""Two-point solves and the dependence maps F and S.

solve_neumann finds the solution of xdd = f(tau, x, xd) passing through
x(alpha) = a and x(beta) = b by Newton iteration on the initial velocity
(single shooting, forward-difference Jacobian, damped updates).  eval_F
exposes the solution value at any tau as a function of the conditions; eval_S
is the smooth extension that replaces b with the average-slope parameter v,
so the diagonal beta == alpha carries Cauchy data (x(alpha) = a,
xd(alpha) = v).

The solver certifies local uniqueness: a numerically singular shooting
Jacobian raises ConjugatePoint even when the residual already vanished (a
conjugate interval admits many solutions through the same endpoint data, and
a converged residual alone cannot tell).
"""

from __future__ import annotations

import threading
import weakref
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import FebvpError
from .ode_core import (
    IntegratorConfig,
    SecondOrderOde,
    StatePoint,
    Trajectory,
    integrate_ivp,
)

__all__ = [
    "NeumannConditions",
    "IntegralConditions",
    "ShootingConfig",
    "ShootingResult",
    "ConjugatePoint",
    "NoConvergence",
    "solve_neumann",
    "solve_integral",
    "eval_F",
    "eval_S",
    "eval_state",
    "diag_switch",
    "clear_cache",
]


class ConjugatePoint(FebvpError):
    """Shooting Jacobian numerically singular: endpoint data does not pin a
    locally unique solution on this interval."""

    code = "conjugate_point"


class NoConvergence(FebvpError):
    code = "no_convergence"


def _as_vec(val, dim_hint: int | None = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(val, dtype=float))
    if arr.ndim != 1:
        raise ValueError("condition values must be scalars or 1-d arrays")
    if dim_hint is not None and arr.shape != (dim_hint,):
        raise ValueError(f"expected {dim_hint} components, got {arr.shape[0]}")
    return arr


@dataclass(eq=False)
class NeumannConditions:
    """Endpoint-value data x(alpha) = a, x(beta) = b with alpha != beta."""

    alpha: float
    beta: float
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.alpha = float(self.alpha)
        self.beta = float(self.beta)
        self.a = _as_vec(self.a)
        self.b = _as_vec(self.b, self.a.shape[0])
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise ValueError("alpha and beta must be finite")
        if self.alpha == self.beta:
            raise ValueError("endpoint data requires alpha != beta")

    @property
    def dim(self) -> int:
        return self.a.shape[0]


@dataclass(eq=False)
class IntegralConditions:
    """Average-slope data x(alpha) = a, (x(beta) - x(alpha))/(beta - alpha) = v.

    alpha == beta is allowed; the data then degenerate to Cauchy data with
    initial velocity v.
    """

    alpha: float
    beta: float
    a: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.alpha = float(self.alpha)
        self.beta = float(self.beta)
        self.a = _as_vec(self.a)
        self.v = _as_vec(self.v, self.a.shape[0])
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise ValueError("alpha and beta must be finite")

    @property
    def dim(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class ShootingConfig:
    """Newton-shooting controls.

    newton_tol is an infinity-norm bound on the endpoint residual.  The
    forward-difference Jacobian perturbs component j by
    jacobian_fd_step * max(1, |u_j|).  With damping enabled a failed full
    step is halved up to max_halvings times.  singular_floor and cond_limit
    drive the ConjugatePoint test: the Jacobian is declared singular when
    sigma_min < singular_floor * ref or ref / sigma_min > cond_limit, with
    ref = max(sigma_max, |beta - alpha|) the natural Jacobian scale.
    """

    newton_tol: float = 1e-10
    max_newton_iters: int = 50
    jacobian_fd_step: float = 1e-6
    damping: bool = True
    max_halvings: int = 20
    singular_floor: float = 1e-4
    cond_limit: float = 1e12
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)

    def _key(self) -> tuple:
        ic = self.integrator
        return (
            self.newton_tol, self.max_newton_iters, self.jacobian_fd_step,
            self.damping, self.max_halvings, self.singular_floor, self.cond_limit,
            ic.rel_tol, ic.abs_tol, ic.h_init, ic.h_min, ic.max_steps,
        )


DEFAULT_SHOOTING = ShootingConfig()


@dataclass(eq=False)
class ShootingResult:
    """Converged solve: initial velocity, trajectory over [alpha, beta],
    Newton iteration count, and the final endpoint residual (inf-norm)."""

    u: np.ndarray
    trajectory: Trajectory
    iterations: int
    final_residual: float


def _check_singular(J: np.ndarray, interval: float, cfg: ShootingConfig, where: str):
    try:
        sigma = np.linalg.svd(J, compute_uv=False)
    except np.linalg.LinAlgError:
        raise ConjugatePoint(
            f"shooting Jacobian is not decomposable near {where}", interval=interval)
    if not np.all(np.isfinite(sigma)):
        raise ConjugatePoint(
            f"shooting Jacobian is non-finite near {where}", interval=interval)
    smax = float(sigma[0])
    smin = float(sigma[-1])
    ref = max(smax, abs(interval))
    if smin <= 0.0 or ref / smin > cfg.cond_limit or smin < cfg.singular_floor * ref:
        raise ConjugatePoint(
            "shooting Jacobian numerically singular "
            f"(sigma_min={smin!r}, scale={ref!r}) near {where}: endpoint data "
            "does not determine a locally unique solution",
            sigma_min=smin, scale=ref, interval=interval)


def solve_neumann(ode: SecondOrderOde, cond: NeumannConditions,
                  cfg: ShootingConfig = DEFAULT_SHOOTING,
                  guess: np.ndarray | None = None) -> ShootingResult:
    """Solve the endpoint-value problem by Newton shooting on xd(alpha).

    The initial guess defaults to the secant slope (b - a)/(beta - alpha).

    Raises:
        ConjugatePoint: Jacobian numerically singular (no locally unique
            solution; oscillator over a length-pi interval is the canonical
            case).
        NoConvergence: iteration or line-search budget exhausted.
        IntegrationError subclasses propagate from the integrator.
    """
    if cond.dim != ode.dim:
        raise ValueError(f"conditions have dim {cond.dim}, ode has dim {ode.dim}")
    n = ode.dim
    alpha, beta = cond.alpha, cond.beta
    a, b = cond.a, cond.b
    interval = beta - alpha
    tol = cfg.newton_tol

    def residual(u: np.ndarray) -> tuple[np.ndarray, Trajectory]:
        traj = integrate_ivp(ode, StatePoint(alpha, a, u), beta, cfg.integrator)
        return traj.eval(beta).x - b, traj

    def jacobian(u: np.ndarray, r_base: np.ndarray) -> np.ndarray:
        J = np.empty((n, n))
        for j in range(n):
            dj = cfg.jacobian_fd_step * max(1.0, abs(float(u[j])))
            up = u.copy()
            up[j] += dj
            rj, _ = residual(up)
            J[:, j] = (rj - r_base) / dj
        return J

    u = (b - a) / interval if guess is None else _as_vec(guess, n)
    r, traj = residual(u)
    rn = float(np.max(np.abs(r)))
    iterations = 0
    J: np.ndarray | None = None

    while rn > tol:
        if iterations >= cfg.max_newton_iters:
            raise NoConvergence(
                f"Newton did not reach tol={tol!r} in {cfg.max_newton_iters} "
                f"iterations (residual {rn!r})", residual=rn, iterations=iterations)
        J = jacobian(u, r)
        _check_singular(J, interval, cfg, f"u={u.tolist()!r}")
        try:
            s = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            raise ConjugatePoint("shooting Jacobian solve failed", interval=interval)
        if not np.all(np.isfinite(s)):
            raise ConjugatePoint("shooting Newton step is non-finite", interval=interval)

        lam = 1.0
        max_tries = cfg.max_halvings + 1 if cfg.damping else 1
        for _ in range(max_tries):
            u_try = u + lam * s
            r_try, traj_try = residual(u_try)
            rn_try = float(np.max(np.abs(r_try)))
            if rn_try < rn or rn_try <= tol:
                break
            lam *= 0.5
        else:
            raise NoConvergence(
                f"damped line search stalled after {cfg.max_halvings} halvings "
                f"(residual {rn!r})", residual=rn, iterations=iterations)
        u, r, rn, traj = u_try, r_try, rn_try, traj_try
        iterations += 1

    # Certify local uniqueness at the solution.  When Newton accepted the
    # initial guess outright no Jacobian was ever formed (the conjugate case
    # with matching endpoint data lands here), so form one now.
    if J is None:
        J = jacobian(u, r)
    _check_singular(J, interval, cfg, "the converged solution")
    return ShootingResult(u=u, trajectory=traj, iterations=iterations, final_residual=rn)


def solve_integral(ode: SecondOrderOde, cond: IntegralConditions,
                   cfg: ShootingConfig = DEFAULT_SHOOTING,
                   guess: np.ndarray | None = None) -> ShootingResult:
    """Solve under average-slope data by reduction to endpoint data.

    For alpha != beta this is solve_neumann with b = a + v * (beta - alpha);
    the average of xd over the interval then equals v.  For alpha == beta the
    data are Cauchy data and the result is the degenerate zero-width solve
    with u = v.
    """
    if cond.dim != ode.dim:
        raise ValueError(f"conditions have dim {cond.dim}, ode has dim {ode.dim}")
    if cond.alpha == cond.beta:
        traj = integrate_ivp(ode, StatePoint(cond.alpha, cond.a, cond.v),
                             cond.alpha, cfg.integrator)
        return ShootingResult(u=cond.v.copy(), trajectory=traj, iterations=0,
                              final_residual=0.0)
    b = cond.a + cond.v * (cond.beta - cond.alpha)
    ncond = NeumannConditions(cond.alpha, cond.beta, cond.a, b)
    return solve_neumann(ode, ncond, cfg, guess=guess)


# One ShootingResult per exact bit pattern of (conditions, config), held per
# ode.  Reads are plain dict lookups; writes take a lock (safe for concurrent
# readers with a single writer per key; a lost race just recomputes the same
# deterministic value).
_CACHE: "weakref.WeakKeyDictionary[SecondOrderOde, dict]" = weakref.WeakKeyDictionary()
_CACHE_LOCK = threading.Lock()


def clear_cache() -> None:
    """Drop all cached solves (mainly for tests and memory control)."""
    with _CACHE_LOCK:
        _CACHE.clear()


def _cached_solve(ode: SecondOrderOde, cond: NeumannConditions,
                  cfg: ShootingConfig) -> ShootingResult:
    key = (cond.alpha.hex(), cond.beta.hex(), cond.a.tobytes(), cond.b.tobytes(),
           cfg._key())
    per_ode = _CACHE.get(ode)
    if per_ode is not None:
        hit = per_ode.get(key)
        if hit is not None:
            return hit
    result = solve_neumann(ode, cond, cfg)
    with _CACHE_LOCK:
        per_ode = _CACHE.setdefault(ode, {})
        per_ode[key] = result
    return result


def eval_state(ode: SecondOrderOde, traj: Trajectory, tau: float,
               icfg: IntegratorConfig) -> StatePoint:
    """Evaluate a solve's trajectory at tau, integrating past an end if tau
    lies outside the stored span.

    Extensions are recomputed per call (never cached), so the value at tau
    depends only on (ode, trajectory, tau, config) and not on the history of
    earlier queries.
    """
    lo, hi = traj.span
    if lo <= tau <= hi:
        return traj.eval(tau)
    if tau > hi:
        ext = integrate_ivp(ode, traj.eval(hi), tau, icfg)
    else:
        ext = integrate_ivp(ode, traj.eval(lo), tau, icfg)
    return ext.eval(tau)


def eval_F(ode: SecondOrderOde, tau: float, cond: NeumannConditions,
           cfg: ShootingConfig = DEFAULT_SHOOTING, cache: bool = True) -> np.ndarray:
    """Value x(tau) of the endpoint-data solution, as a map of (tau, cond).

    The underlying solve is cached per exact bit pattern of the conditions
    and config, so sweeping tau costs one solve.  tau may lie outside
    [alpha, beta]; the solution is continued by direct integration.
    """
    result = _cached_solve(ode, cond, cfg) if cache else solve_neumann(ode, cond, cfg)
    return eval_state(ode, result.trajectory, float(tau), cfg.integrator).x


def diag_switch(alpha: float) -> float:
    """Interval width below which eval_S switches to Cauchy integration."""
    return 1e-8 * max(1.0, abs(alpha))


def eval_S(ode: SecondOrderOde, tau: float, cond: IntegralConditions,
           cfg: ShootingConfig = DEFAULT_SHOOTING, cache: bool = True) -> np.ndarray:
    """Smooth extension of eval_F across the diagonal beta == alpha.

    For |beta - alpha| above diag_switch(alpha) this is
    eval_F(tau, alpha, beta, a, a + v*(beta - alpha)); at and below the
    switch the solution is integrated directly from Cauchy data (alpha, a, v).
    """
    tau = float(tau)
    alpha, beta = cond.alpha, cond.beta
    if abs(beta - alpha) > diag_switch(alpha):
        b = cond.a + cond.v * (beta - alpha)
        ncond = NeumannConditions(alpha, beta, cond.a, b)
        return eval_F(ode, tau, ncond, cfg, cache=cache)
    if tau == alpha:
        return cond.a.copy()
    traj = integrate_ivp(ode, StatePoint(alpha, cond.a, cond.v), tau, cfg.integrator)
    return traj.eval(tau).x
