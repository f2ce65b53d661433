"""Adaptive integration of second-order ODE systems xdd = f(tau, x, xd).

The integrator is an explicit Dormand-Prince 5(4) pair with the standard
quartic dense-output interpolant and a PI step-size controller (safety 0.9,
step-ratio clamp [0.2, 5.0]).  Integration works forward or backward in tau
and produces an immutable Trajectory that can be evaluated anywhere inside
the covered span; evaluation exactly at a stored knot returns the stored
state bitwise.

Results are deterministic: identical inputs and config yield identical bits.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import FebvpError

__all__ = [
    "SecondOrderOde",
    "StatePoint",
    "IntegratorConfig",
    "Trajectory",
    "IntegrationError",
    "StepSizeUnderflow",
    "MaxStepsExceeded",
    "NonFiniteRhs",
    "OutOfSpan",
    "integrate_ivp",
    "eval_trajectory",
]


class IntegrationError(FebvpError):
    """Base class for integrator failures."""


class StepSizeUnderflow(IntegrationError):
    code = "step_underflow"


class MaxStepsExceeded(IntegrationError):
    code = "max_steps_exceeded"


class NonFiniteRhs(IntegrationError):
    code = "nonfinite_rhs"


class OutOfSpan(FebvpError):
    code = "out_of_span"


@dataclass(eq=False)
class SecondOrderOde:
    """A second-order system xdd = f(tau, x, xd) in dimension ``dim``.

    Args:
        dim: number of components n (>= 1).
        rhs: map (tau, x, v) -> f with x, v, f numpy arrays of shape (n,).
        label: human-readable name used in reports and error context.
        rhs1: optional scalar fast path for dim == 1, called with plain
            floats (tau, x, v) and returning a float.  Semantically it must
            equal ``rhs``; when present the integrator uses it to avoid
            array overhead on one-dimensional problems.
    """

    dim: int
    rhs: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    label: str = ""
    rhs1: Callable[[float, float, float], float] | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")

    @classmethod
    def from_scalar(cls, f: Callable[[float, float, float], float], label: str = "") -> "SecondOrderOde":
        """Build a one-dimensional ode from a float-valued rhs."""

        def rhs(tau: float, x: np.ndarray, v: np.ndarray) -> np.ndarray:
            return np.array([f(tau, float(x[0]), float(v[0]))])

        return cls(dim=1, rhs=rhs, label=label, rhs1=f)


@dataclass(frozen=True)
class StatePoint:
    """State (x, xd) at a time tau.  Arrays have shape (dim,)."""

    tau: float
    x: np.ndarray
    v: np.ndarray

    @classmethod
    def of(cls, tau: float, x, v) -> "StatePoint":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        if x.shape != v.shape or x.ndim != 1:
            raise ValueError(f"x and v must be 1-d arrays of equal length, got {x.shape} and {v.shape}")
        return cls(float(tau), x, v)


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and limits for integrate_ivp.

    Local error per step is controlled against abs_tol + rel_tol * |state|
    componentwise (RMS-aggregated).
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    h_init: float = 1e-3
    h_min: float = 1e-12
    max_steps: int = 1_000_000


# Dormand-Prince 5(4) tableau (Butcher coefficients), the embedded error
# weights E = b5 - b4hat, and the quartic dense-output matrix P.
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)
_P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)
_P_ARR = np.array(_P)

# PI controller constants: factor = SAFETY * err^(-KI) * err_prev^(KP),
# clamped to [MIN_FACTOR, MAX_FACTOR].
_SAFETY = 0.9
_KI = 0.7 / 5
_KP = 0.4 / 5
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_ERR_PREV_INIT = 1e-4


class _Segment:
    __slots__ = ("t_start", "h", "y0", "q")

    def __init__(self, t_start: float, h: float, y0: np.ndarray, q: np.ndarray):
        self.t_start = t_start
        self.h = h
        self.y0 = y0
        self.q = q

    def eval(self, tau: float) -> np.ndarray:
        th = (tau - self.t_start) / self.h
        p = np.array([th, th * th, th ** 3, th ** 4])
        return self.y0 + self.h * (self.q @ p)


class Trajectory:
    """Piecewise dense solution of one integration run.

    Knots are the accepted step boundaries (increasing).  Between knots the
    method's quartic interpolant is used; exactly at a knot the stored state
    is returned unchanged.
    """

    def __init__(self, dim: int, knots: Sequence[float], states: Sequence[np.ndarray],
                 segments: Sequence[_Segment], label: str = ""):
        self.dim = dim
        self.knots = list(knots)
        self._states = list(states)
        self._segments = list(segments)
        self.label = label

    @property
    def span(self) -> tuple[float, float]:
        return (self.knots[0], self.knots[-1])

    @property
    def n_segments(self) -> int:
        return len(self._segments)

    def eval(self, tau: float) -> StatePoint:
        """Evaluate the trajectory at tau.

        Raises:
            OutOfSpan: tau lies outside [span lo, span hi].
        """
        tau = float(tau)
        knots = self.knots
        if tau < knots[0] or tau > knots[-1]:
            raise OutOfSpan(
                f"tau={tau!r} outside trajectory span [{knots[0]!r}, {knots[-1]!r}]",
                tau=tau, span=(knots[0], knots[-1]),
            )
        i = bisect.bisect_left(knots, tau)
        if i < len(knots) and knots[i] == tau:
            y = self._states[i]
        else:
            y = self._segments[i - 1].eval(tau)
        n = self.dim
        return StatePoint(tau, y[:n].copy(), y[n:].copy())

    def state_at_knot(self, index: int) -> np.ndarray:
        """Raw (2n,) state stored at a knot (no copy; treat as read-only)."""
        return self._states[index]


def eval_trajectory(traj: Trajectory, tau: float) -> StatePoint:
    """Functional alias for Trajectory.eval."""
    return traj.eval(tau)


def _pi_factor(err_norm: float, err_prev: float) -> float:
    if err_norm == 0.0:
        return _MAX_FACTOR
    f = _SAFETY * err_norm ** (-_KI) * err_prev ** _KP
    return min(_MAX_FACTOR, max(_MIN_FACTOR, f))


def integrate_ivp(ode: SecondOrderOde, start: StatePoint, tau_end: float,
                  config: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Integrate the first-order system y = (x, v) from start.tau to tau_end.

    tau_end may be below start.tau (backward integration).  A zero-width call
    (tau_end == start.tau) yields a trajectory with a single knot.

    Raises:
        StepSizeUnderflow: required step fell below config.h_min.
        MaxStepsExceeded: attempted steps exceeded config.max_steps.
        NonFiniteRhs: the rhs produced a non-finite value.
    """
    n = ode.dim
    if start.x.shape != (n,) or start.v.shape != (n,):
        raise ValueError(f"start state has wrong dimension for ode of dim {n}")
    if not (np.all(np.isfinite(start.x)) and np.all(np.isfinite(start.v)) and math.isfinite(start.tau)):
        raise ValueError("start state must be finite")
    tau_end = float(tau_end)
    if not math.isfinite(tau_end):
        raise ValueError("tau_end must be finite")

    t0 = float(start.tau)
    if tau_end == t0:
        y0 = np.concatenate([start.x, start.v])
        return Trajectory(n, [t0], [y0], [], label=ode.label)

    if n == 1 and ode.rhs1 is not None:
        knots, states, segments = _integrate_scalar(
            ode.rhs1, t0, float(start.x[0]), float(start.v[0]), tau_end, config)
    else:
        knots, states, segments = _integrate_vector(ode, t0, start, tau_end, config)

    if tau_end < t0:
        knots.reverse()
        states.reverse()
        segments.reverse()
    return Trajectory(n, knots, states, segments, label=ode.label)


def _integrate_scalar(f, t0: float, x0: float, v0: float, t_end: float,
                      cfg: IntegratorConfig):
    """Unrolled dim-1 kernel; same scheme as the vector path, plain floats."""
    rel, at = cfg.rel_tol, cfg.abs_tol
    direction = 1.0 if t_end > t0 else -1.0
    t, x, v = t0, x0, v0
    kv1 = f(t, x, v)
    if not math.isfinite(kv1):
        raise NonFiniteRhs(f"rhs returned a non-finite value at tau={t!r}", tau=t)
    kx1 = v
    h = direction * min(cfg.h_init, abs(t_end - t0))
    err_prev = _ERR_PREV_INIT
    attempts = 0

    knots = [t0]
    states = [np.array((x0, v0))]
    segments: list[_Segment] = []

    while (t_end - t) * direction > 0.0:
        remaining = t_end - t
        if abs(h) >= abs(remaining):
            hs, last = remaining, True
        else:
            hs, last = h, False
            if abs(hs) < cfg.h_min:
                raise StepSizeUnderflow(
                    f"step size {abs(hs)!r} fell below h_min={cfg.h_min!r} at tau={t!r}",
                    tau=t, h=abs(hs))
        attempts += 1
        if attempts > cfg.max_steps:
            raise MaxStepsExceeded(
                f"exceeded max_steps={cfg.max_steps} before reaching tau={t_end!r}",
                tau=t, max_steps=cfg.max_steps)

        # Stages 2..6: x-derivative is the stage velocity, v-derivative is f.
        x2 = x + hs * (_A21 * kx1)
        v2 = v + hs * (_A21 * kv1)
        kv2 = f(t + _C2 * hs, x2, v2)
        x3 = x + hs * (_A31 * kx1 + _A32 * v2)
        v3 = v + hs * (_A31 * kv1 + _A32 * kv2)
        kv3 = f(t + _C3 * hs, x3, v3)
        x4 = x + hs * (_A41 * kx1 + _A42 * v2 + _A43 * v3)
        v4 = v + hs * (_A41 * kv1 + _A42 * kv2 + _A43 * kv3)
        kv4 = f(t + _C4 * hs, x4, v4)
        x5 = x + hs * (_A51 * kx1 + _A52 * v2 + _A53 * v3 + _A54 * v4)
        v5 = v + hs * (_A51 * kv1 + _A52 * kv2 + _A53 * kv3 + _A54 * kv4)
        kv5 = f(t + _C5 * hs, x5, v5)
        x6 = x + hs * (_A61 * kx1 + _A62 * v2 + _A63 * v3 + _A64 * v4 + _A65 * v5)
        v6 = v + hs * (_A61 * kv1 + _A62 * kv2 + _A63 * kv3 + _A64 * kv4 + _A65 * kv5)
        kv6 = f(t + hs, x6, v6)
        x_new = x + hs * (_B1 * kx1 + _B3 * v3 + _B4 * v4 + _B5 * v5 + _B6 * v6)
        v_new = v + hs * (_B1 * kv1 + _B3 * kv3 + _B4 * kv4 + _B5 * kv5 + _B6 * kv6)
        t_new = t_end if last else t + hs
        kv7 = f(t_new, x_new, v_new)
        if not (math.isfinite(kv2) and math.isfinite(kv3) and math.isfinite(kv4)
                and math.isfinite(kv5) and math.isfinite(kv6) and math.isfinite(kv7)):
            raise NonFiniteRhs(f"rhs returned a non-finite value near tau={t!r}", tau=t)

        err_x = hs * (_E1 * kx1 + _E3 * v3 + _E4 * v4 + _E5 * v5 + _E6 * v6 + _E7 * v_new)
        err_v = hs * (_E1 * kv1 + _E3 * kv3 + _E4 * kv4 + _E5 * kv5 + _E6 * kv6 + _E7 * kv7)
        sx = at + rel * max(abs(x), abs(x_new))
        sv = at + rel * max(abs(v), abs(v_new))
        ex = err_x / sx
        ev = err_v / sv
        en = math.sqrt(0.5 * (ex * ex + ev * ev))

        if math.isfinite(en) and en <= 1.0:
            qx = [0.0] * 4
            qv = [0.0] * 4
            kxs = (kx1, v2, v3, v4, v5, v6, v_new)
            kvs = (kv1, kv2, kv3, kv4, kv5, kv6, kv7)
            for j in range(4):
                ax = bv = 0.0
                for s in range(7):
                    ps = _P[s][j]
                    if ps != 0.0:
                        ax += ps * kxs[s]
                        bv += ps * kvs[s]
                qx[j] = ax
                qv[j] = bv
            segments.append(_Segment(t, hs, np.array((x, v)), np.array((qx, qv))))
            knots.append(t_new)
            states.append(np.array((x_new, v_new)))
            h = hs * _pi_factor(en, err_prev)
            err_prev = max(en, _ERR_PREV_INIT)
            t, x, v = t_new, x_new, v_new
            kx1, kv1 = v_new, kv7
        else:
            fac = _MIN_FACTOR if not math.isfinite(en) else max(_MIN_FACTOR, _SAFETY * en ** -0.2)
            h = hs * fac
            if abs(h) < cfg.h_min:
                raise StepSizeUnderflow(
                    f"step size {abs(h)!r} fell below h_min={cfg.h_min!r} at tau={t!r}",
                    tau=t, h=abs(h))
    return knots, states, segments


def _integrate_vector(ode: SecondOrderOde, t0: float, start: StatePoint,
                      t_end: float, cfg: IntegratorConfig):
    n = ode.dim
    rhs = ode.rhs

    def fsys(t: float, y: np.ndarray) -> np.ndarray:
        x = y[:n]
        v = y[n:]
        fv = rhs(t, x, v)
        if not np.all(np.isfinite(fv)):
            raise NonFiniteRhs(f"rhs returned a non-finite value at tau={t!r}", tau=t)
        out = np.empty(2 * n)
        out[:n] = v
        out[n:] = fv
        return out

    rel, at = cfg.rel_tol, cfg.abs_tol
    direction = 1.0 if t_end > t0 else -1.0
    t = t0
    y = np.concatenate([start.x, start.v])
    k1 = fsys(t, y)
    h = direction * min(cfg.h_init, abs(t_end - t0))
    err_prev = _ERR_PREV_INIT
    attempts = 0

    knots = [t0]
    states = [y.copy()]
    segments: list[_Segment] = []
    K = np.empty((7, 2 * n))

    while (t_end - t) * direction > 0.0:
        remaining = t_end - t
        if abs(h) >= abs(remaining):
            hs, last = remaining, True
        else:
            hs, last = h, False
            if abs(hs) < cfg.h_min:
                raise StepSizeUnderflow(
                    f"step size {abs(hs)!r} fell below h_min={cfg.h_min!r} at tau={t!r}",
                    tau=t, h=abs(hs))
        attempts += 1
        if attempts > cfg.max_steps:
            raise MaxStepsExceeded(
                f"exceeded max_steps={cfg.max_steps} before reaching tau={t_end!r}",
                tau=t, max_steps=cfg.max_steps)

        K[0] = k1
        K[1] = fsys(t + _C2 * hs, y + hs * (_A21 * K[0]))
        K[2] = fsys(t + _C3 * hs, y + hs * (_A31 * K[0] + _A32 * K[1]))
        K[3] = fsys(t + _C4 * hs, y + hs * (_A41 * K[0] + _A42 * K[1] + _A43 * K[2]))
        K[4] = fsys(t + _C5 * hs, y + hs * (_A51 * K[0] + _A52 * K[1] + _A53 * K[2] + _A54 * K[3]))
        K[5] = fsys(t + hs, y + hs * (_A61 * K[0] + _A62 * K[1] + _A63 * K[2] + _A64 * K[3] + _A65 * K[4]))
        y_new = y + hs * (_B1 * K[0] + _B3 * K[2] + _B4 * K[3] + _B5 * K[4] + _B6 * K[5])
        t_new = t_end if last else t + hs
        K[6] = fsys(t_new, y_new)

        err = hs * (_E1 * K[0] + _E3 * K[2] + _E4 * K[3] + _E5 * K[4] + _E6 * K[5] + _E7 * K[6])
        scale = at + rel * np.maximum(np.abs(y), np.abs(y_new))
        ratio = err / scale
        en = math.sqrt(float(ratio @ ratio) / (2 * n))

        if math.isfinite(en) and en <= 1.0:
            q = K.T @ _P_ARR
            segments.append(_Segment(t, hs, y, q))
            knots.append(t_new)
            states.append(y_new)
            h = hs * _pi_factor(en, err_prev)
            err_prev = max(en, _ERR_PREV_INIT)
            t, y, k1 = t_new, y_new, K[6].copy()
        else:
            fac = _MIN_FACTOR if not math.isfinite(en) else max(_MIN_FACTOR, _SAFETY * en ** -0.2)
            h = hs * fac
            if abs(h) < cfg.h_min:
                raise StepSizeUnderflow(
                    f"step size {abs(h)!r} fell below h_min={cfg.h_min!r} at tau={t!r}",
                    tau=t, h=abs(h))
    return knots, states, segments
