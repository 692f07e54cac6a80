"""Explicit Runge-Kutta integration over flat real vectors.

Two methods are provided: classical fixed-step RK4 and the adaptive
Dormand-Prince 5(4) pair. Both store every accepted step together with the
vector-field value there, which gives a cubic Hermite dense output for
resampling and event location.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import BlowUp, MaxStepsExceeded

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "step_rk4",
    "integrate",
    "find_section_crossing",
]

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_A = [np.array(row) for row in _A]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B_LOW

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration settings.

    For ``rk4_fixed`` ``dt`` is the step; for ``rk45_adaptive`` it is the
    initial guess (``None`` picks one automatically).
    """

    method: str = "rk45_adaptive"
    t_end: float = 1.0
    dt: Optional[float] = None
    rtol: float = 1e-9
    atol: float = 1e-12
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.method not in ("rk4_fixed", "rk45_adaptive"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "rk4_fixed" and not (self.dt and self.dt > 0):
            raise ValueError("rk4_fixed needs a positive dt")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.rtol < 1e-14:
            raise ValueError("rtol must be >= 1e-14")
        if self.atol < 1e-16:
            raise ValueError("atol must be >= 1e-16")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    def to_dict(self) -> dict:
        return {"method": self.method, "t_end": self.t_end, "dt": self.dt,
                "rtol": self.rtol, "atol": self.atol, "max_steps": self.max_steps}


@dataclass
class Trajectory:
    """Stored steps of an integration run.

    ``derivs[i]`` is the vector field at ``(times[i], states[i])``.
    """

    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def __call__(self, t):
        """Cubic Hermite interpolation at time(s) ``t``."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        ts = self.times
        if len(ts) == 1:
            out = np.repeat(self.states[:1], len(t), axis=0)
            return out[0] if scalar else out
        if np.any(t < ts[0] - 1e-12) or np.any(t > ts[-1] + 1e-12):
            raise ValueError("interpolation time outside the trajectory")
        idx = np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(ts) - 2)
        t0, t1 = ts[idx], ts[idx + 1]
        h = (t1 - t0)[:, None]
        s = ((t - t0) / (t1 - t0))[:, None]
        y0, y1 = self.states[idx], self.states[idx + 1]
        f0, f1 = self.derivs[idx], self.derivs[idx + 1]
        s2, s3 = s * s, s * s * s
        out = ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * f0
               + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * f1)
        return out[0] if scalar else out

    def sample(self, dt: float, t_start: float = 0.0):
        """Uniform resampling with spacing at most ``dt``; always includes the end."""
        t0 = max(t_start, float(self.times[0]))
        n = max(1, int(math.ceil((self.t_end - t0) / dt - 1e-12)))
        t = np.linspace(t0, self.t_end, n + 1)
        return t, self(t)


def step_rk4(f: Callable, s, t: float, dt: float):
    """One classical fourth-order Runge-Kutta step of ``s' = f(t, s)``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    s = np.asarray(s, dtype=float)
    k1 = np.asarray(f(t, s), dtype=float)
    return _rk4_from(f, s, t, dt, k1)


def _rk4_from(f, s, t, dt, k1):
    k2 = np.asarray(f(t + dt / 2, s + dt / 2 * k1), dtype=float)
    k3 = np.asarray(f(t + dt / 2, s + dt / 2 * k2), dtype=float)
    k4 = np.asarray(f(t + dt, s + dt * k3), dtype=float)
    return s + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _initial_dt(f, t0, y0, f0, rtol, atol, span):
    # Hairer, Norsett & Wanner, II.4 starting-step heuristic
    scale = atol + rtol * np.abs(y0)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + h0 * f0
    f1 = np.asarray(f(t0 + h0, y1), dtype=float)
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def integrate(f: Callable, s0, cfg: IntegratorConfig, t0: float = 0.0,
              stop: Optional[Callable] = None) -> Trajectory:
    """Integrate ``s' = f(t, s)`` from ``t0`` to ``cfg.t_end``.

    Parameters
    ----------
    f : callable
        Vector field ``f(t, s) -> ds/dt``.
    s0 : array_like
        Initial state.
    cfg : IntegratorConfig
    t0 : float
        Start time.
    stop : callable, optional
        ``stop(t, s) -> bool`` checked after every accepted step; integration
        ends early once it returns true.

    Raises
    ------
    MaxStepsExceeded
        Step budget exhausted before ``t_end``.
    BlowUp
        Raised by ``f``; the partial trajectory is attached as ``.trajectory``.
    """
    y = np.array(s0, dtype=float).reshape(-1)
    span = cfg.t_end - t0
    if span <= 0:
        raise ValueError("t_end must be after t0")
    times, states, derivs = [t0], [y.copy()], []
    meta = {"method": cfg.method, "steps_taken": 0, "steps_rejected": 0, "rhs_evals": 0}

    def ff(t, s):
        meta["rhs_evals"] += 1
        return np.asarray(f(t, s), dtype=float)

    def partial():
        if not derivs:
            derivs.append(np.zeros_like(y))
        return Trajectory(np.array(times), np.array(states), np.array(derivs), dict(meta))

    try:
        fy = ff(t0, y)
        derivs.append(fy)
        if cfg.method == "rk4_fixed":
            _run_rk4(ff, y, fy, t0, cfg, times, states, derivs, meta, stop)
        else:
            _run_dopri(ff, y, fy, t0, cfg, times, states, derivs, meta, stop)
    except BlowUp as exc:
        exc.trajectory = partial()
        raise
    except MaxStepsExceeded as exc:
        exc.trajectory = partial()
        raise
    return Trajectory(np.array(times), np.array(states), np.array(derivs), meta)


def _run_rk4(f, y, fy, t, cfg, times, states, derivs, meta, stop):
    t_end = cfg.t_end
    n_steps = max(1, int(math.ceil((t_end - t) / cfg.dt - 1e-9)))
    if n_steps > cfg.max_steps:
        raise MaxStepsExceeded(f"{n_steps} fixed steps exceed max_steps={cfg.max_steps}")
    t_start = t
    for i in range(1, n_steps + 1):
        t_new = t_end if i == n_steps else t_start + i * cfg.dt
        y = _rk4_from(f, y, t, t_new - t, fy)
        t = t_new
        fy = f(t, y)
        times.append(t)
        states.append(y)
        derivs.append(fy)
        meta["steps_taken"] += 1
        if stop is not None and stop(t, y):
            break


def _run_dopri(f, y, fy, t, cfg, times, states, derivs, meta, stop):
    t_end = cfg.t_end
    rtol, atol = cfg.rtol, cfg.atol
    h = cfg.dt if cfg.dt is not None else _initial_dt(f, t, y, fy, rtol, atol, t_end - t)
    k = np.empty((7, y.size))
    while t < t_end:
        if meta["steps_taken"] >= cfg.max_steps:
            raise MaxStepsExceeded(f"reached max_steps={cfg.max_steps} at t={t:.6g}")
        h = min(h, t_end - t)
        last = t + h >= t_end
        k[0] = fy
        for i in range(1, 7):
            k[i] = f(t + _C[i] * h, y + h * (_A[i] @ k[:i]))
        y_new = y + h * (_B @ k)
        err_vec = h * (_E @ k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(err_vec) / scale)) if y.size else 0.0
        if not math.isfinite(err):
            err = 1e10
        if err <= 1.0:
            t = t_end if last else t + h
            y = y_new
            fy = k[6].copy()  # first-same-as-last
            times.append(t)
            states.append(y)
            derivs.append(fy)
            meta["steps_taken"] += 1
            fac = _FAC_MAX if err == 0 else min(_FAC_MAX, max(_FAC_MIN, _SAFETY * err ** -0.2))
            h *= fac
            if stop is not None and stop(t, y):
                break
        else:
            meta["steps_rejected"] += 1
            h *= max(_FAC_MIN, _SAFETY * err ** -0.2)
            if h < 1e-14 * max(1.0, abs(t)):
                raise MaxStepsExceeded(f"step size underflow at t={t:.6g}")


def find_section_crossing(traj: Trajectory, g: Callable, direction: str = "any",
                          tol: float = 1e-10, max_iter: int = 200):
    """Locate sign changes of ``g(state)`` along a trajectory.

    ``direction`` is ``"up"`` (g goes from negative to positive), ``"down"``
    or ``"any"``. Each bracket between stored samples is refined by bisection
    on the Hermite interpolant until ``|g| < tol``.

    Returns
    -------
    list of (float, ndarray)
        Crossing times and interpolated states, in time order.
    """
    if direction not in ("up", "down", "any"):
        raise ValueError(f"bad direction {direction!r}")
    gv = np.array([g(s) for s in traj.states], dtype=float)
    out = []
    for i in range(len(gv) - 1):
        a, b = gv[i], gv[i + 1]
        up = a < 0 <= b
        down = a > 0 >= b
        if not ((up and direction in ("up", "any")) or (down and direction in ("down", "any"))):
            continue
        lo, hi = traj.times[i], traj.times[i + 1]
        glo = a
        if b == 0:
            out.append((float(hi), traj.states[i + 1].copy()))
            continue
        tm, sm = lo, traj.states[i]
        for _ in range(max_iter):
            tm = 0.5 * (lo + hi)
            sm = traj(tm)
            gm = g(sm)
            if abs(gm) < tol or hi - lo < 1e-15 * max(1.0, abs(tm)):
                break
            if (gm < 0) == (glo < 0):
                lo, glo = tm, gm
            else:
                hi = tm
        out.append((float(tm), np.asarray(sm)))
    return out
