"""Two oscillators below the critical coupling, as a planar flow.

With ``w = w_1 - w_2`` and ``v`` the distance between the imaginary parts the
full two-oscillator model collapses to::

    dw/dt = omega - lam sin(w) cosh(v)
    dv/dt =       - lam cos(w) sinh(v)

For ``lam < omega`` the equilibria ``(2 k pi + pi/2, arccosh(omega/lam))`` are
surrounded by nested closed orbits. This module finds and checks those orbits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import BlowUp, MaxStepsExceeded, NoReturn, NotWeak
from .integrate import IntegratorConfig, Trajectory, find_section_crossing, integrate
from .model import V_MAX, ModelParams, pack, unpack, vector_field
from .model import pairwise_v as _pairwise_v

__all__ = [
    "PlanarState",
    "OrbitReport",
    "rhs_n2",
    "jacobian_n2",
    "equilibrium_n2",
    "lyapunov_F",
    "epsilon_band",
    "detect_periodic_orbit",
    "nested_orbits",
    "lift_check",
    "nullcline_hit_time",
]

ORBIT_CFG = IntegratorConfig(t_end=1e3, rtol=1e-9, atol=1e-12)
LIFT_CFG = IntegratorConfig(t_end=1e3, rtol=1e-11, atol=1e-13)


class PlanarState(NamedTuple):
    w: float
    v: float


def _alpha(omega: float, lam: float) -> float:
    if not (lam > 0 and omega > lam):
        raise NotWeak(f"need 0 < lambda < omega, got lambda={lam}, omega={omega}")
    g = omega / lam
    return math.log(g + math.sqrt(g * g - 1.0))


def rhs_n2(s, omega: float, lam: float, v_max: float = V_MAX):
    """``(dw/dt, dv/dt)`` of the planar two-oscillator flow.

    Accepts a single ``(w, v)`` pair or arrays of them (broadcast).

    Raises
    ------
    BlowUp
        If ``v`` exceeds ``v_max``.
    """
    w, v = np.asarray(s[0], dtype=float), np.asarray(s[1], dtype=float)
    vm = float(np.max(v)) if v.size else 0.0
    if vm > v_max:
        raise BlowUp(f"v={vm:.6g} exceeds v_max={v_max}", vm)
    wdot = omega - lam * np.sin(w) * np.cosh(v)
    vdot = -lam * np.cos(w) * np.sinh(v)
    if wdot.ndim == 0:
        return float(wdot), float(vdot)
    return wdot, vdot


def jacobian_n2(s, omega: float, lam: float) -> np.ndarray:
    w, v = float(s[0]), float(s[1])
    a = -lam * math.cos(w) * math.cosh(v)
    b = -lam * math.sin(w) * math.sinh(v)
    return np.array([[a, b], [-b, a]])


def equilibrium_n2(omega: float, lam: float, k: int = 0) -> PlanarState:
    """The equilibrium ``(2 k pi + pi/2, arccosh(omega/lam))``.

    Raises
    ------
    NotWeak
        Unless ``0 < lam < omega``.
    """
    return PlanarState(2 * k * math.pi + math.pi / 2, _alpha(omega, lam))


def lyapunov_F(s, k: int, gamma: float):
    """``(w - w_k)(gamma - sin w cosh v) - (v - alpha) cos w sinh v``.

    This is ``dL/dt / lam`` for ``L = ((w - w_k)^2 + (v - alpha)^2) / 2``.
    Vectorized over ``s = (w, v)``.
    """
    if gamma <= 1:
        raise NotWeak(f"gamma must exceed 1, got {gamma}")
    w, v = np.asarray(s[0], dtype=float), np.asarray(s[1], dtype=float)
    wk = 2 * k * math.pi + math.pi / 2
    alpha = math.acosh(gamma)
    out = (w - wk) * (gamma - np.sin(w) * np.cosh(v)) - (v - alpha) * np.cos(w) * np.sinh(v)
    return float(out) if out.ndim == 0 else out


def _band_ok(cond, alpha: float, eps: float, n: int = 4001) -> bool:
    v = np.linspace((1 - eps) * alpha, (1 + eps) * alpha, n)
    return bool(np.all(cond(v)))


def _bisect_eps(cond, alpha: float, cap: float, tol: float) -> float:
    if _band_ok(cond, alpha, cap):
        return cap
    lo, hi = 0.0, cap
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _band_ok(cond, alpha, mid):
            lo = mid
        else:
            hi = mid
    return lo


def epsilon_band(gamma: float, tol: float = 1e-8, cap: float = 0.5) -> float:
    """Largest ``eps <= cap`` keeping both sign conditions of the energy argument.

    On ``v in [(1 - eps) alpha, (1 + eps) alpha]`` we need
    ``|(v - alpha) sinh v| < pi gamma / 2`` and
    ``2 cosh v - (v - alpha) sinh v > 0``. Each is bisected separately (the
    band is checked on a 4001-point grid) and the smaller bound returned.
    """
    if gamma <= 1:
        raise NotWeak(f"gamma must exceed 1, got {gamma}")
    alpha = math.acosh(gamma)

    def c1(v):
        return np.abs((v - alpha) * np.sinh(v)) < math.pi * gamma / 2

    def c2(v):
        return 2 * np.cosh(v) - (v - alpha) * np.sinh(v) > 0

    return min(_bisect_eps(c1, alpha, cap, tol), _bisect_eps(c2, alpha, cap, tol))


@dataclass
class OrbitReport:
    """A closed orbit started at ``(w_k, v0)`` above the equilibrium.

    ``crossings`` holds the lower section point ``(w_k, u0)`` reached at half
    the period and the upper point where the orbit closes.
    """

    omega: float
    lam: float
    k: int
    v0: float
    alpha: float
    period: float
    closure_error: float
    symmetry_error: float
    v_symmetry_error: float
    crossings: tuple
    ring_halfwidths: tuple
    max_v: float
    trajectory: Optional[Trajectory] = field(default=None, repr=False)

    @property
    def u0(self) -> float:
        return self.crossings[0].v

    @property
    def decelerates(self) -> bool:
        """``alpha - u0 < v0 - alpha`` with a 1e-9 margin."""
        lo, hi = self.ring_halfwidths[1], self.ring_halfwidths[0]
        return bool(0 < lo and lo < hi - 1e-9)

    def samples(self, dt: float = 0.01):
        """``(t, w, v)`` on a uniform grid over one period."""
        n = max(2, int(math.ceil(self.period / dt)) + 1)
        t = np.linspace(0.0, self.period, n)
        s = self.trajectory(t)
        return t, s[:, 0], s[:, 1]

    def to_dict(self) -> dict:
        return {
            "omega": self.omega, "lambda": self.lam, "k": self.k, "v0": self.v0,
            "alpha": self.alpha, "period": self.period,
            "closure_error": self.closure_error, "symmetry_error": self.symmetry_error,
            "v_symmetry_error": self.v_symmetry_error,
            "crossings": [{"w": c.w, "v": c.v} for c in self.crossings],
            "ring_halfwidths": list(self.ring_halfwidths),
            "decelerates": self.decelerates, "max_v": self.max_v,
        }


def detect_periodic_orbit(v0: float, omega: float, lam: float,
                          cfg: IntegratorConfig = ORBIT_CFG, k: int = 0,
                          n_sym: int = 2001) -> OrbitReport:
    """Integrate from ``(w_k, v0)`` until the orbit returns to the section ``w = w_k``.

    The orbit first moves left (``dw/dt < 0`` above the equilibrium), crosses
    the section upward at ``(w_k, u0)`` after time ``T``, and closes with a
    downward crossing at ``2T``. ``cfg.t_end`` acts as a time cap.

    Raises
    ------
    NotWeak
        Unless ``0 < lam < omega``.
    NoReturn
        If the second crossing is not reached within the cap or step budget.
    """
    alpha = _alpha(omega, lam)
    if not v0 > alpha:
        raise ValueError(f"v0={v0} must exceed alpha={alpha:.12g}")
    wk = 2 * k * math.pi + math.pi / 2

    def f(t, s):
        return np.array(rhs_n2(s, omega, lam))

    seen = {"up": False}

    def stop(t, s):
        if not seen["up"]:
            seen["up"] = s[0] > wk
            return False
        return s[0] <= wk

    try:
        traj = integrate(f, [wk, v0], cfg, stop=stop)
    except MaxStepsExceeded as exc:
        raise NoReturn(f"no return to the section: {exc}") from exc
    cross = find_section_crossing(traj, lambda s: s[0] - wk, "any")
    ups = [c for c in cross if c[1][1] < alpha]
    downs = [c for c in cross if c[1][1] > alpha and ups and c[0] > ups[0][0]]
    if not ups or not downs:
        raise NoReturn(f"orbit from v0={v0} did not close before t={traj.t_end:g}")
    t_half, s_low = ups[0]
    period, s_top = downs[0]
    closure = float(np.hypot(s_top[0] - wk, s_top[1] - v0))

    tau = np.linspace(0.0, t_half, n_sym)
    left, right = traj(t_half - tau), traj(np.minimum(t_half + tau, traj.t_end))
    sym_w = float(np.max(np.abs(left[:, 0] + right[:, 0] - 2 * wk)))
    sym_v = float(np.max(np.abs(left[:, 1] - right[:, 1])))

    u0 = float(s_low[1])
    t_grid = np.linspace(0.0, period, n_sym)
    max_v = float(np.max(traj(t_grid)[:, 1]))
    return OrbitReport(
        omega=omega, lam=lam, k=k, v0=float(v0), alpha=alpha, period=float(period),
        closure_error=closure, symmetry_error=sym_w, v_symmetry_error=sym_v,
        crossings=(PlanarState(float(s_low[0]), u0), PlanarState(float(s_top[0]), float(s_top[1]))),
        ring_halfwidths=(float(v0 - alpha), float(alpha - u0)),
        max_v=max_v, trajectory=traj,
    )


def nested_orbits(omega: float, lam: float, offsets=(0.4, 0.2, 0.1),
                  cfg: IntegratorConfig = ORBIT_CFG, k: int = 0) -> list:
    """Orbits started at ``v0 = alpha + offset`` for each offset, in the given order."""
    alpha = _alpha(omega, lam)
    return [detect_periodic_orbit(alpha + d, omega, lam, cfg, k) for d in offsets]


def lift_check(orbit: OrbitReport, omega: float, lam: float, direction=(1.0, 1.05, 0.0),
               cfg: IntegratorConfig = LIFT_CFG, n_samples: int = 2001) -> float:
    """Max deviation between the planar orbit and the full two-oscillator model.

    The full model runs with natural frequencies ``(omega/2, -omega/2)``,
    ``q_1(0) = w_k + v0 * u`` (``u`` the unit vector along ``direction``) and
    ``q_2(0) = 0``. The planar flow is re-integrated with the same settings
    over one period, and the largest gap in ``(w_1 - w_2, v_12)`` over a
    uniform sample is returned.
    """
    d = np.asarray(direction, dtype=float)
    nd = float(np.linalg.norm(d))
    if nd == 0:
        raise ValueError("direction must be nonzero")
    wk = 2 * orbit.k * math.pi + math.pi / 2
    imag = orbit.v0 * d / nd
    s0 = pack([wk, 0.0], [imag[0], 0.0], [imag[1], 0.0], [imag[2], 0.0])
    params = ModelParams([omega / 2, -omega / 2], lam)
    run_cfg = IntegratorConfig(method=cfg.method, t_end=orbit.period, dt=cfg.dt,
                               rtol=cfg.rtol, atol=cfg.atol, max_steps=cfg.max_steps)
    full = integrate(vector_field(params), s0, run_cfg)

    def f(t, s):
        return np.array(rhs_n2(s, omega, lam))

    planar = integrate(f, [wk, orbit.v0], run_cfg)
    t = np.linspace(0.0, orbit.period, n_samples)
    fs = full(t)
    w, _, _, _ = unpack(fs)
    dw = w[:, 0] - w[:, 1]
    v = _pairwise_v(fs)[:, 0, 1]
    ps = planar(t)
    return float(max(np.max(np.abs(dw - ps[:, 0])), np.max(np.abs(v - ps[:, 1]))))


def nullcline_hit_time(w0: float, omega: float, lam: float, k: int = 0,
                       t_cap: float = 1e4) -> float:
    """Time for a trajectory started on ``dw/dt = 0`` left of ``w_k`` to reach ``v = alpha``.

    ``w0`` must lie in ``(w_k - pi/2, w_k)``; the start point is
    ``(w0, arccosh(gamma / sin w0))``.

    Raises
    ------
    NoReturn
        If ``v = alpha`` is not reached before ``t_cap``.
    """
    alpha = _alpha(omega, lam)
    wk = 2 * k * math.pi + math.pi / 2
    if not wk - math.pi / 2 < w0 < wk:
        raise ValueError("w0 must lie in (w_k - pi/2, w_k)")
    v0 = math.acosh(omega / (lam * math.sin(w0)))

    def f(t, s):
        return np.array(rhs_n2(s, omega, lam))

    cfg = IntegratorConfig(t_end=t_cap, rtol=1e-10, atol=1e-12)
    try:
        traj = integrate(f, [w0, v0], cfg, stop=lambda t, s: s[1] <= alpha)
    except MaxStepsExceeded as exc:
        raise NoReturn(str(exc)) from exc
    hits = find_section_crossing(traj, lambda s: s[1] - alpha, "down")
    if not hits:
        raise NoReturn(f"v stayed above alpha until t={traj.t_end:g}")
    return hits[0][0]
