"""Synchronization metrics, the real-part energy functional, and decay-bound checks.

All verdicts are empirical: they describe the sampled run over
``[t_0, t_end]`` and nothing beyond it.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import HypothesisViolated
from .integrate import Trajectory
from .model import ModelParams, critical_coupling, rhs_full, unpack

__all__ = [
    "SyncReport",
    "DecayCheck",
    "pairwise_q_diff",
    "pairwise_qdot_diff",
    "w_spread",
    "component_spreads",
    "classify",
    "lyapunov_energy",
    "check_exponential_decay",
    "default_delta0",
    "transient_time",
    "last_local_max",
    "fit_decay",
]

SAMPLE_DT = 0.01


def _max_pairwise(s):
    s = np.asarray(s, dtype=float)
    parts = np.stack(unpack(s), axis=-2)  # (..., 4, N)
    d = parts[..., :, None, :] - parts[..., :, :, None]
    return np.max(np.sqrt(np.sum(d * d, axis=-3)), axis=(-2, -1))


def pairwise_q_diff(s):
    """``max_{n,m} |q_n - q_m|`` for one flat state or a stack of them."""
    out = _max_pairwise(s)
    return float(out) if np.ndim(out) == 0 else out


def pairwise_qdot_diff(s, params: ModelParams):
    """``max_{n,m} |dq_n/dt - dq_m/dt|`` evaluated through the vector field."""
    out = _max_pairwise(rhs_full(s, params))
    return float(out) if np.ndim(out) == 0 else out


def w_spread(s):
    w = unpack(s)[0]
    return np.max(w, axis=-1) - np.min(w, axis=-1)


def component_spreads(s):
    """Max-minus-min of x, y and z separately; shape ``(..., 3)``."""
    _, x, y, z = unpack(s)
    return np.stack([np.ptp(c, axis=-1) for c in (x, y, z)], axis=-1)


def fit_decay(t, values, floor: float = 1e-12) -> Optional[dict]:
    """Least-squares fit of ``log(values) ~ a - rate * t`` above ``floor``."""
    t = np.asarray(t)
    values = np.asarray(values)
    keep = values > floor
    if np.count_nonzero(keep) < 3:
        return None
    tt, ly = t[keep], np.log(values[keep])
    slope, intercept = np.polyfit(tt, ly, 1)
    resid = ly - (slope * tt + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return {"rate": float(-slope), "r_squared": r2}


def last_local_max(values, tol: float = 1e-9) -> int:
    """Index of the last local maximum of a sampled curve.

    Rises smaller than ``tol`` are treated as noise. By construction the
    curve is non-increasing (to within ``tol``) after the returned index.
    """
    v = np.asarray(values, dtype=float)
    rises = np.nonzero(np.diff(v) > tol)[0]
    return 0 if rises.size == 0 else int(rises[-1] + 1)


@dataclass
class SyncReport:
    horizon: tuple
    max_phase_diff_sup: float
    final_phase_spread: float
    final_freq_spread: float
    tail_phase_spread: float
    tail_freq_spread: float
    phase_locked: bool
    freq_synced: bool
    phase_synced: bool
    decay_fit: Optional[dict]
    thresholds: dict

    @property
    def verdict(self) -> dict:
        return {"phase_locked": self.phase_locked, "freq_synced": self.freq_synced,
                "phase_synced": self.phase_synced,
                "none": not (self.phase_locked or self.freq_synced or self.phase_synced)}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["horizon"] = list(self.horizon)
        d["verdict"] = self.verdict
        d["note"] = f"observed over [{self.horizon[0]:g}, {self.horizon[1]:g}]"
        return d


def classify(traj: Trajectory, params: ModelParams, lock_bound: float = 10.0,
             sync_eps: float = 1e-4, tail_fraction: float = 0.2,
             sample_dt: float = SAMPLE_DT) -> SyncReport:
    """Phase-locking, frequency and phase synchronization verdicts for a run.

    The supremum over time is replaced by the maximum over a uniform sample
    with spacing ``sample_dt``; the "limit" conditions are checked on the
    final ``tail_fraction`` of that sample.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must be in (0, 1]")
    if len(traj) == 1:
        t, states = traj.times, traj.states
    else:
        t, states = traj.sample(sample_dt)
    dq = pairwise_q_diff(states)
    dqdot = pairwise_qdot_diff(states, params)
    dq, dqdot = np.atleast_1d(dq), np.atleast_1d(dqdot)
    t_cut = t[-1] - tail_fraction * (t[-1] - t[0])
    tail = t >= t_cut
    sup = float(np.max(dq))
    locked = bool(np.isfinite(sup) and sup <= lock_bound)
    tail_phase = float(np.max(dq[tail]))
    tail_freq = float(np.max(dqdot[tail]))
    imag = np.max(component_spreads(states), axis=-1)
    return SyncReport(
        horizon=(float(t[0]), float(t[-1])),
        max_phase_diff_sup=sup,
        final_phase_spread=float(dq[-1]),
        final_freq_spread=float(dqdot[-1]),
        tail_phase_spread=tail_phase,
        tail_freq_spread=tail_freq,
        phase_locked=locked,
        freq_synced=bool(tail_freq <= sync_eps),
        phase_synced=bool(locked and tail_phase <= sync_eps),
        decay_fit=fit_decay(t, np.atleast_1d(imag)),
        thresholds={"lock_bound": lock_bound, "sync_eps": sync_eps,
                    "tail_fraction": tail_fraction, "sample_dt": sample_dt},
    )


def lyapunov_energy(traj: Trajectory, params: ModelParams, sample_dt: float = SAMPLE_DT):
    """Running integral of ``sum_n (dw_n/dt)^2`` by the trapezoid rule.

    Returns ``(t, H)`` on a uniform sample of the trajectory. ``H`` is
    nondecreasing because the integrand is a sum of squares.
    """
    t, states = traj.sample(sample_dt)
    wdot = unpack(rhs_full(states, params))[0]
    integrand = np.sum(wdot * wdot, axis=-1)
    return t, cumulative_trapezoid(integrand, t, initial=0.0)


@dataclass
class DecayCheck:
    holds: bool
    margin: float
    delta0: float
    rate: float
    t_start: float

    def to_dict(self) -> dict:
        return asdict(self)


def check_exponential_decay(traj: Trajectory, lam: float, delta0: float,
                            t_start: float = 0.0,
                            sample_dt: float = SAMPLE_DT) -> DecayCheck:
    """Check the Gronwall bound on the imaginary-part spreads.

    While every real-part gap stays below ``pi/2 - delta0``, each of the x, y
    and z spreads must satisfy ``spread(t) <= spread(t_start) *
    exp(-lam * sin(delta0) * (t - t_start))``. ``margin`` is the smallest
    value of bound minus actual over all samples and components.

    Raises
    ------
    HypothesisViolated
        If the real-part spread reaches ``pi/2 - delta0`` at some sampled
        ``t >= t_start``.
    """
    if not 0 < delta0 < math.pi / 2:
        raise ValueError("delta0 must lie in (0, pi/2)")
    t, states = traj.sample(sample_dt, t_start=t_start)
    ws = w_spread(states)
    bad = np.nonzero(ws >= math.pi / 2 - delta0)[0]
    if bad.size:
        tb = float(t[bad[0]])
        raise HypothesisViolated(
            f"real-part spread {ws[bad[0]]:.6g} >= pi/2 - delta0 at t={tb:.6g}", tb)
    spreads = component_spreads(states)  # (T, 3)
    rate = lam * math.sin(delta0)
    bound = spreads[0][None, :] * np.exp(-rate * (t - t[0]))[:, None]
    # absolute slack for interpolation/roundoff when the spread has already collapsed
    slack = 1e-12
    diff = bound - spreads
    margin = float(np.min(diff))
    return DecayCheck(holds=bool(margin >= -slack), margin=margin, delta0=float(delta0),
                      rate=rate, t_start=float(t[0]))


def default_delta0(traj: Trajectory, t_after: float = 0.0, margin: float = 0.01,
                   sample_dt: float = SAMPLE_DT) -> float:
    """``pi/2 - (max real-part spread after t_after) - margin``."""
    _, states = traj.sample(sample_dt, t_start=t_after)
    return math.pi / 2 - float(np.max(w_spread(states))) - margin


def transient_time(traj: Trajectory, params: ModelParams, delta: float, delta0: float,
                   sample_dt: float = SAMPLE_DT) -> float:
    """Upper bound on when the real-part spread falls below ``pi/2 - delta0``.

    Uses ``T_c = t* + (beta - pi/2 + delta0) / (lam sin(delta) - lambda_c)``
    where ``t*`` is the first sampled time the spread exceeds
    ``pi/2 - delta0`` and ``beta`` the spread there. Returns the start time
    if the spread never exceeds the threshold.
    """
    rate = params.lam * math.sin(delta) - critical_coupling(params)
    if rate <= 0:
        raise ValueError("need lam * sin(delta) > lambda_c")
    t, states = traj.sample(sample_dt)
    ws = w_spread(states)
    over = np.nonzero(ws > math.pi / 2 - delta0)[0]
    if over.size == 0:
        return float(t[0])
    i = over[0]
    beta = float(ws[i])
    return float(t[i]) + (beta - math.pi / 2 + delta0) / rate
