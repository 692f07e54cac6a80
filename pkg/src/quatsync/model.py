"""The N-oscillator quaternionic Kuramoto vector field.

Each oscillator carries a quaternion phase ``q_n = w_n + x_n i + y_n j + z_n k``
and obeys ``dq_n/dt = omega_n + (lambda/N) sum_m sin(q_m - q_n)``. Splitting the
quaternion sine into real and imaginary parts gives::

    dw_n/dt = omega_n + (lam/N) sum_m sin(w_m - w_n) cosh(v_mn)
    dx_n/dt =           (lam/N) sum_m cos(w_m - w_n) sinh(v_mn) (x_m - x_n) / v_mn

(and likewise for y, z), with ``v_mn`` the Euclidean distance between the
imaginary parts of oscillators m and n.

States are flat vectors ``[w_1..w_N, x_1..x_N, y_1..y_N, z_1..z_N]``. Every
function here also accepts a stack of states with shape ``(..., 4N)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUp
from .quaternion import sinhc

__all__ = [
    "ModelParams",
    "OscillatorState",
    "V_MAX",
    "pack",
    "unpack",
    "pairwise_v",
    "rhs_full",
    "vector_field",
    "to_rotating_frame",
    "critical_coupling",
]

V_MAX = 30.0


@dataclass(frozen=True)
class ModelParams:
    """Natural frequencies and coupling strength.

    ``lam`` may be zero (uncoupled oscillators); negative coupling is rejected.
    """

    omegas: np.ndarray
    lam: float
    v_max: float = field(default=V_MAX, compare=False)

    def __post_init__(self):
        om = np.array(self.omegas, dtype=float).reshape(-1)
        om.setflags(write=False)
        object.__setattr__(self, "omegas", om)
        if om.size < 2:
            raise ValueError("need at least two oscillators")
        if not np.all(np.isfinite(om)):
            raise ValueError("natural frequencies must be finite")
        if not (self.lam >= 0.0 and np.isfinite(self.lam)):
            raise ValueError(f"coupling must be finite and non-negative, got {self.lam}")

    @property
    def n_osc(self) -> int:
        return int(self.omegas.size)


@dataclass(frozen=True)
class OscillatorState:
    """Per-oscillator components at one instant."""

    w: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    @classmethod
    def from_flat(cls, s) -> "OscillatorState":
        return cls(*unpack(np.asarray(s, dtype=float)))

    def flat(self) -> np.ndarray:
        return pack(self.w, self.x, self.y, self.z)

    @property
    def n_osc(self) -> int:
        return len(self.w)


def pack(w, x, y, z) -> np.ndarray:
    return np.concatenate([np.asarray(c, dtype=float) for c in (w, x, y, z)], axis=-1)


def unpack(s):
    """Split a flat state (or a stack of them) into ``(w, x, y, z)`` views."""
    s = np.asarray(s, dtype=float)
    n4 = s.shape[-1]
    if n4 % 4:
        raise ValueError(f"state length {n4} is not a multiple of 4")
    n = n4 // 4
    return s[..., :n], s[..., n:2 * n], s[..., 2 * n:3 * n], s[..., 3 * n:]


def _differences(s):
    """Return ``dw, dimag, v`` with ``d*[..., n, m] = (*_m - *_n)``."""
    w, x, y, z = unpack(s)
    dw = w[..., None, :] - w[..., :, None]
    imag = np.stack([x, y, z], axis=-2)  # (..., 3, N)
    dimag = imag[..., None, :] - imag[..., :, None]  # (..., 3, N, N)
    v = np.sqrt(np.sum(dimag * dimag, axis=-3))
    return dw, dimag, v


def pairwise_v(s) -> np.ndarray:
    """Symmetric matrix of imaginary-part distances ``v_mn``."""
    return _differences(s)[2]


def rhs_full(s, params: ModelParams) -> np.ndarray:
    """Time derivative of the flat state ``s``.

    Raises
    ------
    BlowUp
        If any ``v_mn`` exceeds ``params.v_max``.
    """
    s = np.asarray(s, dtype=float)
    n = s.shape[-1] // 4
    if n != params.n_osc:
        raise ValueError(f"state has {n} oscillators, params have {params.n_osc}")
    dw, dimag, v = _differences(s)
    vmax = float(np.max(v)) if v.size else 0.0
    if vmax > params.v_max:
        raise BlowUp(f"imaginary distance {vmax:.6g} exceeds v_max={params.v_max}", vmax)
    k = params.lam / n
    wdot = params.omegas + k * np.sum(np.sin(dw) * np.cosh(v), axis=-1)
    # diagonal terms vanish because dimag is zero there and sinhc(0) = 1
    gain = np.cos(dw) * sinhc(v)
    imag_dot = k * np.sum(gain[..., None, :, :] * dimag, axis=-1)  # (..., 3, N)
    return np.concatenate([wdot, imag_dot[..., 0, :], imag_dot[..., 1, :],
                           imag_dot[..., 2, :]], axis=-1)


def vector_field(params: ModelParams):
    """Wrap :func:`rhs_full` as ``f(t, s)`` for the integrators."""

    def f(t, s):
        return rhs_full(s, params)

    return f


def to_rotating_frame(params: ModelParams) -> ModelParams:
    """Shift the natural frequencies to zero mean."""
    om = params.omegas - np.mean(params.omegas)
    return ModelParams(om, params.lam, params.v_max)


def critical_coupling(params: ModelParams) -> float:
    """Largest natural-frequency gap ``max(omega) - min(omega)``."""
    return float(np.max(params.omegas) - np.min(params.omegas))
