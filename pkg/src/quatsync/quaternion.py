"""Quaternion values, the Pauli-matrix embedding, and transcendental functions.

The embedding sends ``w + x i + y j + z k`` to::

    [[w - z*1j, -y - x*1j],
     [y - x*1j,  w + z*1j]]

so that ``1 -> I``, ``i -> -1j*sigma_x``, ``j -> -1j*sigma_y`` and
``k -> -1j*sigma_z``. Matrices of this shape form the set ``M`` of 2x2 complex
matrices with ``a == conj(d)`` and ``b == -conj(c)``.

Closed forms are evaluated in double precision. ``series_oracle`` sums the
matrix power series on the embedded value and is meant for testing only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotInM

__all__ = [
    "Quaternion",
    "embed",
    "unembed",
    "quat_exp",
    "quat_sin",
    "quat_cos",
    "series_oracle",
    "sinhc",
    "sinc",
    "TOL_EMBED",
]

TOL_EMBED = 1e-10
# below this the 1/rho factors switch to a Taylor polynomial
_SMALL = 1e-4


def sinhc(v):
    """``sinh(v)/v`` with the removable singularity at 0 filled in.

    Works elementwise on arrays. Uses ``1 + v^2/6 + v^4/120 + v^6/5040`` when
    ``|v| < 1e-4``.
    """
    v = np.asarray(v, dtype=float)
    small = np.abs(v) < _SMALL
    safe = np.where(small, 1.0, v)
    v2 = v * v
    taylor = 1.0 + v2 / 6.0 + v2 * v2 / 120.0 + v2 * v2 * v2 / 5040.0
    out = np.where(small, taylor, np.sinh(safe) / safe)
    return out if out.ndim else float(out)


def sinc(v):
    """Unnormalised ``sin(v)/v``, Taylor branch below ``1e-4``."""
    v = np.asarray(v, dtype=float)
    small = np.abs(v) < _SMALL
    safe = np.where(small, 1.0, v)
    v2 = v * v
    taylor = 1.0 - v2 / 6.0 + v2 * v2 / 120.0 - v2 * v2 * v2 / 5040.0
    out = np.where(small, taylor, np.sin(safe) / safe)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Quaternion:
    """Immutable quaternion ``w + x i + y j + z k``."""

    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def from_array(cls, a) -> "Quaternion":
        w, x, y, z = (float(c) for c in a)
        return cls(w, x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    @property
    def imag(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def norm(self) -> float:
        return math.hypot(self.w, self.x, self.y, self.z)

    def imag_norm(self) -> float:
        return math.hypot(self.x, self.y, self.z)

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return Quaternion(self.w + other.w, self.x + other.x,
                          self.y + other.y, self.z + other.z)

    __radd__ = __add__

    def __neg__(self):
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Quaternion(self.w * other, self.x * other,
                              self.y * other, self.z * other)
        o = _coerce(other)
        if o is NotImplemented:
            return o
        a1, b1, c1, d1 = self.w, self.x, self.y, self.z
        a2, b2, c2, d2 = o.w, o.x, o.y, o.z
        return Quaternion(
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        )

    def __rmul__(self, other):
        if isinstance(other, (int, float)):
            return self * other
        return NotImplemented


def _coerce(q) -> Quaternion:
    if isinstance(q, Quaternion):
        return q
    if isinstance(q, (int, float)):
        return Quaternion(float(q))
    return NotImplemented


def embed(q: Quaternion) -> np.ndarray:
    """Return the 2x2 complex matrix representing ``q``."""
    return np.array([
        [complex(q.w, -q.z), complex(-q.y, -q.x)],
        [complex(q.y, -q.x), complex(q.w, q.z)],
    ])


def unembed(m, tol: float = TOL_EMBED) -> Quaternion:
    """Inverse of :func:`embed`.

    Raises
    ------
    NotInM
        If ``a != conj(d)`` or ``b != -conj(c)`` beyond ``tol``.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise NotInM(f"expected a 2x2 matrix, got shape {m.shape}")
    a, b = m[0]
    c, d = m[1]
    dev = max(abs(a - np.conj(d)), abs(b + np.conj(c)))
    if dev > tol:
        raise NotInM(f"matrix is not in M (deviation {dev:.3e} > {tol:.1e})")
    # average the redundant entries so round trips are exact
    w = 0.5 * (a.real + d.real)
    z = 0.5 * (d.imag - a.imag)
    y = 0.5 * (c.real - b.real)
    x = -0.5 * (c.imag + b.imag)
    return Quaternion(float(w), float(x), float(y), float(z))


def quat_exp(q: Quaternion) -> Quaternion:
    rho = q.imag_norm()
    ew = math.exp(q.w)
    s = ew * sinc(rho)
    return Quaternion(ew * math.cos(rho), s * q.x, s * q.y, s * q.z)


def quat_sin(q: Quaternion) -> Quaternion:
    """``sin(w) cosh(rho) + cos(w) sinh(rho) u`` with ``u`` the unit imaginary direction."""
    rho = q.imag_norm()
    s = math.cos(q.w) * sinhc(rho)
    return Quaternion(math.sin(q.w) * math.cosh(rho), s * q.x, s * q.y, s * q.z)


def quat_cos(q: Quaternion) -> Quaternion:
    """``cos(w) cosh(rho) - sin(w) sinh(rho) u``.

    The minus sign follows from ``cos(w + u rho) = cos w cos(u rho) - sin w sin(u rho)``
    with ``u^2 = -1``; it is confirmed against :func:`series_oracle` in the tests.
    """
    rho = q.imag_norm()
    s = -math.sin(q.w) * sinhc(rho)
    return Quaternion(math.cos(q.w) * math.cosh(rho), s * q.x, s * q.y, s * q.z)


def series_oracle(q: Quaternion, fn: str, terms: int = 30) -> Quaternion:
    """Partial sum of the matrix power series of ``fn`` on ``embed(q)``.

    ``terms`` counts the nonzero terms of the series, so ``sin`` with one
    term is just ``A``. Thirty terms reach roundoff for ``|q| <= 4``.
    """
    if terms < 1:
        raise ValueError("terms must be >= 1")
    if fn not in ("exp", "sin", "cos"):
        raise ValueError(f"unknown function {fn!r}")
    a = embed(q)
    n_powers = terms if fn == "exp" else 2 * terms
    total = np.zeros((2, 2), dtype=complex)
    term = np.eye(2, dtype=complex)  # A^k / k!
    for k in range(n_powers):
        if k > 0:
            term = term @ a / k
        if fn == "exp":
            total += term
        elif fn == "sin" and k % 2 == 1:
            total += term if (k // 2) % 2 == 0 else -term
        elif fn == "cos" and k % 2 == 0:
            total += term if (k // 2) % 2 == 0 else -term
    return unembed(total)
