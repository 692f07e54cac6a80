"""Eigenvalue classification and damped Newton iteration for planar flows."""

from __future__ import annotations

from typing import Callable

import numpy as np

__all__ = ["EIG_TOL", "classify_eigenvalues", "newton_2d"]

EIG_TOL = 1e-10


def classify_eigenvalues(eigs, tol: float = EIG_TOL) -> str:
    """Label a planar linearization by the signs of its eigenvalue real parts.

    Returns ``"sink"`` if both real parts are below ``-tol``, ``"source"`` if
    both exceed ``tol``, ``"saddle"`` for opposite strict signs and
    ``"center_candidate"`` whenever some real part lies within ``tol`` of 0.
    """
    re = np.real(np.asarray(eigs))
    if np.all(re < -tol):
        return "sink"
    if np.all(re > tol):
        return "source"
    if np.any(re < -tol) and np.any(re > tol):
        return "saddle"
    return "center_candidate"


def newton_2d(f: Callable, jac: Callable, x0, tol: float = 1e-12, max_iter: int = 50):
    """Damped Newton iteration for ``f(x) = 0`` in two unknowns.

    The step is halved (up to 30 times) while the residual does not drop.

    Returns
    -------
    x : ndarray
        Final iterate.
    residual : float
        Max-norm of ``f(x)``.
    converged : bool
        Whether ``residual <= tol`` was reached within ``max_iter`` iterations.
    """
    x = np.asarray(x0, dtype=float).copy()
    fx = np.asarray(f(x), dtype=float)
    res = float(np.max(np.abs(fx)))
    for _ in range(max_iter):
        if res <= tol:
            return x, res, True
        J = np.asarray(jac(x), dtype=float)
        try:
            step = np.linalg.solve(J, -fx)
        except np.linalg.LinAlgError:
            return x, res, False
        if not np.all(np.isfinite(step)):
            return x, res, False
        alpha = 1.0
        for _ in range(30):
            xn = x + alpha * step
            try:
                fn = np.asarray(f(xn), dtype=float)
            except FloatingPointError:
                fn = None
            if fn is not None and np.all(np.isfinite(fn)):
                rn = float(np.max(np.abs(fn)))
                if rn < res:
                    break
            alpha *= 0.5
        else:
            return x, res, False
        x, fx, res = xn, fn, rn
    return x, res, res <= tol
