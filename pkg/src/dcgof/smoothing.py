"""Penalized cubic B-spline regression with GCV penalty selection.

Knots sit at the distinct abscissae; the penalty is the integrated squared
second derivative, assembled exactly by two-point Gauss-Legendre quadrature
per knot interval (the integrand is piecewise quadratic).  The penalty level
is chosen by minimizing generalized cross-validation over a logarithmic
grid, or mapped from a fixed smoothness parameter in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline

from .exceptions import DataError, NumericalError

__all__ = ["SmoothingSpline", "fit_smoothing_spline", "GCV_GRID_DECADES"]

_DEGREE = 3
GCV_GRID_DECADES = 8  # grid spans 10^-4 .. 10^4 around the trace-ratio pivot
_GCV_GRID_SIZE = 41


@dataclass
class SmoothingSpline:
    """Fitted penalized spline; evaluate with __call__ / derivative."""

    knots: np.ndarray
    coef: np.ndarray
    penalty: float
    edof: float
    gcv: float
    x_range: tuple[float, float]

    def __call__(self, x, deriv: int = 0) -> np.ndarray:
        spl = BSpline(self.knots, self.coef, _DEGREE, extrapolate=True)
        if deriv:
            spl = spl.derivative(deriv)
        return spl(np.asarray(x, dtype=np.float64))


def _knot_vector(xs: np.ndarray) -> np.ndarray:
    return np.concatenate([np.repeat(xs[0], _DEGREE), xs, np.repeat(xs[-1], _DEGREE)])


def _design(x: np.ndarray, knots: np.ndarray) -> np.ndarray:
    return BSpline.design_matrix(x, knots, _DEGREE).toarray()


def _curvature_penalty(knots: np.ndarray) -> np.ndarray:
    """Omega[i, j] = integral of B_i'' B_j'' over the knot span (exact)."""
    nbasis = len(knots) - _DEGREE - 1
    lo, hi = knots[_DEGREE], knots[-_DEGREE - 1]
    breaks = np.unique(knots[(knots >= lo) & (knots <= hi)])
    # 2-point Gauss-Legendre is exact for the piecewise-quadratic integrand
    gl_nodes = np.array([-1.0, 1.0]) / np.sqrt(3.0)
    omega = np.zeros((nbasis, nbasis))
    eye = np.eye(nbasis)
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        half = (b - a) / 2.0
        pts = (a + b) / 2.0 + half * gl_nodes
        D2 = np.column_stack([
            BSpline(knots, eye[j], _DEGREE).derivative(2)(pts)
            for j in range(nbasis)
        ])
        omega += half * (D2.T @ D2)
    return omega


def _solve_penalized(B, y, omega_root, lam):
    stacked = np.vstack([B, np.sqrt(lam) * omega_root])
    rhs = np.concatenate([y, np.zeros(omega_root.shape[0])])
    coef, *_ = np.linalg.lstsq(stacked, rhs, rcond=None)
    return coef


def _edof(B, omega, lam):
    BtB = B.T @ B
    M = BtB + lam * omega
    try:
        return float(np.trace(np.linalg.solve(M, BtB)))
    except np.linalg.LinAlgError:
        return float(np.trace(np.linalg.pinv(M) @ BtB))


def _gcv_score(B, y, omega, omega_root, lam):
    coef = _solve_penalized(B, y, omega_root, lam)
    rss = float(np.sum((y - B @ coef) ** 2))
    edof = _edof(B, omega, lam)
    n = len(y)
    denom = max(n - edof, 1e-10)
    return n * rss / denom**2, coef, edof


def fit_smoothing_spline(x, y, mode: str = "gcv", smoothness: float = 0.3,
                         penalty: float | None = None) -> SmoothingSpline:
    """Fit y on x by a penalized cubic B-spline.

    mode 'gcv' picks the penalty minimizing generalized cross-validation on a
    41-point logarithmic grid spanning 8 decades; mode 'fixed' maps
    ``smoothness`` in [0, 1] monotonically onto the penalty scale via
    lam = r * 256^(3 s - 1) with r the trace ratio of the design Gram to the
    curvature penalty matrix; mode 'penalty' uses ``penalty`` directly.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DataError("x and y must have matching shapes")
    xs = np.unique(x)
    if len(xs) < 4:
        raise DataError("need at least 4 distinct abscissae to fit a cubic spline")

    knots = _knot_vector(xs)
    B = _design(x, knots)
    if np.linalg.matrix_rank(B.T @ B) == 0:
        raise NumericalError(f"rank-deficient basis; knots: {xs}")
    omega = _curvature_penalty(knots)

    # symmetric square root for the stacked least-squares formulation
    w, V = np.linalg.eigh(omega)
    w = np.clip(w, 0.0, None)
    omega_root = (V * np.sqrt(w)) @ V.T

    tr_omega = float(np.trace(omega))
    r = float(np.trace(B.T @ B)) / max(tr_omega, 1e-300)

    if mode == "gcv":
        grid = r * np.logspace(-GCV_GRID_DECADES / 2, GCV_GRID_DECADES / 2,
                               _GCV_GRID_SIZE)
        best = None
        for lam in grid:
            score, coef, edof = _gcv_score(B, y, omega, omega_root, lam)
            if best is None or score < best[0]:
                best = (score, coef, edof, lam)
        score, coef, edof, lam = best
    elif mode == "fixed":
        if not 0.0 <= smoothness <= 1.0:
            raise DataError("smoothness must lie in [0, 1]")
        lam = r * 256.0 ** (3.0 * smoothness - 1.0)
        score, coef, edof = _gcv_score(B, y, omega, omega_root, lam)
    elif mode == "penalty":
        if penalty is None or penalty < 0:
            raise DataError("penalty mode needs a nonnegative penalty value")
        lam = float(penalty)
        score, coef, edof = _gcv_score(B, y, omega, omega_root, lam)
    else:
        raise DataError(f"unknown smoothing mode {mode!r}")

    return SmoothingSpline(knots=knots, coef=coef, penalty=float(lam),
                           edof=edof, gcv=float(score),
                           x_range=(float(xs[0]), float(xs[-1])))
