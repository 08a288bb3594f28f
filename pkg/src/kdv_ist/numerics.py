"""Shared numerical kernels.

Composite 6-point Newton-Cotes quadrature (total and cumulative), the
periodic trapezoidal rule on the unit circle, spline differentiation and
bracketed root search.  Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.interpolate import BSpline, make_interp_spline
from scipy.optimize import brentq

__all__ = [
    "DegenerateGridError",
    "QuadratureError",
    "RootEvaluationError",
    "UniformGrid",
    "SplineModel",
    "newton_cotes_6",
    "cumulative_integral",
    "circle_nodes",
    "periodic_trapezoid",
    "fit_spline",
    "differentiate",
    "bracketed_roots",
]


class DegenerateGridError(ValueError):
    """Grid too small or malformed for the requested rule."""


class QuadratureError(ArithmeticError):
    """A quadrature encountered a non-finite integrand sample."""

    def __init__(self, message: str, location: float | None = None):
        super().__init__(message)
        self.location = location


class RootEvaluationError(ArithmeticError):
    """The function handed to the root scanner returned a non-finite value."""

    def __init__(self, message: str, location: float | None = None):
        super().__init__(message)
        self.location = location


@dataclass(frozen=True)
class UniformGrid:
    """Equispaced nodes ``start, start + h, ..., stop``."""

    start: float
    stop: float
    count: int

    def __post_init__(self):
        if self.count < 6:
            raise DegenerateGridError(f"uniform grid needs at least 6 nodes, got {self.count}")
        if not self.stop > self.start:
            raise DegenerateGridError(f"grid stop {self.stop} must exceed start {self.start}")

    @property
    def step(self) -> float:
        return (self.stop - self.start) / (self.count - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


@lru_cache(maxsize=None)
def _panel_weights() -> np.ndarray:
    """W[k, j] = integral over [0, k] of the j-th Lagrange basis on nodes 0..5 (unit spacing)."""
    nodes = np.arange(6.0)
    weights = np.zeros((6, 6))
    for j in range(6):
        others = np.delete(nodes, j)
        basis = np.polynomial.Polynomial.fromroots(others) / np.prod(nodes[j] - others)
        antider = basis.integ()
        weights[:, j] = antider(nodes) - antider(0.0)
    return weights


def _check_samples(values, h: float | None = None) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim < 1 or arr.shape[-1] < 6:
        raise DegenerateGridError("Newton-Cotes 6-point rule needs at least 6 samples")
    if h is not None and not h > 0:
        raise DegenerateGridError(f"grid step must be positive, got {h}")
    return arr


def cumulative_integral(values, grid: UniformGrid | float, direction: str = "from_left") -> np.ndarray:
    """Running composite Newton-Cotes integral on a uniform grid.

    Returns the antiderivative anchored to zero at the chosen end:
    ``from_left`` gives ``F[i] = int_{x_0}^{x_i} f`` and ``from_right`` gives
    ``F[i] = int_{x_last}^{x_i} f = -int_{x_i}^{x_last} f``.  Interior nodes of each 5-interval panel
    use the exact integral of the panel's quintic interpolant.  If the number
    of intervals is not a multiple of 5, the trailing intervals are covered by
    the quintic through the last six nodes.

    The last axis of ``values`` is the grid axis; leading axes are batched.
    """
    h = grid.step if isinstance(grid, UniformGrid) else float(grid)
    f = _check_samples(values, h)
    if direction == "from_right":
        return -cumulative_integral(f[..., ::-1], h, "from_left")[..., ::-1]
    if direction != "from_left":
        raise ValueError(f"direction must be 'from_left' or 'from_right', got {direction!r}")

    w = _panel_weights()
    m = f.shape[-1] - 1
    panels, rem = divmod(m, 5)
    out = np.zeros(f.shape, dtype=np.result_type(f, float))

    if panels:
        # Stack panels as (..., panels, 6) and integrate each from its left node.
        idx = 5 * np.arange(panels)[:, None] + np.arange(6)[None, :]
        blocks = f[..., idx]
        partial = h * np.einsum("...pj,kj->...pk", blocks, w)
        starts = np.concatenate(
            [np.zeros(f.shape[:-1] + (1,), out.dtype), np.cumsum(partial[..., -1], axis=-1)],
            axis=-1,
        )
        body = starts[..., :-1, None] + partial[..., 1:]
        out[..., 1 : 5 * panels + 1] = body.reshape(f.shape[:-1] + (5 * panels,))
    if rem:
        lo = m - 5
        block = f[..., lo:]
        k0 = 5 - rem
        tail = h * np.einsum("...j,kj->...k", block, w[k0 + 1 :] - w[k0])
        out[..., 5 * panels + 1 :] = out[..., 5 * panels, None] + tail
    return out


def newton_cotes_6(values, grid: UniformGrid | float) -> complex | float:
    """Composite closed 6-point Newton-Cotes integral over the whole grid.

    Exact for polynomials of degree 5 on every panel.
    """
    total = cumulative_integral(values, grid, "from_left")[..., -1]
    return total.item() if np.ndim(total) == 0 else total


def circle_nodes(n_nodes: int, shifted: bool = False) -> np.ndarray:
    """Uniform nodes on the circle parametrised by theta in [-pi, pi).

    Unshifted: ``theta_j = -pi + 2 pi j / n``; node 0 is the endpoint
    ``-pi`` (identified with ``+pi``).  Shifted: midpoints
    ``theta_j = -pi + 2 pi (j + 1/2) / n``, all strictly interior and
    symmetric under ``theta -> -theta``; for even n neither 0 nor +-pi is a node.
    """
    if n_nodes < 16:
        raise DegenerateGridError(f"periodic trapezoid needs at least 16 nodes, got {n_nodes}")
    if not shifted:
        return -np.pi + 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    # Built from the positive half so that theta_j = -theta_{n-1-j} exactly;
    # phases like exp(i rho^3 t) amplify any rounding asymmetry.
    pos = np.pi * (2.0 * np.arange(n_nodes // 2) + (1.0 if n_nodes % 2 == 0 else 2.0)) / n_nodes
    mid = [0.0] if n_nodes % 2 else []
    return np.concatenate([-pos[::-1], mid, pos])


def periodic_trapezoid(
    f, n_nodes: int | None = None, endpoint_value: complex | None = None, shifted: bool = False
) -> complex:
    """Trapezoidal approximation of ``int_{-pi}^{pi} f(theta) dtheta``.

    ``f`` is either a callable, evaluated on :func:`circle_nodes`, or an
    array of samples already taken on those nodes (last axis).  On the
    unshifted grid ``endpoint_value``, when given, replaces the sample at
    ``theta = -pi`` (the caller's one-sided limit there).
    """
    if callable(f):
        if n_nodes is None:
            raise ValueError("n_nodes is required when f is callable")
        theta = circle_nodes(n_nodes, shifted)
        samples = np.empty(n_nodes, dtype=complex)
        if shifted:
            samples[:] = f(theta)
        else:
            samples[1:] = f(theta[1:])
            samples[0] = f(theta[:1])[0] if endpoint_value is None else endpoint_value
    else:
        samples = np.array(f, dtype=complex)
        n_nodes = samples.shape[-1]
        theta = circle_nodes(n_nodes, shifted)
        if endpoint_value is not None and not shifted:
            samples[..., 0] = endpoint_value
    bad = ~np.isfinite(samples)
    if bad.any():
        where = np.argwhere(bad)[0][-1]
        raise QuadratureError(f"non-finite integrand at theta={theta[where]:.17g}", float(theta[where]))
    return (2.0 * np.pi / n_nodes) * samples.sum(axis=-1)


@dataclass(frozen=True)
class SplineModel:
    """Interpolating B-spline; ``order`` is degree + 1 (4 cubic, 6 quintic)."""

    knots: np.ndarray
    order: int
    coefficients: np.ndarray

    @property
    def _bspline(self) -> BSpline:
        return BSpline(self.knots, self.coefficients, self.order - 1, extrapolate=False)

    def __call__(self, x):
        return self._bspline(x)


def fit_spline(x, y, order: int = 6) -> SplineModel:
    """Interpolating spline of the given order (4 = cubic, 6 = quintic)."""
    if order not in (4, 6):
        raise ValueError(f"spline order must be 4 or 6, got {order}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape[:1]:
        raise ValueError("x must be 1-D and match the leading dimension of y")
    if np.any(np.diff(x) <= 0):
        raise ValueError("spline abscissae must be strictly increasing (duplicate or unsorted x)")
    if not np.all(np.isfinite(y)):
        raise ValueError("spline ordinates must be finite")
    spl = make_interp_spline(x, y, k=order - 1)
    return SplineModel(knots=spl.t, order=order, coefficients=spl.c)


def differentiate(model: SplineModel, k: int, x):
    """k-th derivative of a fitted spline at ``x``; ``k`` must not exceed order - 2."""
    if k < 0 or k > model.order - 2:
        raise ValueError(f"derivative order {k} not available for spline of order {model.order}")
    return model._bspline.derivative(k)(x) if k else model(x)


def bracketed_roots(
    f: Callable[[float], float],
    interval: tuple[float, float],
    scan_count: int = 2048,
    tol: float = 1e-13,
) -> list[float]:
    """All roots of ``f`` signalled by sign changes on a uniform scan.

    Each bracket is refined with Brent's method and accepted only when
    ``|f(r)| <= tol``.  Rejected brackets (poles, or noise above ``tol``)
    are reported through :mod:`warnings`.
    """
    if scan_count < 64:
        raise ValueError(f"scan_count must be at least 64, got {scan_count}")
    lo, hi = interval
    xs = np.linspace(lo, hi, scan_count)
    fs = np.empty(scan_count)
    for i, x in enumerate(xs):
        v = f(float(x))
        if not np.isfinite(v):
            raise RootEvaluationError(f"non-finite function value at {x:.17g}", float(x))
        fs[i] = v

    roots: list[float] = []
    for i in range(scan_count - 1):
        a, b = xs[i], xs[i + 1]
        fa, fb = fs[i], fs[i + 1]
        if fa == 0.0:
            r = float(a)
        elif fa * fb < 0.0:
            r = brentq(f, a, b, xtol=4 * np.finfo(float).eps, rtol=4 * np.finfo(float).eps, maxiter=200)
        else:
            continue
        if abs(f(r)) > tol:
            warnings.warn(f"sign change near {r:.17g} rejected: |f| = {abs(f(r)):.3e} > tol", RuntimeWarning)
            continue
        if roots and r - roots[-1] < (xs[1] - xs[0]):
            continue
        roots.append(float(r))
    if fs[-1] == 0.0 and (not roots or xs[-1] - roots[-1] >= xs[1] - xs[0]):
        roots.append(float(xs[-1]))
    return roots
