"""The initial datum q(x), its sampled form on [-b, b] and its tail integrals."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.special import j0

from .numerics import UniformGrid, cumulative_integral, newton_cotes_6

__all__ = [
    "PotentialInputError",
    "Potential",
    "TailIntegrals",
    "FaddeevReport",
    "build_potential",
    "check_faddeev",
    "tail_integrals",
    "zero_potential",
    "gaussian_odd",
    "soliton",
    "piecewise_bessel",
    "BUILTINS",
    "builtin_potential",
    "potential_from_file",
]

DEFAULT_B = 12.0
DEFAULT_NODES = 2401
DEFAULT_TAIL_THRESHOLD = 1e-10


class PotentialInputError(ValueError):
    """Invalid potential specification or non-finite samples."""

    def __init__(self, message: str, location: float | None = None):
        super().__init__(message)
        self.location = location


@dataclass(frozen=True)
class Potential:
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    b: float
    grid: UniformGrid
    values: np.ndarray = field(repr=False)
    tail_threshold: float = DEFAULT_TAIL_THRESHOLD
    name: str = "custom"

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def h(self) -> float:
        return self.grid.step

    @property
    def origin_index(self) -> int:
        return (self.grid.count - 1) // 2

    @property
    def endpoint_magnitude(self) -> float:
        """max |q(+-b)|, the visible size of the discarded tail."""
        return float(max(abs(self.values[0]), abs(self.values[-1])))

    def __call__(self, x):
        return self.evaluator(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class TailIntegrals:
    """``right[i] = int_{x_i}^{inf} q`` and ``left[i] = int_{-inf}^{x_i} q`` on the potential grid."""

    x: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)
    left: np.ndarray = field(repr=False)

    @property
    def total(self) -> float:
        return float(self.left[-1])

    def right_at(self, x) -> np.ndarray:
        return np.interp(x, self.x, self.right)

    def left_at(self, x) -> np.ndarray:
        return np.interp(x, self.x, self.left)


@dataclass(frozen=True)
class FaddeevReport:
    alpha: float
    interior: float
    tail_estimate: float
    converged: bool

    @property
    def value(self) -> float:
        return self.interior + self.tail_estimate


def build_potential(
    evaluator: Callable,
    b: float = DEFAULT_B,
    node_count: int = DEFAULT_NODES,
    tail_threshold: float = DEFAULT_TAIL_THRESHOLD,
    name: str = "custom",
) -> Potential:
    """Sample ``evaluator`` on a uniform grid over [-b, b].

    ``node_count`` must be odd so that x = 0 is a grid node; the Jost
    problems are split there.
    """
    if not b > 0:
        raise PotentialInputError(f"support radius b must be positive, got {b}")
    if node_count < 101:
        raise PotentialInputError(f"node_count must be at least 101, got {node_count}")
    if node_count % 2 == 0:
        raise PotentialInputError(f"node_count must be odd so that x = 0 is a node, got {node_count}")
    grid = UniformGrid(-float(b), float(b), int(node_count))
    x = grid.nodes
    x[(node_count - 1) // 2] = 0.0
    values = np.asarray(evaluator(x), dtype=float)
    if values.shape != x.shape:
        values = np.broadcast_to(values, x.shape).copy()
    bad = ~np.isfinite(values)
    if bad.any():
        where = float(x[np.argmax(bad)])
        raise PotentialInputError(f"potential is not finite at x={where:.17g}", where)
    pot = Potential(evaluator, float(b), grid, values, tail_threshold, name)
    if pot.endpoint_magnitude > tail_threshold:
        warnings.warn(
            f"|q(+-b)| = {pot.endpoint_magnitude:.3e} exceeds tail threshold {tail_threshold:.1e}; "
            "truncation to [-b, b] is visible",
            RuntimeWarning,
        )
    return pot


def _tail_extrapolation(x_end: float, w_end: float, w_in: float, x_in: float) -> float:
    """Tail integral beyond |x_end| of a weighted integrand, assuming power-law decay."""
    if w_end == 0.0:
        return 0.0
    if w_in <= 0.0:
        return np.inf
    p = -np.log(w_end / w_in) / np.log(abs(x_end) / abs(x_in))
    if p <= 1.0:
        return np.inf
    return w_end * abs(x_end) / (p - 1.0)


def check_faddeev(pot: Potential, alpha: float = 1.0) -> FaddeevReport:
    """Estimate int (1+|x|)^alpha |q| dx and flag a divergent tail."""
    x = pot.x
    w = (1.0 + np.abs(x)) ** alpha * np.abs(pot.values)
    interior = float(newton_cotes_6(w, pot.grid))
    k = max(1, pot.grid.count // 20)
    tail = _tail_extrapolation(x[-1], w[-1], w[-1 - k], x[-1 - k]) + _tail_extrapolation(
        x[0], w[0], w[k], x[k]
    )
    converged = bool(np.isfinite(tail) and (tail == 0.0 or tail <= 0.5 * interior))
    return FaddeevReport(float(alpha), interior, float(tail), converged)


def tail_integrals(pot: Potential) -> TailIntegrals:
    """Running integrals anchored at +b (right) and -b (left); q is taken as zero beyond."""
    left = cumulative_integral(pot.values, pot.grid, "from_left")
    right = -cumulative_integral(pot.values, pot.grid, "from_right")
    return TailIntegrals(pot.x, right, left)


# Built-in potentials -------------------------------------------------------


def zero_potential(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def gaussian_odd(x):
    x = np.asarray(x, dtype=float)
    return x * np.exp(-x * x)


def soliton(c: float = np.pi):
    """Reflectionless well -(c/2) sech^2(sqrt(c) x / 2)."""
    if not c > 0:
        raise PotentialInputError(f"soliton speed c must be positive, got {c}")

    def q(x):
        x = np.asarray(x, dtype=float)
        return -0.5 * c / np.cosh(0.5 * np.sqrt(c) * x) ** 2

    return q


def piecewise_bessel(x):
    """e^x cos 4x for x < 0 and e^{-x} J0(2x) for x >= 0 (kink at the origin)."""
    x = np.asarray(x, dtype=float)
    neg = x < 0
    out = np.empty_like(x)
    out[neg] = np.exp(x[neg]) * np.cos(4.0 * x[neg])
    out[~neg] = np.exp(-x[~neg]) * j0(2.0 * x[~neg])
    return out


BUILTINS = ("zero", "gaussian", "soliton", "piecewise")


def builtin_potential(name: str, c: float = np.pi, **kwargs) -> Potential:
    """Build one of :data:`BUILTINS` (``gaussian`` is x e^{-x^2})."""
    table = {
        "zero": zero_potential,
        "gaussian": gaussian_odd,
        "soliton": soliton(c) if name == "soliton" else None,
        "piecewise": piecewise_bessel,
    }
    if name not in table:
        raise PotentialInputError(f"unknown potential {name!r}; choose from {', '.join(BUILTINS)}")
    label = f"soliton(c={c:g})" if name == "soliton" else name
    return build_potential(table[name], name=label, **kwargs)


def potential_from_file(path: str | Path, **kwargs) -> Potential:
    """Two-column text file (x, q); interpolated by a cubic spline, zero outside the data."""
    data = np.loadtxt(path, ndmin=2)
    if data.shape[1] != 2:
        raise PotentialInputError(f"{path}: expected two columns (x, q), got {data.shape[1]}")
    order = np.argsort(data[:, 0])
    xs, qs = data[order, 0], data[order, 1]
    if np.any(np.diff(xs) <= 0):
        raise PotentialInputError(f"{path}: duplicate abscissae")
    spl = make_interp_spline(xs, qs, k=3)

    def q(x):
        x = np.asarray(x, dtype=float)
        inside = (x >= xs[0]) & (x <= xs[-1])
        out = np.zeros_like(x)
        out[inside] = spl(x[inside])
        return out

    return build_potential(q, name=Path(path).name, **kwargs)
