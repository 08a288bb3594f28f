"""Inverse scattering through the truncated Fourier-Laguerre systems.

For every x the (+) system gives a_0(x) and the (-) system gives b_0(x);
the potential follows from q = (a_0'' - a_0') / (a_0 + 1) or
q = (b_0'' + b_0') / (b_0 + 1) after spline differentiation.

Continuous parts of the kernels are Fourier integrals of the reflection
coefficients; they are computed on the unit circle z = e^{i theta} with the
periodic trapezoidal rule, where the rational weights turn into powers of z
and (z + 1).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .numerics import differentiate, fit_spline, periodic_trapezoid
from .scatter import ScatteringData

__all__ = [
    "KernelRangeError",
    "SolveError",
    "RecoverySingularityError",
    "TruncatedSystem",
    "RecoveredPotential",
    "circle_kernel_integral",
    "assemble_system",
    "assemble_systems",
    "solve_first_component",
    "first_components",
    "recover_potential",
    "select_sides",
    "truncation_indicator",
    "DEFAULT_NS",
    "DEFAULT_DX",
]

log = logging.getLogger(__name__)

DEFAULT_NS = 5
DEFAULT_DX = 0.02
MAX_COND = 1e12
IMAG_TOL = 1e-9
# Extra x-range solved beyond each side's interval, so spline derivatives at
# the window edges and at the stitch point are taken in the interior.
EDGE_MARGIN = 0.5
# Denominator c + 1 below which a point is handed to the other system.
SWITCH_BELOW = 0.5


class KernelRangeError(OverflowError):
    def __init__(self, message: str, x: float | None = None):
        super().__init__(message)
        self.x = x


class SolveError(np.linalg.LinAlgError):
    def __init__(self, message: str, x: float | None = None, cond: float | None = None):
        super().__init__(message)
        self.x = x
        self.cond = cond


class RecoverySingularityError(ZeroDivisionError):
    def __init__(self, message: str, x: float | None = None):
        super().__init__(message)
        self.x = x


def _circle_weights(theta: np.ndarray):
    z = np.exp(1j * theta)
    interior = np.abs(np.abs(theta) - np.pi) > 0
    return z, interior


def circle_kernel_integral(theta, samples, x: float, m: int, n_power: int, sign: int = 1) -> complex:
    """int s(rho) e^{2 i sign rho x} (1/2 + i rho)^m / (1/2 - i rho)^n_power d rho on the circle.

    After z = e^{i theta} the integrand is
    ``s * exp(sign * x (z - 1)/(z + 1)) * z^(m+1) * (z + 1)^(n_power - m - 2)``.
    A sample at theta = -pi (rho infinite) contributes its limit 0.
    """
    if n_power - m < 1:
        raise ValueError(f"need n_power - m >= 1, got m={m}, n_power={n_power}")
    theta = np.asarray(theta, dtype=float)
    z, interior = _circle_weights(theta)
    integrand = np.zeros(theta.size, dtype=complex)
    zi = z[interior]
    phase = np.exp(1j * sign * x * np.tan(0.5 * theta[interior]))  # (z-1)/(z+1) = i tan(theta/2)
    integrand[interior] = samples[interior] * phase * zi ** (m + 1) * (zi + 1.0) ** (n_power - m - 2)
    return complex(periodic_trapezoid(integrand))


@dataclass(frozen=True)
class TruncatedSystem:
    """(I + K) u = rhs at one x; ``side`` is '+' (a-system) or '-' (b-system)."""

    x: float
    side: str
    matrix: np.ndarray
    rhs: np.ndarray
    imag_residue: float = 0.0

    @property
    def size(self) -> int:
        return self.rhs.size

    @property
    def cond(self) -> float:
        return float(np.linalg.cond(self.matrix))


def _continuous_moments(data: ScatteringData, xs: np.ndarray, Ns: int, side: str):
    """Circle integrals / (2 pi) for the Hankel entries (powers 0..2Ns) and rhs (0..Ns), all x at once."""
    theta = data.theta
    s = data.s_plus if side == "+" else data.s_minus
    sign = 1 if side == "+" else -1
    z, interior = _circle_weights(theta)
    th, zi, si = theta[interior], z[interior], s[interior]
    powers = zi[None, :] ** np.arange(1, 2 * Ns + 2)[:, None]  # z^(j+1), j = 0..2Ns
    kern = np.vstack([si * powers, si * powers[: Ns + 1] / (zi + 1.0)])
    tan_half = np.tan(0.5 * th)
    n = theta.size
    out = np.empty((xs.size, kern.shape[0]), dtype=complex)
    chunk = max(1, 2_000_000 // max(th.size, 1))
    for lo in range(0, xs.size, chunk):
        ph = np.exp(1j * sign * np.outer(xs[lo : lo + chunk], tan_half))
        out[lo : lo + chunk] = ph @ kern.T
    out *= 1.0 / n  # (2 pi / n) from the trapezoid, 1 / (2 pi) from the kernel definition
    return out[:, : 2 * Ns + 1], out[:, 2 * Ns + 1 :]


def _discrete_moments(data: ScatteringData, xs: np.ndarray, Ns: int, side: str):
    tau = data.tau
    alpha = data.alpha_plus if side == "+" else data.alpha_minus
    hank = np.zeros((xs.size, 2 * Ns + 1))
    vec = np.zeros((xs.size, Ns + 1))
    if tau.size == 0:
        return hank, vec
    expo = (-2.0 if side == "+" else 2.0) * np.outer(xs, tau)
    if np.any(expo + np.log(alpha)[None, :] > 700.0):
        bad = xs[np.argmax((expo + np.log(alpha)[None, :] > 700.0).any(axis=1))]
        raise KernelRangeError(f"alpha e^(-+2 tau x) overflows at x={bad:.6g}", float(bad))
    weight = alpha[None, :] * np.exp(expo)  # (nx, K)
    beta = (0.5 - tau) / (0.5 + tau)
    bpow = beta[None, :] ** np.arange(2 * Ns + 1)[:, None]  # (2Ns+1, K)
    hank = weight @ (bpow / (0.5 + tau) ** 2).T
    vec = weight @ (bpow[: Ns + 1] / (0.5 + tau)).T
    return hank, vec


def assemble_systems(data: ScatteringData, xs, Ns: int = DEFAULT_NS, side: str = "+"):
    """Matrices I + K and right-hand sides for every x in ``xs``.

    Returns ``(matrices, rhs, imag_residue)`` with shapes (nx, Ns+1, Ns+1),
    (nx, Ns+1) and (nx,).
    """
    if side not in ("+", "-"):
        raise ValueError(f"side must be '+' or '-', got {side!r}")
    if Ns < 0:
        raise ValueError(f"Ns must be non-negative, got {Ns}")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ch, cv = _continuous_moments(data, xs, Ns, side)
    dh, dv = _discrete_moments(data, xs, Ns, side)
    j = np.arange(Ns + 1)
    hankel_idx = j[:, None] + j[None, :]
    sign_mn = (-1.0) ** hankel_idx
    sign_m = (-1.0) ** (j + 1)
    hank = dh + ch
    vec = dv + cv
    K = sign_mn[None] * hank[:, hankel_idx]
    rhs = sign_m[None] * vec
    imag = np.maximum(np.abs(K.imag).max(axis=(1, 2)), np.abs(rhs.imag).max(axis=1))
    if np.any(imag > IMAG_TOL):
        log.warning("kernel imaginary residue %.3e exceeds %.0e", imag.max(), IMAG_TOL)
    mats = np.eye(Ns + 1)[None] + K.real
    return mats, rhs.real, imag


def assemble_system(data: ScatteringData, x: float, Ns: int = DEFAULT_NS, side: str = "+") -> TruncatedSystem:
    mats, rhs, imag = assemble_systems(data, [x], Ns, side)
    return TruncatedSystem(float(x), side, mats[0], rhs[0], float(imag[0]))


def solve_first_component(system: TruncatedSystem, max_cond: float = MAX_COND) -> tuple[float, float]:
    """Component 0 of the solution (a_0 or b_0) and the residual max-norm."""
    cond = system.cond
    if not np.isfinite(cond) or cond > max_cond:
        raise SolveError(f"system at x={system.x:.6g} is ill-conditioned (cond={cond:.3e})", system.x, cond)
    sol = np.linalg.solve(system.matrix, system.rhs)
    resid = float(np.abs(system.matrix @ sol - system.rhs).max())
    return float(sol[0]), resid


def _solve_batch(data: ScatteringData, xs, Ns: int, side: str, max_cond: float):
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    mats, rhs, _ = assemble_systems(data, xs, Ns, side)
    cond = np.linalg.cond(mats)
    bad = ~np.isfinite(cond) | (cond > max_cond)
    if bad.any():
        i = int(np.argmax(bad))
        raise SolveError(f"system at x={xs[i]:.6g} is ill-conditioned (cond={cond[i]:.3e})", float(xs[i]), float(cond[i]))
    sol = np.linalg.solve(mats, rhs[..., None])[..., 0]
    resid = np.abs(np.einsum("kij,kj->ki", mats, sol) - rhs).max(axis=1)
    return sol, cond, resid


def first_components(data: ScatteringData, xs, Ns: int = DEFAULT_NS, side: str = "+", max_cond: float = MAX_COND):
    """Batched :func:`solve_first_component`; returns (values, condition numbers, residuals)."""
    sol, cond, resid = _solve_batch(data, xs, Ns, side, max_cond)
    return sol[:, 0], cond, resid


def truncation_indicator(solutions: np.ndarray) -> np.ndarray:
    """Size of the trailing components of truncated solutions, shape (nx, Ns+1) -> (nx,).

    Slowly decaying coefficients signal that the dropped part of the
    infinite system still matters.
    """
    return np.abs(solutions[:, -2:]).sum(axis=1)


@dataclass(frozen=True)
class RecoveredPotential:
    """Recovered q on ``x``; ``side`` is +1 where the a-system was used, -1 for the b-system."""

    x: np.ndarray = field(repr=False)
    coefficient: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)
    side: np.ndarray = field(repr=False)
    stitch_residual: float = 0.0
    max_cond: float = 0.0
    t: float = 0.0

    def save(self, path: str | Path) -> None:
        """Four columns: x, a_0 or b_0, q, side flag (+1 a-system, -1 b-system)."""
        header = f"t={self.t:.16e} stitch_residual={self.stitch_residual:.6e}\nx coefficient q side"
        np.savetxt(path, np.column_stack([self.x, self.coefficient, self.q, self.side]), fmt="%.16e", header=header)

    @classmethod
    def load(cls, path: str | Path) -> "RecoveredPotential":
        arr = np.loadtxt(path, ndmin=2)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3].astype(int))


def _q_from_coefficient(xs, values, sign: float, order: int, where):
    """q = (c'' - sign c') / (c + 1) from a spline through (xs, values), evaluated at ``where``.

    Returns (q, c); q is nan where |c + 1| < 1e-8.
    """
    spl = fit_spline(xs, values, order)
    c = spl(where)
    dc = differentiate(spl, 1, where)
    d2c = differentiate(spl, 2, where)
    denom = c + 1.0
    ok = np.abs(denom) >= 1e-8
    q = np.full(np.shape(c), np.nan)
    np.divide(d2c - sign * dc, denom, out=q, where=ok)
    return q, c


def _uniform_cover(lo: float, hi: float, dx: float) -> np.ndarray:
    n = max(int(np.ceil((hi - lo) / dx - 1e-9)), 6)
    return np.linspace(lo, hi, n + 1)


def select_sides(x, indicator_plus, indicator_minus, denom_plus, denom_minus, split: float = 0.0,
                 switch_below: float = SWITCH_BELOW):
    """Per-point choice of system: +1 for the a-system, -1 for the b-system.

    A side is scored by its truncation indicator over its denominator c + 1
    (infinite where c + 1 <= 0).  Each half-line x < split, x >= split takes
    the side with the smaller median score; ties keep the b-system on the
    left and the a-system on the right.  Pointwise, where the chosen
    denominator falls below ``switch_below`` and the other one is larger,
    the other side is used; this steps around the zeros of a_0 + 1 and
    b_0 + 1 that travel with solitons.
    """
    x = np.asarray(x, dtype=float)
    dp = np.asarray(denom_plus, dtype=float)
    dm = np.asarray(denom_minus, dtype=float)

    def score(ind, den):
        safe = np.where(den > 0, den, 1.0)
        return np.where(den > 0, (np.asarray(ind, dtype=float) + 1e-15) / safe, np.inf)

    sp, sm = score(indicator_plus, dp), score(indicator_minus, dm)
    side = np.empty(x.size, dtype=int)
    for mask, default in ((x < split, -1), (x >= split, 1)):
        if not mask.any():
            continue
        a, b = np.median(sp[mask]), np.median(sm[mask])
        side[mask] = default if a == b else (1 if a < b else -1)
    chosen = np.where(side == 1, dp, dm)
    other = np.where(side == 1, dm, dp)
    flip = (chosen < switch_below) & (other > chosen)
    return np.where(flip, -side, side)


def recover_potential(
    data: ScatteringData,
    x_grid,
    Ns: int = DEFAULT_NS,
    spline_order: int = 6,
    dx: float | None = None,
    split: float = 0.0,
    max_cond: float = MAX_COND,
) -> RecoveredPotential:
    """Recover q on ``x_grid`` from scattering data.

    Both truncated systems are solved on a uniform grid of spacing ``dx``
    (default: the spacing of ``x_grid``) that extends past the window, so
    spline derivatives are taken in the interior.  The a-side gives
    q = (a'' - a') / (a + 1) and the b-side q = (b'' + b') / (b + 1); the
    side used at each point is chosen by :func:`select_sides`.  The stitch
    residual is the disagreement of the two sides at ``split``.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.ndim != 1 or x_grid.size < 2 or np.any(np.diff(x_grid) <= 0):
        raise ValueError("x_grid must be a strictly increasing 1-D array")
    if Ns < 0:
        raise ValueError(f"Ns must be nonnegative, got {Ns}")
    if dx is None:
        dx = float(np.min(np.diff(x_grid)))
    lo, hi = float(x_grid[0]), float(x_grid[-1])
    xs = _uniform_cover(min(lo, split) - EDGE_MARGIN, max(hi, split) + EDGE_MARGIN, dx)
    probe = np.append(x_grid, split)

    results = {}
    conds = []
    for flag, sgn, label in ((1, 1.0, "+"), (-1, -1.0, "-")):
        sol, cond, _ = _solve_batch(data, xs, Ns, label, max_cond)
        conds.append(float(cond.max()))
        q, c = _q_from_coefficient(xs, sol[:, 0], sgn, spline_order, probe)
        ind = np.interp(probe, xs, truncation_indicator(sol))
        results[flag] = (q, c, ind)

    (q_p, c_p, i_p), (q_m, c_m, i_m) = results[1], results[-1]
    side = select_sides(probe, i_p, i_m, c_p + 1.0, c_m + 1.0, split)
    q = np.where(side == 1, q_p, q_m)
    coef = np.where(side == 1, c_p, c_m)
    bad = ~np.isfinite(q[:-1])
    if bad.any():
        where = float(x_grid[np.argmax(bad)])
        raise RecoverySingularityError(f"coefficient + 1 vanishes at x={where:.6g} on both sides", where)
    stitch = abs(q_p[-1] - q_m[-1])
    stitch = float(stitch) if np.isfinite(stitch) else float("inf")
    return RecoveredPotential(x_grid, coef[:-1], q[:-1], side[:-1], stitch, max(conds), data.t)
