"""Cauchy problem for u_t - 6 u u_x + u_xxx = 0 through the scattering transform.

The direct problem is solved once for the initial datum; each output time
only needs the (cheap) evolution of the scattering data and one inverse
solve.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .glm import DEFAULT_DX, DEFAULT_NS, RecoveredPotential, recover_potential
from .jost import direct_coefficients
from .numerics import newton_cotes_6
from .potential import Potential, check_faddeev
from .scatter import DEFAULT_THETA_COUNT, ScatteringData, SeriesAtOrigin, direct_scattering, evolve

__all__ = [
    "StageError",
    "CauchyProblem",
    "TimeDiagnostics",
    "SolutionField",
    "window_grid",
    "default_window",
    "solve_cauchy",
    "analytic_soliton",
    "diagnostics",
]

DEFAULT_WINDOW = (-5.0, 7.0)
WIDE_WINDOW = (-7.0, 7.0)


class StageError(RuntimeError):
    """A numerical stage failed; carries the stage name, time and the original error."""

    def __init__(self, stage: str, t: float | None, cause: Exception):
        where = "" if t is None else f" at t={t:g}"
        super().__init__(f"{stage} stage failed{where}: {cause}")
        self.stage = stage
        self.t = t
        self.cause = cause


def default_window(potential_name: str) -> tuple[float, float]:
    return WIDE_WINDOW if potential_name.startswith("piecewise") else DEFAULT_WINDOW


def window_grid(lo: float, hi: float, dx: float = DEFAULT_DX) -> np.ndarray:
    """Integer multiples of ``dx`` inside [lo, hi], so that x = 0 is an exact node."""
    k0 = int(np.ceil(lo / dx - 1e-9))
    k1 = int(np.floor(hi / dx + 1e-9))
    return np.arange(k0, k1 + 1) * dx


@dataclass(frozen=True)
class CauchyProblem:
    potential: Potential
    times: Sequence[float] = (0.0,)
    window: tuple[float, float] = DEFAULT_WINDOW
    N: int = 64
    Ns: int = DEFAULT_NS
    theta_count: int = DEFAULT_THETA_COUNT
    dx: float = DEFAULT_DX

    def __post_init__(self):
        times = [float(t) for t in self.times]
        if not times:
            raise ValueError("at least one output time is required")
        if times != sorted(times) or times[0] < 0:
            raise ValueError(f"times must be sorted and nonnegative, got {times}")
        lo, hi = self.window
        b = self.potential.b
        if not (-b < lo < hi < b):
            raise ValueError(f"window ({lo}, {hi}) must lie inside (-{b}, {b})")
        object.__setattr__(self, "times", tuple(times))

    @property
    def x(self) -> np.ndarray:
        return window_grid(*self.window, self.dx)


@dataclass(frozen=True)
class TimeDiagnostics:
    t: float
    mass: float
    momentum: float
    max_cond: float
    stitch_residual: float
    seconds: float


@dataclass
class SolutionField:
    x: np.ndarray
    times: np.ndarray
    u: np.ndarray
    recovered: list[RecoveredPotential] = field(default_factory=list, repr=False)
    stage_seconds: dict[str, float] = field(default_factory=dict)
    data: ScatteringData | None = field(default=None, repr=False)

    def save(self, directory: str | Path, stem: str = "u") -> list[Path]:
        """Write the wide matrix ``<stem>.txt`` and one two-column file per time."""
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        wide = np.full((self.times.size + 1, self.x.size + 1), np.nan)
        wide[0, 1:] = self.x
        wide[1:, 0] = self.times
        wide[1:, 1:] = self.u
        paths = [out / f"{stem}.txt"]
        np.savetxt(paths[0], wide, fmt="%.16e", header="first row: x (first entry unused); then rows: t, u(x, t)")
        for t, row in zip(self.times, self.u):
            p = out / f"{stem}_t{t:g}.txt"
            np.savetxt(p, np.column_stack([self.x, row]), fmt="%.16e", header=f"t={t:.16e}\nx u")
            paths.append(p)
        return paths

    @classmethod
    def load(cls, path: str | Path) -> "SolutionField":
        wide = np.loadtxt(path, ndmin=2)
        return cls(wide[0, 1:], wide[1:, 0], wide[1:, 1:])


def solve_cauchy(problem: CauchyProblem) -> SolutionField:
    """Direct problem once, then evolve and invert at every output time."""
    pot = problem.potential
    report = check_faddeev(pot, 1.0)
    if not report.converged:
        raise StageError("input", None, ValueError(f"potential fails the decay check (tail {report.tail_estimate})"))

    stages: dict[str, float] = {}
    start = time.perf_counter()
    try:
        tables, _ = direct_coefficients(pot, problem.N)
        series = SeriesAtOrigin.from_tables(tables)
        data0 = direct_scattering(series, problem.theta_count)
    except Exception as exc:  # re-raised with the stage name
        raise StageError("direct", 0.0, exc) from exc
    stages["direct"] = time.perf_counter() - start

    x = problem.x
    rows, recovered = [], []
    for t in problem.times:
        start = time.perf_counter()
        try:
            data = evolve(data0, t)
        except Exception as exc:
            raise StageError("evolve", t, exc) from exc
        try:
            rec = recover_potential(data, x, problem.Ns, dx=problem.dx)
        except Exception as exc:
            raise StageError("inverse", t, exc) from exc
        stages[f"inverse t={t:g}"] = time.perf_counter() - start
        rows.append(rec.q)
        recovered.append(rec)
    return SolutionField(x, np.array(problem.times), np.array(rows), recovered, stages, data0)


def analytic_soliton(c: float, x, t: float = 0.0):
    """Solitary wave -(c/2) sech^2(sqrt(c) (x - c t) / 2)."""
    if not c > 0:
        raise ValueError(f"soliton speed must be positive, got {c}")
    x = np.asarray(x, dtype=float)
    return -0.5 * c / np.cosh(0.5 * np.sqrt(c) * (x - c * t)) ** 2


def _integral(values: np.ndarray, x: np.ndarray) -> float:
    h = x[1] - x[0]
    if np.allclose(np.diff(x), h) and x.size >= 6:
        return float(newton_cotes_6(values, h))
    return float(np.trapezoid(values, x))


def diagnostics(sol: SolutionField) -> list[TimeDiagnostics]:
    """Mass int u, momentum int u^2, conditioning, stitch residual and time per output time."""
    out = []
    for i, t in enumerate(sol.times):
        row = sol.u[i]
        rec = sol.recovered[i] if i < len(sol.recovered) else None
        out.append(
            TimeDiagnostics(
                t=float(t),
                mass=_integral(row, sol.x),
                momentum=_integral(row * row, sol.x),
                max_cond=rec.max_cond if rec else 0.0,
                stitch_residual=rec.stitch_residual if rec else 0.0,
                seconds=sol.stage_seconds.get(f"inverse t={t:g}", 0.0),
            )
        )
    return out
