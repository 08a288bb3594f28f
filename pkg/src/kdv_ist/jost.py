"""Jost solutions at rho = i/2 and the recurrent integration for the series coefficients.

On the right half-grid [0, b] we build e(i/2, x), its Abel partner eta and
the coefficients a_n, a_n', d_n; on the left half-grid [-b, 0] the mirror
objects g(i/2, x), xi, b_n, b_n', c_n.  Every exponentially weighted
product is tabulated as one array before it enters an integral.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .numerics import cumulative_integral
from .potential import Potential, TailIntegrals, tail_integrals

__all__ = [
    "JostSolverError",
    "SingularAbelError",
    "HalfSolution",
    "JostBase",
    "SeedCoefficients",
    "CoefficientTables",
    "rk6_linear",
    "solve_jost_half",
    "second_solution",
    "jost_base",
    "seed_coefficients",
    "recurse_coefficients",
    "direct_coefficients",
]

log = logging.getLogger(__name__)

DEFAULT_N = 64


class JostSolverError(ArithmeticError):
    def __init__(self, message: str, location: float | None = None):
        super().__init__(message)
        self.location = location


class SingularAbelError(ArithmeticError):
    """The Jost solution vanishes on its half-line, so the Abel integral is singular."""

    def __init__(self, message: str, location: float | None = None):
        super().__init__(message)
        self.location = location


# Butcher's 7-stage, 6th-order explicit Runge-Kutta tableau.
_C = np.array([0.0, 1 / 3, 2 / 3, 1 / 3, 1 / 2, 1 / 2, 1.0])
_A = [
    [],
    [1 / 3],
    [0.0, 2 / 3],
    [1 / 12, 1 / 3, -1 / 12],
    [-1 / 16, 9 / 8, -3 / 16, -3 / 8],
    [0.0, 9 / 8, -3 / 8, -3 / 4, 1 / 2],
    [9 / 44, -9 / 11, 63 / 44, 18 / 11, 0.0, -16 / 11],
]
_B = np.array([11 / 120, 0.0, 27 / 40, 27 / 40, -4 / 15, -4 / 15, 11 / 120])


def rk6_linear(q, energy_shift: float, x: np.ndarray, y0: complex, dy0: complex, substeps: int = 1):
    """Integrate y'' = (q(x) + energy_shift) y across the nodes ``x`` (in the given order).

    ``x`` may run in either direction; ``q`` is evaluated at the stage
    abscissae, so it must accept arrays of arbitrary points.  Returns
    ``(y, y')`` at the nodes.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    dtype = np.result_type(y0, dy0, energy_shift, float)
    y = np.empty(n, dtype=dtype)
    dy = np.empty(n, dtype=dtype)
    y[0], dy[0] = y0, dy0

    # Stage abscissae for every step, evaluated in one vectorised call.
    fine = np.linspace(0.0, 1.0, substeps + 1)
    starts = (x[:-1, None] + np.diff(x)[:, None] * fine[None, :-1]).ravel()
    hs = np.repeat(np.diff(x) / substeps, substeps)
    qstage = np.asarray(q(starts[:, None] + hs[:, None] * _C[None, :]), dtype=float) + energy_shift

    u, v = y[0], dy[0]
    for s in range(starts.size):
        h = hs[s]
        qs = qstage[s]
        ku = np.empty(7, dtype=dtype)
        kv = np.empty(7, dtype=dtype)
        for i in range(7):
            ui, vi = u, v
            for j, a in enumerate(_A[i]):
                if a:
                    ui = ui + h * a * ku[j]
                    vi = vi + h * a * kv[j]
            ku[i] = vi
            kv[i] = qs[i] * ui
        u = u + h * np.dot(_B, ku)
        v = v + h * np.dot(_B, kv)
        if (s + 1) % substeps == 0:
            k = (s + 1) // substeps
            y[k], dy[k] = u, v
            if not (np.isfinite(u) and np.isfinite(v)):
                raise JostSolverError(f"Cauchy solve overflowed at x={x[k]:.17g}", float(x[k]))
    return y, dy


@dataclass(frozen=True)
class HalfSolution:
    """A real solution of -y'' + q y + y/4 = 0 and a partner on one half-grid."""

    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    dy: np.ndarray = field(repr=False)
    partner: np.ndarray | None = field(default=None, repr=False)
    dpartner: np.ndarray | None = field(default=None, repr=False)

    @property
    def wronskian(self) -> np.ndarray:
        return self.y * self.dpartner - self.dy * self.partner


@dataclass(frozen=True)
class JostBase:
    """e(i/2, .) and eta on [0, b]; g(i/2, .) and xi on [-b, 0]."""

    right: HalfSolution
    left: HalfSolution
    h: float

    @property
    def x_right(self) -> np.ndarray:
        return self.right.x

    @property
    def x_left(self) -> np.ndarray:
        return self.left.x


def _half_grid(pot: Potential, side: str) -> np.ndarray:
    i0 = pot.origin_index
    x = pot.x.copy()
    x[i0] = 0.0
    return x[i0:] if side == "right" else x[: i0 + 1]


def _ode_residual(pot: Potential, x, y) -> float:
    """Max |y'' - (q + 1/4) y| at interior nodes via a 5-point second difference."""
    if x.size < 5:
        return 0.0
    h = x[1] - x[0]
    d2 = (-y[4:] + 16 * y[3:-1] - 30 * y[2:-2] + 16 * y[1:-3] - y[:-4]) / (12 * h * h)
    qv = pot(x[2:-2]) + 0.25
    return float(np.max(np.abs(d2 - qv * y[2:-2])))


def solve_jost_half(pot: Potential, side: str, substeps: int = 1) -> HalfSolution:
    """Cauchy problem for the Jost solution at rho = i/2 from the far end of one half-line.

    ``right``: e(i/2, x) on [0, b], started at x = b with e = e^{-b/2},
    e' = -e^{-b/2}/2.  ``left``: g(i/2, x) on [-b, 0], started at x = -b with
    g = e^{-b/2}, g' = e^{-b/2}/2.
    """
    if side not in ("right", "left"):
        raise ValueError(f"side must be 'right' or 'left', got {side!r}")
    x = _half_grid(pot, side)
    start = np.exp(-0.5 * pot.b)
    if start == 0.0:
        raise JostSolverError(f"e^(-b/2) underflows for b={pot.b}", pot.b)
    if side == "right":
        y, dy = rk6_linear(pot, 0.25, x[::-1], start, -0.5 * start, substeps)
        y, dy = y[::-1], dy[::-1]
    else:
        y, dy = rk6_linear(pot, 0.25, x, start, 0.5 * start, substeps)
    sol = HalfSolution(x, y, dy)
    log.debug("%s Jost half: ODE residual %.3e", side, _ode_residual(pot, x, y))
    return sol


def second_solution(half: HalfSolution, pot: Potential | None = None, side: str = "right") -> HalfSolution:
    """Attach the Abel partner: eta = e int_0^x dt/e^2 or xi = g int_x^0 dt/g^2.

    W[e, eta] = 1 and W[g, xi] = -1.  If the Jost solution changes sign on
    its half-line the Abel integral is singular; with ``pot`` supplied the
    partner is then obtained from a second Cauchy problem started at x = 0
    with the same Wronskian, otherwise :class:`SingularAbelError` is raised.
    """
    y, dy, x = half.y, half.dy, half.x
    h = x[1] - x[0]
    if np.any(y <= 0.0):
        where = float(x[np.argmax(y <= 0.0)])
        if pot is None:
            raise SingularAbelError(f"Jost solution at rho=i/2 vanishes near x={where:.6g}", where)
        warnings.warn(
            f"{side} Jost solution at rho=i/2 changes sign near x={where:.6g}; "
            "using a second Cauchy solve for the partner",
            RuntimeWarning,
        )
        return _partner_by_cauchy(half, pot, side)
    inv2 = 1.0 / (y * y)
    if side == "right":
        integral = cumulative_integral(inv2, h, "from_left")  # int_0^x
        partner = y * integral
        dpartner = dy * integral + 1.0 / y
    else:
        integral = cumulative_integral(inv2, h, "from_right")  # int_0^x = -int_x^0
        partner = -y * integral
        dpartner = -dy * integral - 1.0 / y
    return HalfSolution(x, y, dy, partner, dpartner)


def _partner_by_cauchy(half: HalfSolution, pot: Potential, side: str) -> HalfSolution:
    # Same initial data at x = 0 as the Abel construction: partner(0) = 0, partner'(0) = +-1/y(0).
    x, y, dy = half.x, half.y, half.dy
    i0 = 0 if side == "right" else x.size - 1
    sign = 1.0 if side == "right" else -1.0
    if y[i0] != 0.0:
        p0, dp0 = 0.0, sign / y[i0]
    else:
        p0, dp0 = -sign / dy[i0], 0.0
    if side == "right":
        p, dp = rk6_linear(pot, 0.25, x, p0, dp0)
    else:
        p, dp = rk6_linear(pot, 0.25, x[::-1], p0, dp0)
        p, dp = p[::-1], dp[::-1]
    return HalfSolution(x, y, dy, p, dp)


def jost_base(pot: Potential, substeps: int = 1) -> JostBase:
    right = second_solution(solve_jost_half(pot, "right", substeps), pot, "right")
    left = second_solution(solve_jost_half(pot, "left", substeps), pot, "left")
    return JostBase(right, left, pot.h)


@dataclass(frozen=True)
class SeedCoefficients:
    a0: np.ndarray = field(repr=False)
    da0: np.ndarray = field(repr=False)
    d0: np.ndarray = field(repr=False)
    b0: np.ndarray = field(repr=False)
    db0: np.ndarray = field(repr=False)
    c0: np.ndarray = field(repr=False)


def seed_coefficients(base: JostBase, tails: TailIntegrals) -> SeedCoefficients:
    """a0, a0', d0 on [0, b] and b0, b0', c0 on [-b, 0]."""
    r, l = base.right, base.left
    n_left = l.x.size
    right_tail = tails.right[n_left - 1 :]  # int_x^inf q on [0, b]
    left_tail = tails.left[:n_left]  # int_-inf^x q on [-b, 0]

    ex = np.exp(0.5 * r.x)
    a0 = r.y * ex - 1.0
    da0 = ex * (r.dy + 0.5 * r.y)
    d0 = da0 - 0.5 * a0 + 0.5 * right_tail

    emx = np.exp(-0.5 * l.x)
    b0 = l.y * emx - 1.0
    db0 = emx * (l.dy - 0.5 * l.y)
    c0 = db0 + 0.5 * b0 - 0.5 * left_tail
    return SeedCoefficients(a0, da0, d0, b0, db0, c0)


@dataclass(frozen=True)
class CoefficientTables:
    """Rows n = 0..N of a_n, a_n', d_n on ``x_right`` and b_n, b_n', c_n on ``x_left``."""

    N: int
    x_right: np.ndarray = field(repr=False)
    x_left: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    da: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    db: np.ndarray = field(repr=False)
    c: np.ndarray = field(repr=False)
    J1: np.ndarray = field(repr=False)
    J2: np.ndarray = field(repr=False)
    I1: np.ndarray = field(repr=False)
    I2: np.ndarray = field(repr=False)
    right_tail_origin: float = 0.0
    left_tail_origin: float = 0.0

    @property
    def at_origin(self) -> dict[str, np.ndarray]:
        return {
            "a": self.a[:, 0].copy(),
            "b": self.b[:, -1].copy(),
            "c": self.c[:, -1].copy(),
            "d": self.d[:, 0].copy(),
        }

    @property
    def decay(self) -> float:
        """max(|a_N|, |b_N|) over the grids; small values mean N is large enough."""
        return float(max(np.abs(self.a[-1]).max(), np.abs(self.b[-1]).max()))

    def save(self, path) -> None:
        """Columnar dump: x, a_0..a_N (right half) then x, b_0..b_N (left half)."""
        with open(path, "w") as fh:
            fh.write(f"# N={self.N} right half: x a_0..a_N\n")
            np.savetxt(fh, np.column_stack([self.x_right, self.a.T]), fmt="%.17g")
            fh.write(f"# N={self.N} left half: x b_0..b_N\n")
            np.savetxt(fh, np.column_stack([self.x_left, self.b.T]), fmt="%.17g")


def recurse_coefficients(base: JostBase, seeds: SeedCoefficients, N: int = DEFAULT_N) -> CoefficientTables:
    """Run the recurrent integration up to order N on both half-grids."""
    if N < 0:
        raise ValueError(f"N must be non-negative, got {N}")
    h = base.h
    r, l = base.right, base.left
    xr, xl = r.x, l.x

    # Right half: e, eta with their exponential weights.
    ex, emx = np.exp(0.5 * xr), np.exp(-0.5 * xr)
    P1, P1p = ex * r.partner, ex * (r.dpartner + 0.5 * r.partner)  # e^{x/2} eta and derivative
    P2, P2p = ex * r.y, ex * (r.dy + 0.5 * r.y)  # e^{x/2} e
    Q1, Q1p = emx * r.y, emx * (r.dy - 0.5 * r.y)  # e^{-x/2} e
    Q2, Q2p = emx * r.partner, emx * (r.dpartner - 0.5 * r.partner)  # e^{-x/2} eta

    # Left half: g, xi.
    lx, lmx = np.exp(0.5 * xl), np.exp(-0.5 * xl)
    R1, R1p = lmx * l.partner, lmx * (l.dpartner - 0.5 * l.partner)  # e^{-x/2} xi
    R2, R2p = lmx * l.y, lmx * (l.dy - 0.5 * l.y)  # e^{-x/2} g
    S1, S1p = lx * l.y, lx * (l.dy + 0.5 * l.y)  # e^{x/2} g
    S2, S2p = lx * l.partner, lx * (l.dpartner + 0.5 * l.partner)  # e^{x/2} xi

    nr, nl = xr.size, xl.size
    a = np.zeros((N + 1, nr))
    da = np.zeros((N + 1, nr))
    d = np.zeros((N + 1, nr))
    J1 = np.zeros((N + 1, nr))
    J2 = np.zeros((N + 1, nr))
    b = np.zeros((N + 1, nl))
    db = np.zeros((N + 1, nl))
    c = np.zeros((N + 1, nl))
    I1 = np.zeros((N + 1, nl))
    I2 = np.zeros((N + 1, nl))

    a[0], da[0], d[0] = seeds.a0, seeds.da0, seeds.d0
    b[0], db[0], c[0] = seeds.b0, seeds.db0, seeds.c0
    dJ1 = np.zeros(nr)
    dJ2 = np.zeros(nr)
    dI1 = np.zeros(nl)
    dI2 = np.zeros(nl)

    for n in range(1, N + 1):
        am, dam = a[n - 1], da[n - 1]
        # int_x^inf f = -(antiderivative anchored at b)
        tails = -cumulative_integral(np.stack([Q1p * am, Q2p * am]), h, "from_right")
        J1[n] = J1[n - 1] - Q1 * am - tails[0]
        J2[n] = J2[n - 1] - Q2 * am - tails[1]
        dJ1 = dJ1 - Q1 * dam
        dJ2 = dJ2 - Q2 * dam
        a[n] = seeds.a0 - 2.0 * (P1 * J1[n] - P2 * J2[n])
        da[n] = seeds.da0 - 2.0 * (P1p * J1[n] + P1 * dJ1 - P2p * J2[n] - P2 * dJ2)
        d[n] = d[n - 1] + da[n] - da[n - 1] - 0.5 * (a[n] + a[n - 1])

        bm, dbm = b[n - 1], db[n - 1]
        heads = cumulative_integral(np.stack([S1p * bm, S2p * bm]), h, "from_left")
        I1[n] = I1[n - 1] + S1 * bm - heads[0]
        I2[n] = I2[n - 1] + S2 * bm - heads[1]
        dI1 = dI1 + S1 * dbm
        dI2 = dI2 + S2 * dbm
        b[n] = seeds.b0 + 2.0 * (R1 * I1[n] - R2 * I2[n])
        db[n] = seeds.db0 + 2.0 * (R1p * I1[n] + R1 * dI1 - R2p * I2[n] - R2 * dI2)
        c[n] = c[n - 1] + db[n] - db[n - 1] + 0.5 * (b[n] + b[n - 1])

    tables = CoefficientTables(N, xr, xl, a, da, d, b, db, c, J1, J2, I1, I2)
    if N > 0 and tables.decay > 1e-10:
        log.warning("coefficient decay |a_N|, |b_N| = %.3e; consider a larger N", tables.decay)
    return tables


def direct_coefficients(pot: Potential, N: int = DEFAULT_N, substeps: int = 1) -> tuple[CoefficientTables, JostBase]:
    """Jost base, seeds and recursion for a potential in one call."""
    tails = tail_integrals(pot)
    base = jost_base(pot, substeps)
    seeds = seed_coefficients(base, tails)
    tables = recurse_coefficients(base, seeds, N)
    i0 = pot.origin_index
    tables = _with_origin_tails(tables, float(tails.right[i0]), float(tails.left[i0]))
    return tables, base


def _with_origin_tails(tables: CoefficientTables, right0: float, left0: float) -> CoefficientTables:
    from dataclasses import replace

    return replace(tables, right_tail_origin=right0, left_tail_origin=left0)
