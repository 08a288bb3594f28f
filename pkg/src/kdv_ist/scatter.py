"""Direct scattering from the series coefficients at x = 0, and the KdV evolution law.

All spectral quantities are evaluated in the Mobius variable
``z = (1/2 + i rho) / (1/2 - i rho)``: bound states sit on (-1, 1) and the
real rho axis is the unit circle ``z = e^{i theta}``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as P

from .jost import CoefficientTables
from .numerics import bracketed_roots, circle_nodes

__all__ = [
    "PoleError",
    "DegenerateEigenvalueError",
    "NormingConsistencyError",
    "EvolutionRangeError",
    "SeriesAtOrigin",
    "ScatteringData",
    "z_from_rho",
    "rho_from_z",
    "rho_from_theta",
    "eval_series",
    "eval_phi",
    "eval_phi_prime",
    "find_eigenvalues",
    "norming_constants",
    "reflection_coefficients",
    "direct_scattering",
    "evolve",
    "DEFAULT_THETA_COUNT",
]

DEFAULT_THETA_COUNT = 10_000
EIGEN_EPS = 1e-6
EIGEN_SCAN = 2048
EIGEN_TOL = 1e-13


class PoleError(ZeroDivisionError):
    """E(z) and G(z) carry a pole at z = -1."""


class DegenerateEigenvalueError(ArithmeticError):
    pass


class NormingConsistencyError(ArithmeticError):
    pass


class EvolutionRangeError(OverflowError):
    pass


def z_from_rho(rho):
    rho = np.asarray(rho, dtype=complex)
    return (0.5 + 1j * rho) / (0.5 - 1j * rho)


def rho_from_z(z):
    z = np.asarray(z, dtype=complex)
    return 0.5j * (1.0 - z) / (1.0 + z)


def rho_from_theta(theta):
    """Real rho for z = e^{i theta}; equal to tan(theta/2) / 2."""
    return 0.5 * np.tan(0.5 * np.asarray(theta, dtype=float))


@dataclass(frozen=True)
class SeriesAtOrigin:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    right_tail: float  # int_0^inf q
    left_tail: float  # int_-inf^0 q

    @classmethod
    def from_tables(cls, tables: CoefficientTables) -> "SeriesAtOrigin":
        o = tables.at_origin
        return cls(o["a"], o["b"], o["c"], o["d"], tables.right_tail_origin, tables.left_tail_origin)

    @classmethod
    def zero(cls, N: int = 0) -> "SeriesAtOrigin":
        z = np.zeros(N + 1)
        return cls(z, z, z, z, 0.0, 0.0)

    @property
    def N(self) -> int:
        return self.a.size - 1


def _alt(coeffs, z):
    """sum_n (-1)^n z^n c_n and its z-derivative, by Horner in -z."""
    w = -np.asarray(z)
    return P.polyval(w, coeffs), -P.polyval(w, P.polyder(coeffs)) if coeffs.size > 1 else 0.0 * w


def _check_pole(z):
    if np.any(np.asarray(z) == -1):
        raise PoleError("E(z) and G(z) are singular at z = -1")


def _series_and_derivative(series: SeriesAtOrigin, which: str, z):
    z = np.asarray(z, dtype=complex) if np.iscomplexobj(z) else np.asarray(z, dtype=float)
    if which in ("e", "g"):
        s, ds = _alt(series.a if which == "e" else series.b, z)
        return 1.0 + (z + 1.0) * s, s + (z + 1.0) * ds
    if which in ("E", "G"):
        _check_pole(z)
        sign = 1.0 if which == "E" else -1.0
        s, ds = _alt(series.d if which == "E" else series.c, z)
        const = -0.5 * series.right_tail if which == "E" else 0.5 * series.left_tail
        pole = sign * (z - 1.0) / (2.0 * (z + 1.0))
        dpole = sign / (z + 1.0) ** 2
        return pole + const + (z + 1.0) * s, dpole + s + (z + 1.0) * ds
    raise ValueError(f"which must be one of e, g, E, G; got {which!r}")


def eval_series(series: SeriesAtOrigin, which: str, z):
    """e(z), g(z) (Jost values at x = 0) or E(z), G(z) (their x-derivatives)."""
    return _series_and_derivative(series, which, z)[0]


def eval_phi(series: SeriesAtOrigin, z):
    """Phi(z) = e G - E g = W[e(rho, 0), g(rho, 0)] = -2 i rho a(rho)."""
    e = eval_series(series, "e", z)
    g = eval_series(series, "g", z)
    return e * eval_series(series, "G", z) - eval_series(series, "E", z) * g


def eval_phi_prime(series: SeriesAtOrigin, z):
    e, de = _series_and_derivative(series, "e", z)
    g, dg = _series_and_derivative(series, "g", z)
    E, dE = _series_and_derivative(series, "E", z)
    G, dG = _series_and_derivative(series, "G", z)
    return de * G + e * dG - dE * g - E * dg


@dataclass(frozen=True)
class ScatteringData:
    """Eigenvalues, norming constants and sampled reflection coefficients at time t.

    ``theta`` are the shifted :func:`~kdv_ist.numerics.circle_nodes` by
    default.  A sample at ``theta = -pi`` (rho infinite), if the grid has one,
    holds the limit value 0.
    """

    z: np.ndarray
    tau: np.ndarray
    alpha_plus: np.ndarray
    alpha_minus: np.ndarray
    d: np.ndarray
    theta: np.ndarray = field(repr=False)
    s_plus: np.ndarray = field(repr=False)
    s_minus: np.ndarray = field(repr=False)
    t: float = 0.0

    @property
    def lam(self) -> np.ndarray:
        return -self.tau**2

    @property
    def count(self) -> int:
        return int(self.tau.size)

    @property
    def rho(self) -> np.ndarray:
        r = rho_from_theta(self.theta)
        r[np.abs(self.theta) == np.pi] = np.inf
        return r

    def save(self, path: str | Path) -> None:
        fmt = "%.16e"
        with open(path, "w") as fh:
            fh.write("# kdv-ist scattering data\n")
            fh.write(f"t {self.t:.16e}\n")
            fh.write(f"eigenvalues {self.count}\n")
            fh.write("# z tau lambda alpha_plus alpha_minus d\n")
            if self.count:
                np.savetxt(fh, np.column_stack([self.z, self.tau, self.lam, self.alpha_plus, self.alpha_minus, self.d]), fmt=fmt)
            fh.write(f"reflection {self.theta.size}\n")
            fh.write("# theta re_s_plus im_s_plus re_s_minus im_s_minus\n")
            cols = [self.theta, self.s_plus.real, self.s_plus.imag, self.s_minus.real, self.s_minus.imag]
            np.savetxt(fh, np.column_stack(cols), fmt=fmt)

    @classmethod
    def load(cls, path: str | Path) -> "ScatteringData":
        lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.startswith("#")]
        it = iter(lines)
        key, t = next(it).split()
        if key != "t":
            raise ValueError(f"{path}: expected 't' header, got {key!r}")
        key, k = next(it).split()
        if key != "eigenvalues":
            raise ValueError(f"{path}: expected 'eigenvalues' header, got {key!r}")
        eig = np.array([[float(v) for v in next(it).split()] for _ in range(int(k))]).reshape(int(k), 6)
        key, n = next(it).split()
        if key != "reflection":
            raise ValueError(f"{path}: expected 'reflection' header, got {key!r}")
        refl = np.array([[float(v) for v in next(it).split()] for _ in range(int(n))])
        return cls(
            z=eig[:, 0], tau=eig[:, 1], alpha_plus=eig[:, 3], alpha_minus=eig[:, 4], d=eig[:, 5],
            theta=refl[:, 0], s_plus=refl[:, 1] + 1j * refl[:, 2], s_minus=refl[:, 3] + 1j * refl[:, 4],
            t=float(t),
        )

    @classmethod
    def empty(cls, theta_count: int = DEFAULT_THETA_COUNT) -> "ScatteringData":
        e = np.zeros(0)
        zero = np.zeros(theta_count, dtype=complex)
        return cls(e, e, e, e, e, circle_nodes(theta_count, shifted=True), zero, zero.copy(), 0.0)


def find_eigenvalues(
    series: SeriesAtOrigin, eps: float = EIGEN_EPS, scan_count: int = EIGEN_SCAN, tol: float = EIGEN_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """Zeros z_k of Phi on (-1 + eps, 1 - eps) and tau_k = (1 - z_k) / (2 (1 + z_k)).

    Returned with tau increasing (z decreasing).
    """
    def phi(z):
        return float(np.real(eval_phi(series, z)))

    lo, hi = -1.0 + eps, 1.0 - eps
    zs = np.array(bracketed_roots(phi, (lo, hi), scan_count, tol))
    step = (hi - lo) / (scan_count - 1)
    for zk in zs:
        if zk - lo < step or hi - zk < step:
            warnings.warn(f"eigenvalue root z={zk:.6g} at the edge of the search interval", RuntimeWarning)
    zs = np.sort(zs)[::-1]
    tau = (1.0 - zs) / (2.0 * (1.0 + zs))
    return zs, tau


def norming_constants(series: SeriesAtOrigin, z: np.ndarray, min_slope: float = 1e-8):
    """alpha_k^+ = d_k / (i a'(rho_k)) and alpha_k^- = 1 / (d_k i a'(rho_k)).

    d_k = g(rho_k, 0) / e(rho_k, 0), or the ratio of x-derivatives when
    e(rho_k, 0) is the smaller of the two.
    """
    z = np.asarray(z, dtype=float)
    alpha_p = np.empty(z.size)
    alpha_m = np.empty(z.size)
    dk = np.empty(z.size)
    for k, zk in enumerate(z):
        dphi = eval_phi_prime(series, zk)
        if abs(dphi) < min_slope:
            raise DegenerateEigenvalueError(f"|Phi'(z)| = {abs(dphi):.3e} at z={zk:.17g}")
        phi = eval_phi(series, zk)
        w = (zk + 1.0) / (zk - 1.0)
        i_adot = -2.0 * w**2 * phi + (zk + 1.0) ** 3 / (zk - 1.0) * dphi
        # g = d e holds for values and derivatives; e(0) vanishes for bound
        # states that are odd about x = 0.
        ek, Ek = eval_series(series, "e", zk), eval_series(series, "E", zk)
        d = eval_series(series, "g", zk) / ek if abs(ek) >= abs(Ek) else eval_series(series, "G", zk) / Ek
        ap, am = complex(d / i_adot), complex(1.0 / (d * i_adot))
        for v in (ap, am):
            if abs(v.imag) > 1e-8 or v.real <= 0:
                raise NormingConsistencyError(f"norming constant {v} at z={zk:.17g} is not positive")
        alpha_p[k], alpha_m[k], dk[k] = ap.real, am.real, float(np.real(d))
    return alpha_p, alpha_m, dk


def reflection_coefficients(series: SeriesAtOrigin, theta: np.ndarray):
    """s^+ and s^- at z = e^{i theta}; theta = +-pi (rho infinite) gets the limit 0."""
    theta = np.asarray(theta, dtype=float)
    interior = np.abs(np.abs(theta) - np.pi) > 0
    z = np.exp(1j * theta[interior])
    zb = np.conj(z)
    e, g, E, G = (eval_series(series, w, z) for w in "egEG")
    eb, gb, Eb, Gb = (eval_series(series, w, zb) for w in "egEG")
    phi = e * G - E * g
    small = np.abs(phi) < 1e-12
    if small.any():
        warnings.warn(f"|Phi| < 1e-12 at theta={theta[interior][small][0]:.6g}", RuntimeWarning)
    s_plus = np.zeros(theta.size, dtype=complex)
    s_minus = np.zeros(theta.size, dtype=complex)
    # Both follow from s^{+-} = -+ b(-+rho)/a(rho) with the Wronskians of e, g.
    s_plus[interior] = -(eb * G - Eb * g) / phi
    s_minus[interior] = -(e * Gb - E * gb) / phi
    return s_plus, s_minus


def direct_scattering(series: SeriesAtOrigin, theta_count: int = DEFAULT_THETA_COUNT) -> ScatteringData:
    z, tau = find_eigenvalues(series)
    alpha_p, alpha_m, dk = norming_constants(series, z) if z.size else (np.zeros(0),) * 3
    theta = circle_nodes(theta_count, shifted=True)
    s_plus, s_minus = reflection_coefficients(series, theta)
    return ScatteringData(z, tau, alpha_p, alpha_m, dk, theta, s_plus, s_minus, 0.0)


def evolve(data: ScatteringData, t: float) -> ScatteringData:
    """Advance scattering data by time t under KdV; eigenvalues are unchanged."""
    if t < 0:
        raise ValueError(f"evolution time must be non-negative, got {t}")
    if t == 0:
        return data
    growth = 8.0 * data.tau**3 * t
    if np.any(growth > 700.0):
        raise EvolutionRangeError(
            f"alpha^+ e^(8 tau^3 t) overflows (8 tau^3 t = {growth.max():.1f}); "
            "evaluate at smaller t or rescale the norming constants"
        )
    rho = rho_from_theta(data.theta)
    phase = np.ones(data.theta.size, dtype=complex)
    interior = np.abs(np.abs(data.theta) - np.pi) > 0
    phase[interior] = np.exp(8j * rho[interior] ** 3 * t)
    return replace(
        data,
        alpha_plus=data.alpha_plus * np.exp(growth),
        alpha_minus=data.alpha_minus * np.exp(-growth),
        d=data.d * np.exp(growth),
        s_plus=data.s_plus * phase,
        s_minus=data.s_minus * np.conj(phase),
        t=data.t + t,
    )
