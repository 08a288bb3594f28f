import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kdv_ist.acceptance import jost_wronskian_oracle, sturm_count
from kdv_ist.numerics import circle_nodes
from kdv_ist.potential import build_potential
from kdv_ist.scatter import (
    EvolutionRangeError,
    PoleError,
    ScatteringData,
    SeriesAtOrigin,
    direct_scattering,
    eval_phi,
    eval_phi_prime,
    eval_series,
    evolve,
    rho_from_theta,
    rho_from_z,
    z_from_rho,
)
from kdv_ist.glm import recover_potential
from kdv_ist.jost import direct_coefficients
from kdv_ist.pipeline import window_grid

SQRT_PI = np.sqrt(np.pi)


@settings(max_examples=60, deadline=None)
@given(st.floats(-1e3, 1e3))
def test_rho_z_round_trip(rho):
    z = z_from_rho(rho)
    assert abs(abs(z) - 1.0) <= 1e-12
    assert rho_from_z(z) == pytest.approx(rho, rel=1e-12, abs=1e-12)


def test_theta_parametrisation():
    theta = circle_nodes(64, shifted=True)
    np.testing.assert_allclose(z_from_rho(rho_from_theta(theta)), np.exp(1j * theta), atol=1e-13)


class TestZeroSeries:
    series = SeriesAtOrigin.zero(8)
    z = np.array([-0.9, -0.3, 0.0, 0.4, 0.95])

    def test_values(self):
        np.testing.assert_allclose(eval_series(self.series, "e", self.z), 1.0)
        np.testing.assert_allclose(eval_series(self.series, "g", self.z), 1.0)
        w = (self.z - 1) / (2 * (self.z + 1))
        np.testing.assert_allclose(eval_series(self.series, "E", self.z), w)
        np.testing.assert_allclose(eval_series(self.series, "G", self.z), -w)

    def test_phi(self):
        np.testing.assert_allclose(eval_phi(self.series, self.z), -(self.z - 1) / (self.z + 1), rtol=1e-14)

    def test_pole(self):
        with pytest.raises(PoleError):
            eval_series(self.series, "E", -1.0)

    def test_direct_data_empty(self):
        data = direct_scattering(self.series, 256)
        assert data.count == 0
        assert max(np.abs(data.s_plus).max(), np.abs(data.s_minus).max()) <= 1e-13


def test_series_at_origin_collapses(gaussian_run):
    s = gaussian_run.series
    assert eval_series(s, "e", 0.0) == pytest.approx(1.0 + s.a[0], abs=1e-15)


def test_phi_prime_matches_central_difference(gaussian_run):
    s, h = gaussian_run.series, 1e-5
    fd = (eval_phi(s, 0.5 + h) - eval_phi(s, 0.5 - h)) / (2 * h)
    assert abs(eval_phi_prime(s, 0.5) - fd) <= 1e-7


def test_soliton_jost_product(soliton_run, kappa):
    # e(rho, 0) g(rho, 0) = (i rho / (i rho - kappa))^2 for the sech^2 well; z real means rho imaginary.
    for z in (-0.5, 0.2, 0.7):
        rho = rho_from_z(z)
        exact = (1j * rho / (1j * rho - kappa)) ** 2
        got = eval_series(soliton_run.series, "e", z) * eval_series(soliton_run.series, "g", z)
        assert abs(got - exact) <= 1e-6


class TestSoliton:
    def test_phi_root(self, soliton_run, kappa):
        z1 = (0.5 - kappa) / (0.5 + kappa)
        assert soliton_run.data.z == pytest.approx([z1], abs=1e-10)
        assert abs(eval_phi(soliton_run.series, z1)) <= 1e-9

    def test_eigenvalue(self, soliton_run):
        assert soliton_run.data.count == 1
        assert abs(soliton_run.data.lam[0] + np.pi / 4) <= 1e-9

    def test_norming_constants(self, soliton_run):
        d = soliton_run.data
        assert abs(d.alpha_plus[0] - SQRT_PI) <= 3e-5
        assert abs(d.alpha_minus[0] - SQRT_PI) <= 3e-5

    def test_even_potential_ratio(self, soliton_run):
        assert abs(soliton_run.data.d[0] - 1.0) <= 1e-6

    def test_reflectionless(self, soliton_run):
        d = soliton_run.data
        assert max(np.abs(d.s_plus).max(), np.abs(d.s_minus).max()) <= 2e-4


class TestGaussian:
    def test_eigenvalue_reference(self, gaussian_run):
        assert gaussian_run.data.lam == pytest.approx([-0.0138384593995], abs=1e-10)

    def test_norming_reference(self, gaussian_run):
        d = gaussian_run.data
        assert d.alpha_minus[0] == pytest.approx(0.2055954681199, abs=1e-8)
        assert d.alpha_plus[0] == pytest.approx(0.0416040800785, abs=1e-8)

    def test_reflection_against_ode_wronskians(self, gaussian_run):
        # T g(rho) = e(-rho) + s^+ e(rho), so s^+ = -W[e(-rho), g(rho)] / W[e(rho), g(rho)].
        from scipy.integrate import solve_ivp

        pot = gaussian_run.potential
        rho = 1.0

        def jost(r, side):
            x0 = pot.b if side == "e" else -pot.b
            sgn = 1 if side == "e" else -1
            y0 = np.exp(1j * r * pot.b)
            sol = solve_ivp(
                lambda x, y: [y[1], (pot(np.array([x]))[0] - r * r) * y[0]],
                (x0, 0.0), [y0, sgn * 1j * r * y0], method="DOP853", rtol=1e-12, atol=1e-14,
            )
            return sol.y[:, -1]

        e_m, g_p, e_p = jost(-rho, "e"), jost(rho, "g"), jost(rho, "e")
        w = lambda u, v: u[0] * v[1] - u[1] * v[0]
        expected = -w(e_m, g_p) / w(e_p, g_p)
        theta = np.array([2 * np.arctan(2 * rho)])  # z = e^{i theta} at rho
        from kdv_ist.scatter import reflection_coefficients

        s_plus, _ = reflection_coefficients(gaussian_run.series, theta)
        assert abs(s_plus[0] - expected) <= 1e-5

    def test_phi_against_ode_wronskian(self, gaussian_run):
        for rho in (0.3, 1.0, 2.5):
            w = jost_wronskian_oracle(gaussian_run.potential, rho)
            assert abs(eval_phi(gaussian_run.series, z_from_rho(rho)) - w) <= 1e-5 * abs(w)


@pytest.mark.parametrize("name", ["zero", "gaussian", "soliton", "piecewise"])
def test_reflection_symmetry_and_bound(name, request):
    d = request.getfixturevalue(f"{name}_run").data
    for s in (d.s_plus, d.s_minus):
        assert np.abs(s - np.conj(s[::-1])).max() <= 1e-8
        assert np.abs(s).max() <= 1 + 1e-6
    assert np.all(np.diff(d.tau) > 0)
    np.testing.assert_allclose(d.lam, -(((d.z - 1) / (2 * (d.z + 1))) ** 2))


@pytest.mark.parametrize("name", ["zero", "gaussian", "soliton", "piecewise"])
def test_eigenvalue_count_matches_sturm_oscillation(name, request):
    run = request.getfixturevalue(f"{name}_run")
    assert run.data.count == sturm_count(run.potential)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_two_bound_states_found():
    # -6 k^2 sech^2(k x) has bound states at tau = k and 2 k.
    k = 0.75
    pot = build_potential(lambda x: -6 * k * k / np.cosh(k * x) ** 2)
    tables, _ = direct_coefficients(pot, 96)
    data = direct_scattering(SeriesAtOrigin.from_tables(tables), 2000)
    assert data.count == sturm_count(pot) == 2
    assert data.tau == pytest.approx([k, 2 * k], abs=1e-6)
    # The lower state is odd, so e(rho_1, 0) = 0 and d_1 comes from derivatives.
    assert data.d == pytest.approx([-1.0, 1.0], abs=1e-6)
    assert np.all(data.alpha_plus > 0) and np.all(data.alpha_minus > 0)
    x = window_grid(-5.0, 7.0)
    assert np.abs(recover_potential(data, x, 9).q - pot(x)).max() <= 2e-3


class TestEvolve:
    def test_zero_time_identity(self, gaussian_run):
        assert evolve(gaussian_run.data, 0.0) is gaussian_run.data

    def test_negative_time(self, gaussian_run):
        with pytest.raises(ValueError):
            evolve(gaussian_run.data, -1.0)

    def test_soliton_norming_growth(self, soliton_run, kappa):
        d = evolve(soliton_run.data, 0.5)
        tau = soliton_run.data.tau[0]
        assert d.alpha_plus[0] == pytest.approx(soliton_run.data.alpha_plus[0] * np.exp(4 * tau**3), rel=1e-14)
        assert d.alpha_minus[0] == pytest.approx(soliton_run.data.alpha_minus[0] * np.exp(-4 * tau**3), rel=1e-14)
        assert d.alpha_plus[0] == pytest.approx(SQRT_PI * np.exp(4 * kappa**3), rel=3e-5)
        np.testing.assert_array_equal(d.tau, soliton_run.data.tau)

    def test_overflow_reported(self, soliton_run):
        with pytest.raises(EvolutionRangeError):
            evolve(soliton_run.data, 200.0)

    @settings(max_examples=25, deadline=None)
    @given(t1=st.floats(0.0, 1.0), t2=st.floats(0.0, 1.0))
    def test_group_law(self, gaussian_run, t1, t2):
        d = gaussian_run.data
        two, one = evolve(evolve(d, t1), t2), evolve(d, t1 + t2)
        assert two.t == pytest.approx(one.t)
        for a, b in ((two.s_plus, one.s_plus), (two.s_minus, one.s_minus)):
            assert np.abs(a - b).max() <= 1e-12
        np.testing.assert_allclose(two.alpha_plus, one.alpha_plus, rtol=1e-12)
        np.testing.assert_allclose(two.alpha_minus, one.alpha_minus, rtol=1e-12)

    def test_modulus_preserved(self, gaussian_run):
        d = evolve(gaussian_run.data, 0.8)
        np.testing.assert_allclose(np.abs(d.s_plus), np.abs(gaussian_run.data.s_plus), rtol=1e-12)


def test_save_load_round_trip(gaussian_run, tmp_path):
    path = tmp_path / "data.txt"
    d = evolve(gaussian_run.data, 0.5)
    d.save(path)
    back = ScatteringData.load(path)
    assert back.t == d.t
    for name in ("z", "tau", "alpha_plus", "alpha_minus", "d", "theta", "s_plus", "s_minus"):
        np.testing.assert_array_equal(getattr(back, name), getattr(d, name))


def test_save_load_empty(tmp_path):
    path = tmp_path / "empty.txt"
    ScatteringData.empty(32).save(path)
    back = ScatteringData.load(path)
    assert back.count == 0 and back.theta.size == 32
