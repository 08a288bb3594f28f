import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kdv_ist.numerics import (
    DegenerateGridError,
    QuadratureError,
    UniformGrid,
    bracketed_roots,
    circle_nodes,
    cumulative_integral,
    differentiate,
    fit_spline,
    newton_cotes_6,
    periodic_trapezoid,
)


def grid(a, b, n):
    g = UniformGrid(a, b, n)
    return g, g.nodes


class TestNewtonCotes:
    def test_quintic_exact(self):
        g, x = grid(0.0, 1.0, 101)
        assert newton_cotes_6(x**5, g) == pytest.approx(1 / 6, abs=1e-14)

    def test_zero(self):
        g, x = grid(0.0, 1.0, 101)
        assert newton_cotes_6(np.zeros_like(x), g) == 0.0

    def test_sine(self):
        g, x = grid(0.0, np.pi, 501)
        assert abs(newton_cotes_6(np.sin(x), g) - 2.0) <= 1e-10

    def test_too_few_nodes(self):
        with pytest.raises(DegenerateGridError):
            newton_cotes_6(np.ones(5), 0.1)
        with pytest.raises(DegenerateGridError):
            UniformGrid(0.0, 1.0, 5)

    @settings(max_examples=40, deadline=None)
    @given(
        coeffs=st.lists(st.floats(-5, 5), min_size=6, max_size=6),
        panels=st.integers(1, 12),
        extra=st.integers(0, 4),
    )
    def test_degree_five_exact_any_length(self, coeffs, panels, extra):
        n = 5 * panels + 1 + extra
        g, x = grid(-0.7, 1.3, n)
        p = np.polynomial.Polynomial(coeffs)
        exact = p.integ()(1.3) - p.integ()(-0.7)
        assert newton_cotes_6(p(x), g) == pytest.approx(exact, rel=1e-12, abs=1e-12)


class TestCumulative:
    def test_constant_from_left(self):
        g, x = grid(0.0, 1.0, 51)
        np.testing.assert_allclose(cumulative_integral(np.ones_like(x), g), x, atol=1e-14)

    def test_zero(self):
        g, x = grid(0.0, 1.0, 51)
        assert not cumulative_integral(np.zeros_like(x), g, "from_right").any()

    def test_exp_from_right(self):
        g, x = grid(0.0, 1.0, 201)
        np.testing.assert_allclose(cumulative_integral(np.exp(x), g, "from_right"), np.exp(x) - np.e, atol=1e-10)

    def test_consistent_with_whole_rule(self):
        g, x = grid(-1.0, 2.0, 301)
        f = np.cos(3 * x) * np.exp(-x)
        assert cumulative_integral(f, g)[-1] == pytest.approx(newton_cotes_6(f, g), abs=1e-14)

    def test_bad_direction(self):
        with pytest.raises(ValueError):
            cumulative_integral(np.ones(11), 0.1, "sideways")

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(6, 200), shift=st.floats(-3, 3))
    def test_anchors_and_total(self, n, shift):
        g, x = grid(shift, shift + 2.0, n)
        f = np.sin(x) + 2.0
        left = cumulative_integral(f, g, "from_left")
        right = cumulative_integral(f, g, "from_right")
        assert left[0] == 0.0 and right[-1] == 0.0
        # F_left - F_right is the whole integral at every node, up to the
        # O(h^6) difference between the quintics used for leftover intervals.
        np.testing.assert_allclose(left - right, left[-1], rtol=0, atol=g.step**6 + 1e-12)


class TestPeriodicTrapezoid:
    def test_examples(self):
        assert abs(periodic_trapezoid(lambda t: np.exp(1j * t), 64)) <= 1e-12
        assert periodic_trapezoid(lambda t: np.ones_like(t), 64) == pytest.approx(2 * np.pi)
        assert periodic_trapezoid(lambda t: np.exp(3j * t) + 2, 64) == pytest.approx(4 * np.pi, abs=1e-12)

    def test_non_finite_sample_reports_theta(self):
        with pytest.raises(QuadratureError) as info, np.errstate(divide="ignore"):
            periodic_trapezoid(lambda t: 1.0 / np.where(np.abs(t) < 1e-9, 0.0, 1.0), 33, shifted=True)
        assert info.value.location == 0.0

    def test_endpoint_value_replaces_sample(self):
        val = periodic_trapezoid(lambda t: np.where(np.abs(t) == np.pi, np.nan, 1.0), 32, endpoint_value=1.0)
        assert val == pytest.approx(2 * np.pi)

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(16, 400), data=st.data(), shifted=st.booleans())
    def test_annihilates_low_modes(self, n, data, shifted):
        k = data.draw(st.integers(1, n // 4)) * data.draw(st.sampled_from([-1, 1]))
        assert abs(periodic_trapezoid(lambda t: np.exp(1j * k * t), n, shifted=shifted)) <= 1e-10

    @pytest.mark.parametrize("n", [16, 17, 1000, 10001])
    def test_shifted_nodes_antisymmetric(self, n):
        th = circle_nodes(n, shifted=True)
        assert np.array_equal(th, -th[::-1])
        assert np.all(np.abs(th) < np.pi)
        np.testing.assert_allclose(np.diff(th), 2 * np.pi / n, rtol=1e-12)


class TestSplines:
    def test_quadratic_second_derivative(self):
        x = np.linspace(0, 1, 20)
        spl = fit_spline(x, x**2, order=4)
        np.testing.assert_allclose(differentiate(spl, 2, np.linspace(0, 1, 57)), 2.0, atol=1e-9)

    def test_constant(self):
        x = np.linspace(0, 1, 20)
        assert np.abs(differentiate(fit_spline(x, np.full(20, 3.0)), 1, x)).max() <= 1e-12

    def test_sine(self):
        x = np.linspace(0, 2 * np.pi, 200)
        assert abs(differentiate(fit_spline(x, np.sin(x)), 2, np.pi / 2) + 1) <= 1e-5

    def test_duplicate_abscissae(self):
        with pytest.raises(ValueError):
            fit_spline([0.0, 1.0, 1.0, 2.0, 3.0, 4.0], np.arange(6.0))

    def test_derivative_order_limit(self):
        spl = fit_spline(np.linspace(0, 1, 10), np.zeros(10), order=4)
        with pytest.raises(ValueError):
            differentiate(spl, 3, 0.5)


class TestRoots:
    def test_zero_potential_phi_has_none(self):
        assert bracketed_roots(lambda z: -(z - 1) / (z + 1), (-0.999, 0.999)) == []

    def test_linear(self):
        assert bracketed_roots(lambda z: z, (-1.0, 1.0), 65) == pytest.approx([0.0], abs=1e-13)

    def test_factored_quadratic(self):
        roots = bracketed_roots(lambda z: (z - 0.3) * (z + 0.7), (-0.999, 0.999))
        assert roots == pytest.approx([-0.7, 0.3], abs=1e-12)

    def test_scan_count_minimum(self):
        with pytest.raises(ValueError):
            bracketed_roots(lambda z: z, (-1, 1), 10)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-0.95, 0.95), min_size=1, max_size=4, unique=True))
    def test_recovers_separated_simple_roots(self, roots):
        roots = sorted(roots)
        if len(roots) > 1 and np.min(np.diff(roots)) < 0.01:
            return
        found = bracketed_roots(lambda z: np.prod([z - r for r in roots]), (-0.999, 0.999), 2048, 1e-12)
        assert found == pytest.approx(roots, abs=1e-9)
