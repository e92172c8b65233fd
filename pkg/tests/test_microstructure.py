"""Unit tests for microstructure module."""

import math

import numpy as np
import pytest

from homogenize.config import Config
from homogenize.exceptions import ConfigurationError
from homogenize.microstructure import (
    NONLINEARITIES,
    MicrostructureSpec,
    NonlinearitySpec,
    cell_fraction,
    check_growth,
    check_monotone,
    eval_g,
    eval_g_prime,
    in_inclusion,
    sample_cell_coefficient,
    sample_epsilon_coefficient,
)


class TestMicrostructureSpec:
    """Test cases for MicrostructureSpec validation."""

    def test_defaults(self):
        spec = MicrostructureSpec()
        assert spec.kind == "circular_inclusion"
        assert spec.phase_values == (1.0, 10.0)
        assert spec.lam == 1.0
        assert spec.Lam == 10.0

    def test_constant_uses_matrix_value(self, constant_spec):
        assert constant_spec.phase_values == (2.5, 2.5)
        assert constant_spec.lam == constant_spec.Lam == 2.5

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"kind": "hexagonal"},
            {"a_matrix": 0.0},
            {"a_inclusion": -1.0},
            {"a_matrix": math.inf},
            {"radius": 0.5},
            {"radius": 0.0},
        ],
    )
    def test_invalid(self, kwargs):
        """Test that bad parameters raise ConfigurationError."""
        with pytest.raises(ConfigurationError):
            MicrostructureSpec(**kwargs)

    def test_from_config(self):
        config = Config()
        config.set("microstructure.kind", "laminate")
        config.set("microstructure.a_inclusion", 4.0)
        spec = MicrostructureSpec.from_config(config)
        assert spec.kind == "laminate"
        assert spec.phase_values == (1.0, 4.0)


class TestCoefficientSampling:
    """Test cases for the cell and epsilon coefficients."""

    def test_circular_inclusion(self, circular_spec):
        """Test membership of the disc around the cell center."""
        y = np.array([[0.5, 0.5], [0.7, 0.5], [0.05, 0.05], [0.76, 0.5]])
        np.testing.assert_array_equal(in_inclusion(circular_spec, y), [True, True, False, False])

    def test_laminate(self, laminate_spec):
        y = np.array([[0.25, 0.9], [0.75, 0.1]])
        a = sample_cell_coefficient(laminate_spec, y)
        np.testing.assert_allclose(a[0], np.eye(2))
        np.testing.assert_allclose(a[1], 4.0 * np.eye(2))

    def test_checkerboard(self, checkerboard_spec):
        """Test that the inclusion occupies the off-diagonal quarters."""
        y = np.array([[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]])
        np.testing.assert_array_equal(
            in_inclusion(checkerboard_spec, y), [False, True, True, False]
        )

    def test_cell_fraction(self):
        x = np.array([[0.30, 0.95]])
        np.testing.assert_allclose(cell_fraction(x, 0.25), [[0.2, 0.8]], atol=1e-12)

    def test_epsilon_periodicity(self, circular_spec):
        """Test a^eps(x + eps e_i) = a^eps(x)."""
        rng = np.random.default_rng(3)
        eps = 0.125
        x = rng.uniform(0.0, 0.8, size=(100, 2))
        base = sample_epsilon_coefficient(circular_spec, eps, x)
        shifted = sample_epsilon_coefficient(circular_spec, eps, x + np.array([eps, 0.0]))
        np.testing.assert_array_equal(base, shifted)

    def test_invalid_eps(self, circular_spec):
        with pytest.raises(ConfigurationError):
            sample_epsilon_coefficient(circular_spec, 0.0, np.zeros((1, 2)))


class TestNonlinearities:
    """Test cases for the registered nonlinearities."""

    @pytest.mark.parametrize("kind", sorted(NONLINEARITIES))
    def test_monotone(self, kind):
        """Test (g(u) - g(v))(u - v) >= 0 on random pairs."""
        assert check_monotone(NonlinearitySpec(kind)) >= 0.0

    @pytest.mark.parametrize("kind", sorted(NONLINEARITIES))
    def test_growth(self, kind):
        """Test |g(u)| <= C_g (|u|^(q-1) + h0)."""
        assert check_growth(NonlinearitySpec(kind)) <= 1e-9

    @pytest.mark.parametrize("kind", sorted(NONLINEARITIES))
    def test_growth_exponent_below_critical(self, kind):
        assert NonlinearitySpec(kind).q <= 4.0

    def test_values(self):
        assert eval_g(NonlinearitySpec("cubic"), 2.0) == 8.0
        assert eval_g(NonlinearitySpec("linear", c=3.0), 2.0) == 6.0
        assert eval_g(NonlinearitySpec("saturating"), 1.0) == 0.5
        assert eval_g(NonlinearitySpec("ramp"), -1.0) == 0.0
        assert eval_g(NonlinearitySpec("zero"), 5.0) == 0.0

    def test_scalar_returns_float(self):
        """Test that scalars come back as plain floats."""
        assert isinstance(eval_g(NonlinearitySpec("cubic"), 1.5), float)
        assert isinstance(eval_g_prime(NonlinearitySpec("cubic"), 1.5), float)

    def test_derivatives(self):
        """Test g' against central differences."""
        u = np.linspace(-3.0, 3.0, 13) + 0.01
        for kind in ("linear", "cubic", "saturating"):
            spec = NonlinearitySpec(kind)
            numeric = (eval_g(spec, u + 1e-6) - eval_g(spec, u - 1e-6)) / 2e-6
            np.testing.assert_allclose(eval_g_prime(spec, u), numeric, rtol=1e-6, atol=1e-8)

    def test_zero_has_zero_derivative(self):
        assert eval_g_prime(NonlinearitySpec("zero"), 1.0) == 0.0

    def test_ramp_has_no_derivative(self):
        """Test that ramp is routed to the derivative-free solver."""
        spec = NonlinearitySpec("ramp")
        assert eval_g_prime(spec, 1.0) is None
        assert not spec.differentiable

    def test_invalid(self):
        with pytest.raises(ConfigurationError):
            NonlinearitySpec("exponential")
        with pytest.raises(ConfigurationError):
            NonlinearitySpec("linear", c=-1.0)
