"""Unit tests for semilinear module."""

import logging
import math
import re

import numpy as np
import pytest

from homogenize.config import Config
from homogenize.exceptions import ConfigurationError, ConvergenceError
from homogenize.fem_core import h1_seminorm, l2_norm
from homogenize.mesh import build_unit_square_mesh
from homogenize.microstructure import NonlinearitySpec
from homogenize.semilinear import (
    POINCARE_CONSTANT,
    NewtonConfig,
    SemilinearProblem,
    apply_operator,
    apriori_check,
    build_load,
    load_from_config,
    sine_bump,
    solve_semilinear,
    uniqueness_probe,
)

IDENTITY = np.eye(2)
NEWTON_LINE = re.compile(r"Newton \d+: residual ([-+.0-9e]+), step ")


def _problem(n, g, f, a0=IDENTITY):
    return SemilinearProblem.homogenized(build_unit_square_mesh(n), a0, g, f)


def _observed_order(g):
    errors = []
    for n in (16, 32, 64):
        p = _problem(n, g, build_load("manufactured", 1.0, g))
        u, report = solve_semilinear(p)
        assert report.converged
        errors.append(l2_norm(p.mesh, u - sine_bump(p.mesh.node_coords)))
    return [math.log2(errors[i] / errors[i + 1]) for i in range(2)]


class TestSolveSemilinear:
    """Test cases for solve_semilinear function."""

    def test_linear_manufactured_order(self):
        """Test second-order L2 convergence for -Laplace u = 2 pi^2 sin sin."""
        for order in _observed_order(NonlinearitySpec("zero")):
            assert 1.7 <= order <= 2.3

    def test_cubic_manufactured_order(self):
        """Test second-order L2 convergence with g(u) = u^3."""
        for order in _observed_order(NonlinearitySpec("cubic")):
            assert 1.7 <= order <= 2.3

    def test_zero_load_gives_zero(self):
        """Test that u = 0 solves the problem with f = 0 and g(0) = 0."""
        p = _problem(16, NonlinearitySpec("linear", c=1.0), build_load("constant", 0.0))
        u, report = solve_semilinear(p)
        np.testing.assert_array_equal(u, 0.0)
        assert report.newton_iters == 0
        assert report.converged

    def test_linear_problem_takes_one_newton_step(self):
        p = _problem(16, NonlinearitySpec("zero"), build_load("constant", 1.0))
        _, report = solve_semilinear(p)
        assert report.newton_iters == 1
        assert not report.used_picard

    def test_residual_below_tolerance(self, cubic):
        """Test the reported residual against a direct evaluation."""
        p = _problem(16, cubic, build_load("constant", 50.0))
        u, report = solve_semilinear(p)
        free = p.system.free
        residual = apply_operator(p.system, cubic, u[free]) - p.system.load
        assert np.linalg.norm(residual) <= 1e-9
        assert report.final_residual <= 1e-9

    def test_boundary_values_are_zero(self, cubic):
        p = _problem(8, cubic, build_load("constant", 1.0))
        guess = np.ones(p.mesh.num_nodes)
        u, _ = solve_semilinear(p, initial_guess=guess)
        np.testing.assert_array_equal(u[p.boundary.is_boundary], 0.0)

    def test_picard_agrees_with_newton(self, cubic):
        """Test that the two iterations reach the same solution."""
        p = _problem(16, cubic, build_load("manufactured", 1.0, cubic))
        newton, _ = solve_semilinear(p)
        picard, report = solve_semilinear(p, NewtonConfig(force_picard=True))
        assert report.used_picard
        assert report.newton_iters == 0
        assert l2_norm(p.mesh, newton - picard) <= 1e-7

    def test_ramp_routes_to_picard(self):
        """Test automatic Picard iteration for a g without derivative."""
        p = _problem(16, NonlinearitySpec("ramp"), build_load("constant", 1.0))
        _, report = solve_semilinear(p)
        assert report.used_picard
        assert report.converged
        assert report.picard_iters > 0

    def test_failure_without_fallback(self, cubic):
        """Test that an exhausted Newton budget raises when Picard is disabled."""
        p = _problem(16, cubic, build_load("constant", 200.0))
        cfg = NewtonConfig(max_newton=1, picard_fallback=False)
        with pytest.raises(ConvergenceError):
            solve_semilinear(p, cfg)

    def test_discrete_monotonicity(self, cubic, circular_spec):
        """Test (F(u) - F(w)) . (u - w) >= lambda |u - w|_H1^2 for ordered loads."""
        mesh = build_unit_square_mesh(32)
        p_u = SemilinearProblem.fine_scale(mesh, circular_spec, 0.25, cubic, build_load("constant", 2.0))
        p_w = SemilinearProblem.fine_scale(mesh, circular_spec, 0.25, cubic, build_load("constant", 1.0))
        u, _ = solve_semilinear(p_u)
        w, _ = solve_semilinear(p_w)
        free = p_u.system.free
        pairing = np.dot(
            apply_operator(p_u.system, cubic, u[free]) - apply_operator(p_u.system, cubic, w[free]),
            (u - w)[free],
        )
        assert pairing >= circular_spec.lam * h1_seminorm(mesh, u - w) ** 2 - 1e-8


class TestNewtonConfig:
    """Test cases for NewtonConfig validation."""

    def test_defaults(self):
        cfg = NewtonConfig()
        assert cfg.residual_tol == 1e-9
        assert cfg.max_newton == 50
        assert cfg.picard_fallback

    @pytest.mark.parametrize("tol", [0.0, -1e-9])
    def test_invalid_tolerance(self, tol):
        with pytest.raises(ConfigurationError):
            NewtonConfig(residual_tol=tol)


class TestAprioriCheck:
    """Test cases for apriori_check function."""

    def test_poincare_constant(self):
        assert POINCARE_CONSTANT == pytest.approx(0.2250790790, abs=1e-10)

    def test_unit_load(self, cubic):
        """Test lambda |u|_H1 <= C_P ||1|| for f = 1."""
        p = _problem(32, cubic, build_load("constant", 1.0))
        u, _ = solve_semilinear(p)
        check = apriori_check(u, p)
        assert check.ok
        assert check.rhs == pytest.approx(POINCARE_CONSTANT, rel=1e-12)
        assert check.lhs <= 0.2251 + 1e-8

    def test_zero_load(self, cubic):
        p = _problem(8, cubic, build_load("constant", 0.0))
        u, _ = solve_semilinear(p)
        check = apriori_check(u, p)
        assert check.lhs == 0.0
        assert check.rhs == 0.0
        assert check.ok

    def test_homogenized_ellipticity(self):
        """Test that lambda is the smallest eigenvalue of a0."""
        p = _problem(4, NonlinearitySpec("zero"), build_load("constant", 1.0), np.diag([1.6, 2.5]))
        assert p.ellipticity == pytest.approx(1.6)

    def test_fine_scale_bound_independent_of_eps(self, cubic, circular_spec):
        """Test the same explicit bound for several eps."""
        for eps in (0.5, 0.25, 0.125):
            mesh = build_unit_square_mesh(int(16 / eps) // 2)
            p = SemilinearProblem.fine_scale(mesh, circular_spec, eps, cubic, build_load("constant", 1.0))
            u, _ = solve_semilinear(p)
            assert apriori_check(u, p).ok

    def test_violation_is_reported(self, cubic):
        """Test ok = False for a field far too steep for the load."""
        p = _problem(8, cubic, build_load("constant", 1.0))
        assert not apriori_check(100.0 * sine_bump(p.mesh.node_coords), p).ok


class TestUniquenessProbe:
    """Test cases for uniqueness_probe function."""

    def test_linear_problem(self):
        p = _problem(16, NonlinearitySpec("zero"), build_load("constant", 1.0))
        assert uniqueness_probe(p) <= 1e-8

    def test_cubic(self, cubic):
        p = _problem(16, cubic, build_load("constant", 1.0))
        assert uniqueness_probe(p) <= 1e-7

    def test_saturating_fine_scale(self, circular_spec):
        """Test uniqueness on the oscillating coefficient at eps = 1/4."""
        mesh = build_unit_square_mesh(64)
        p = SemilinearProblem.fine_scale(
            mesh, circular_spec, 0.25, NonlinearitySpec("saturating"), build_load("constant", 1.0)
        )
        assert uniqueness_probe(p) <= 1e-7

    def test_cubic_fine_scale(self, circular_spec, cubic):
        mesh = build_unit_square_mesh(64)
        p = SemilinearProblem.fine_scale(mesh, circular_spec, 0.25, cubic, build_load("constant", 1.0))
        assert uniqueness_probe(p) <= 1e-7


class TestLineSearch:
    """Test cases for the damped Newton line search."""

    def test_accepted_steps_never_increase_residual(self, cubic, caplog):
        """Test that the logged Newton residuals never grow from a far-off start."""
        p = _problem(16, cubic, build_load("constant", 50.0))
        start = 20.0 * sine_bump(p.mesh.node_coords)
        free = p.system.free
        initial = float(np.linalg.norm(apply_operator(p.system, cubic, start[free]) - p.system.load))

        caplog.set_level(logging.DEBUG, logger="homogenize.semilinear")
        _, report = solve_semilinear(p, initial_guess=start)

        matches = (NEWTON_LINE.match(record.getMessage()) for record in caplog.records)
        residuals = [float(m.group(1)) for m in matches if m]
        assert report.converged
        assert residuals
        history = [initial, *residuals]
        # logged values carry four significant digits
        assert all(b <= a * (1.0 + 1e-3) for a, b in zip(history, history[1:]))


class TestBuildLoad:
    """Test cases for build_load function."""

    def test_kinds(self):
        points = np.array([[0.5, 0.5], [0.25, 0.0]])
        np.testing.assert_allclose(build_load("constant", 2.0)(points), [2.0, 2.0])
        np.testing.assert_allclose(build_load("linear_x1", 2.0)(points), [1.0, 0.5])
        np.testing.assert_allclose(build_load("sine", 1.0)(points), [1.0, 0.0], atol=1e-15)

    def test_manufactured_includes_g(self, cubic):
        """Test f = 2 pi^2 s + s^3 at the center, where s = 1."""
        f = build_load("manufactured", 1.0, cubic)
        assert f(np.array([[0.5, 0.5]]))[0] == pytest.approx(2.0 * math.pi**2 + 1.0)

    def test_unknown(self):
        with pytest.raises(ConfigurationError):
            build_load("gaussian")

    def test_from_config(self):
        config = Config()
        config.update({"load.kind": "linear_x1", "load.value": 3.0})
        f = load_from_config(config)
        np.testing.assert_allclose(f(np.array([[0.5, 0.2]])), [1.5])
