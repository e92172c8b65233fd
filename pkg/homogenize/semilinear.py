"""Damped Newton / Picard solver for -div(A grad u) + g(u) = f with u = 0 on the boundary."""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .exceptions import ConfigurationError, ConvergenceError, NewtonStagnationError
from .fem_core import (
    CoefficientProvider,
    PointFunction,
    assemble_load,
    assemble_mass_lumped,
    assemble_stiffness,
    cg_solve,
    evaluate_at_centroids,
    h1_seminorm,
    l2_norm,
)
from .mesh import BoundaryMask, StructuredMesh, boundary_mask
from .microstructure import (
    MicrostructureSpec,
    NonlinearitySpec,
    constant_coefficient,
    epsilon_coefficient,
    eval_g,
    eval_g_prime,
)

logger = logging.getLogger(__name__)

# Poincare constant of the unit square, 1 / (pi sqrt(2)).
POINCARE_CONSTANT = 1.0 / (math.pi * math.sqrt(2.0))

ARMIJO_FACTOR = 0.5
ARMIJO_SUFFICIENT_DECREASE = 1e-4
MIN_STEP = 2.0**-20


@dataclass(frozen=True)
class NewtonConfig:
    """Stopping and globalization settings of the nonlinear solver."""

    residual_tol: float = 1e-9
    max_newton: int = 50
    picard_fallback: bool = True
    force_picard: bool = False
    max_picard: int = 500
    picard_relaxation: float = 0.5
    cg_tol: float = 1e-10

    def __post_init__(self):
        if not self.residual_tol > 0.0:
            raise ConfigurationError(
                "solver.residual_tol", f"residual_tol must be > 0, got {self.residual_tol}"
            )
        if not 0.0 < self.picard_relaxation <= 1.0:
            raise ConfigurationError(
                "solver.picard_relaxation", "Picard relaxation must lie in (0, 1]"
            )

    @classmethod
    def from_config(cls, config) -> "NewtonConfig":
        return cls(
            residual_tol=config.get("solver.residual_tol"),
            max_newton=config.get("solver.max_newton"),
            picard_fallback=config.get("solver.picard_fallback"),
            force_picard=config.get("solver.force_picard"),
            max_picard=config.get("solver.max_picard"),
            cg_tol=config.get("solver.cg_tol"),
        )


@dataclass
class SolveReport:
    newton_iters: int = 0
    total_cg_iters: int = 0
    final_residual: float = math.inf
    used_picard: bool = False
    picard_iters: int = 0
    converged: bool = False


@dataclass(frozen=True, eq=False)
class DiscreteSystem:
    """Stiffness, lumped mass and load restricted to the free (interior) nodes."""

    stiffness: sp.csr_matrix
    mass: np.ndarray
    load: np.ndarray
    free: np.ndarray


@dataclass(frozen=True, eq=False)
class SemilinearProblem:
    """Discrete Dirichlet problem on the unit square.

    ``ellipticity`` is the lower bound lambda of the coefficient used by the
    a priori estimate.
    """

    mesh: StructuredMesh
    boundary: BoundaryMask
    coeff: CoefficientProvider
    g: NonlinearitySpec
    f: PointFunction
    ellipticity: float

    @classmethod
    def fine_scale(
        cls,
        mesh: StructuredMesh,
        spec: MicrostructureSpec,
        eps: float,
        g: NonlinearitySpec,
        f: PointFunction,
    ) -> "SemilinearProblem":
        return cls(mesh, boundary_mask(mesh), epsilon_coefficient(spec, eps), g, f, spec.lam)

    @classmethod
    def homogenized(
        cls, mesh: StructuredMesh, a0: np.ndarray, g: NonlinearitySpec, f: PointFunction
    ) -> "SemilinearProblem":
        a0 = np.asarray(a0, dtype=float)
        lam = float(np.linalg.eigvalsh(0.5 * (a0 + a0.T))[0])
        return cls(mesh, boundary_mask(mesh), constant_coefficient(a0), g, f, lam)

    @cached_property
    def system(self) -> DiscreteSystem:
        free = self.boundary.free_nodes
        stiffness = assemble_stiffness(self.mesh, self.coeff)
        stiffness = stiffness[free][:, free].tocsr()
        mass = assemble_mass_lumped(self.mesh)[free]
        load = assemble_load(self.mesh, self.f)[free]
        return DiscreteSystem(stiffness=stiffness, mass=mass, load=load, free=free)


def apply_operator(system: DiscreteSystem, g: NonlinearitySpec, u_free: np.ndarray) -> np.ndarray:
    """A u + M_L * g(u) on the free nodes."""
    return system.stiffness @ u_free + system.mass * eval_g(g, u_free)


def _residual(system: DiscreteSystem, g: NonlinearitySpec, u_free: np.ndarray) -> np.ndarray:
    return apply_operator(system, g, u_free) - system.load


def _newton(system, g, cfg, u, report):
    """Damped Newton iterations; returns (u, stagnated)."""
    F = _residual(system, g, u)
    norm = float(np.linalg.norm(F))
    while norm > cfg.residual_tol and report.newton_iters < cfg.max_newton:
        jacobian = system.stiffness + sp.diags(system.mass * eval_g_prime(g, u))
        delta, cg_report = cg_solve(jacobian.tocsr(), -F, tol=cfg.cg_tol)
        report.total_cg_iters += cg_report.iterations
        if not cg_report.converged:
            raise ConvergenceError("CG (Newton step)", cg_report.iterations, cg_report.final_residual)

        step = 1.0
        while True:
            trial = u + step * delta
            F_trial = _residual(system, g, trial)
            trial_norm = float(np.linalg.norm(F_trial))
            if trial_norm <= (1.0 - ARMIJO_SUFFICIENT_DECREASE * step) * norm:
                break
            step *= ARMIJO_FACTOR
            if step < MIN_STEP:
                logger.warning(
                    f"Newton stagnated at iteration {report.newton_iters}, residual {norm:.3e}"
                )
                report.final_residual = norm
                return u, step
        u, F, norm = trial, F_trial, trial_norm
        report.newton_iters += 1
        logger.debug(f"Newton {report.newton_iters}: residual {norm:.3e}, step {step:g}")

    report.final_residual = norm
    return u, None


def _picard(system, g, cfg, u, report):
    """Relaxed fixed point u <- (1 - w) u + w A^{-1}(b - M_L g(u))."""
    w = cfg.picard_relaxation
    norm = float(np.linalg.norm(_residual(system, g, u)))
    while norm > cfg.residual_tol and report.picard_iters < cfg.max_picard:
        rhs = system.load - system.mass * eval_g(g, u)
        solution, cg_report = cg_solve(system.stiffness, rhs, tol=cfg.cg_tol, x0=u)
        report.total_cg_iters += cg_report.iterations
        if not cg_report.converged:
            raise ConvergenceError("CG (Picard step)", cg_report.iterations, cg_report.final_residual)
        u = (1.0 - w) * u + w * solution
        norm = float(np.linalg.norm(_residual(system, g, u)))
        report.picard_iters += 1
        logger.debug(f"Picard {report.picard_iters}: residual {norm:.3e}")
    report.final_residual = norm
    return u


def solve_semilinear(
    p: SemilinearProblem,
    cfg: Optional[NewtonConfig] = None,
    initial_guess: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, SolveReport]:
    """
    Solve the discrete problem A u + M_L g(u) = b on the free nodes.

    Args:
        p: Problem definition
        cfg: Solver settings (defaults if None)
        initial_guess: Nodal start vector, zero by default; its boundary
            values are ignored (always 0)

    Returns:
        Tuple (nodal solution, SolveReport)

    Raises:
        NewtonStagnationError: If the line search fails and Picard fallback is off
        ConvergenceError: If CG or the nonlinear iteration does not converge
    """
    cfg = cfg or NewtonConfig()
    system = p.system
    report = SolveReport()
    if initial_guess is None:
        u = np.zeros(system.free.size)
    else:
        u = np.asarray(initial_guess, dtype=float)[system.free].copy()

    if p.g.differentiable and not cfg.force_picard:
        u, stalled_step = _newton(system, p.g, cfg, u, report)
        needs_picard = report.final_residual > cfg.residual_tol
        if needs_picard and not cfg.picard_fallback:
            if stalled_step is not None:
                raise NewtonStagnationError(report.newton_iters, report.final_residual, stalled_step)
            raise ConvergenceError("Newton", report.newton_iters, report.final_residual)
        if needs_picard:
            logger.warning(
                f"Newton stopped at residual {report.final_residual:.3e}; falling back to Picard"
            )
    else:
        needs_picard = True

    if needs_picard:
        report.used_picard = True
        u = _picard(system, p.g, cfg, u, report)

    report.converged = report.final_residual <= cfg.residual_tol
    if not report.converged:
        solver = "Picard" if report.used_picard else "Newton"
        iterations = report.picard_iters if report.used_picard else report.newton_iters
        logger.error(f"{solver} did not converge: residual {report.final_residual:.3e}")
        raise ConvergenceError(solver, iterations, report.final_residual)

    logger.info(
        f"Solved n={p.mesh.n} with g={p.g.kind}: {report.newton_iters} Newton, "
        f"{report.picard_iters} Picard, {report.total_cg_iters} CG iterations, "
        f"residual {report.final_residual:.3e}"
    )
    nodal = np.zeros(p.mesh.num_nodes)
    nodal[system.free] = u
    return nodal, report


class AprioriCheck(NamedTuple):
    lhs: float
    rhs: float
    ok: bool


def apriori_check(u_h: np.ndarray, p: SemilinearProblem, slack: float = 1e-8) -> AprioriCheck:
    """
    Check lambda ||grad u_h|| <= C_P (||f|| + |g(0)|) with C_P = 1 / (pi sqrt(2)).

    The bound follows from testing the weak form with u_h, monotonicity of g,
    ellipticity and the Poincare inequality; it does not depend on eps.
    """
    f_values = evaluate_at_centroids(p.mesh, p.f)
    f_norm = float(np.sqrt(np.dot(p.mesh.areas, f_values**2)))
    lhs = p.ellipticity * h1_seminorm(p.mesh, u_h)
    rhs = POINCARE_CONSTANT * (f_norm + abs(eval_g(p.g, 0.0)))
    ok = lhs <= rhs + slack
    if not ok:
        logger.error(f"A priori bound violated: {lhs:.6e} > {rhs:.6e}")
    return AprioriCheck(lhs=lhs, rhs=rhs, ok=ok)


def sine_bump(points: np.ndarray) -> np.ndarray:
    """sin(pi x1) sin(pi x2)."""
    points = np.asarray(points, dtype=float)
    return np.sin(np.pi * points[:, 0]) * np.sin(np.pi * points[:, 1])


def uniqueness_probe(p: SemilinearProblem, cfg: Optional[NewtonConfig] = None) -> float:
    """L2 distance between the solutions reached from 0 and from 5 sin(pi x1) sin(pi x2)."""
    from_zero, _ = solve_semilinear(p, cfg)
    from_bump, _ = solve_semilinear(p, cfg, initial_guess=5.0 * sine_bump(p.mesh.node_coords))
    distance = l2_norm(p.mesh, from_zero - from_bump)
    logger.info(f"Uniqueness check (g={p.g.kind}, n={p.mesh.n}): distance {distance:.3e}")
    return distance


def build_load(kind: str, value: float = 1.0, g: Optional[NonlinearitySpec] = None) -> PointFunction:
    """
    Right-hand side selected by name.

    ``constant``: f = value; ``linear_x1``: f = value * x1; ``sine``:
    f = value * sin(pi x1) sin(pi x2); ``manufactured``: the load whose exact
    solution with coefficient I is value * sin(pi x1) sin(pi x2) for the given g.
    """
    if kind == "constant":
        return lambda points: np.full(np.asarray(points).shape[0], float(value))
    if kind == "linear_x1":
        return lambda points: value * np.asarray(points, dtype=float)[:, 0]
    if kind == "sine":
        return lambda points: value * sine_bump(points)
    if kind == "manufactured":
        g = g or NonlinearitySpec("zero")

        def manufactured(points):
            exact = value * sine_bump(points)
            return 2.0 * np.pi**2 * exact + eval_g(g, exact)

        return manufactured
    raise ConfigurationError(
        "load.kind",
        f"Unknown load '{kind}'. Supported: constant, linear_x1, sine, manufactured",
    )


def load_from_config(config, g: Optional[NonlinearitySpec] = None) -> PointFunction:
    return build_load(config.get("load.kind"), config.get("load.value"), g)
