"""Periodic cell problems, the effective tensor a0 and analytic bounds on it."""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .exceptions import ConfigurationError, ConvergenceError
from .fem_core import (
    DEFAULT_CG_TOL,
    CgReport,
    assemble_flux_load,
    assemble_mass_lumped,
    assemble_stiffness,
    cg_solve,
    element_gradients,
    sample_coefficients,
)
from .mesh import PeriodicMap, StructuredMesh, build_periodic_map, build_unit_square_mesh
from .microstructure import MicrostructureSpec, cell_coefficient

logger = logging.getLogger(__name__)

UNIT_VECTORS = (np.array([1.0, 0.0]), np.array([0.0, 1.0]))

NEGLIGIBLE_LOAD = 1e-12


@dataclass(frozen=True, eq=False)
class CellSolutions:
    """Mean-zero periodic correctors chi^1, chi^2 as nodal fields on the cell mesh."""

    chi1: np.ndarray
    chi2: np.ndarray
    cell_mesh: StructuredMesh
    spec: MicrostructureSpec
    reports: Tuple[CgReport, CgReport] = ()

    @property
    def chis(self) -> Tuple[np.ndarray, np.ndarray]:
        return (self.chi1, self.chi2)


@dataclass(frozen=True, eq=False)
class EffectiveTensor:
    """The homogenized 2x2 coefficient matrix."""

    a0: np.ndarray

    @property
    def symmetry_defect(self) -> float:
        return float(abs(self.a0[0, 1] - self.a0[1, 0]))

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.a0 + self.a0.T))


def _check_alignment(cell_mesh: StructuredMesh, spec: MicrostructureSpec) -> None:
    if cell_mesh.n < 8:
        logger.warning(f"Cell mesh n={cell_mesh.n} is too coarse to resolve the geometry")
    if spec.kind in ("laminate", "checkerboard") and cell_mesh.n % 2:
        logger.warning(
            f"{spec.kind} interface y=0.5 does not align with mesh lines for n={cell_mesh.n}"
        )


def solve_cell_problems(
    cell_mesh: StructuredMesh,
    pmap: PeriodicMap,
    spec: MicrostructureSpec,
    tol: float = DEFAULT_CG_TOL,
) -> CellSolutions:
    """
    Solve -div a(y)(grad chi^i + e^i) = 0 with periodic conditions for i = 1, 2.

    The singular periodic system is consistent; CG runs on it directly and the
    lumped mean of each corrector is subtracted afterwards.

    Raises:
        ConvergenceError: If CG does not converge
    """
    _check_alignment(cell_mesh, spec)
    coeff = cell_coefficient(spec)
    stiffness = assemble_stiffness(cell_mesh, coeff, dof_map=pmap.dof_index)
    mass = assemble_mass_lumped(cell_mesh)
    total_mass = mass.sum()

    chis = []
    reports = []
    for i, e in enumerate(UNIT_VECTORS, start=1):
        rhs = assemble_flux_load(cell_mesh, coeff, e, dof_map=pmap.dof_index)
        # Remove the round-off component along the constants (kernel of the matrix).
        rhs -= rhs.mean()
        if np.abs(rhs).max() <= NEGLIGIBLE_LOAD * spec.Lam * cell_mesh.h:
            # No contrast along e: the load is round-off and chi^i = 0.
            dof_values = np.zeros(pmap.free_count)
            report = CgReport(iterations=0, final_residual=float(np.linalg.norm(rhs)), converged=True)
        else:
            dof_values, report = cg_solve(stiffness, rhs, tol=tol)
        if not report.converged:
            logger.error(f"Cell problem {i} failed after {report.iterations} CG iterations")
            raise ConvergenceError("CG (cell problem)", report.iterations, report.final_residual)
        chi = dof_values[pmap.dof_index]
        chi -= np.dot(mass, chi) / total_mass
        chis.append(chi)
        reports.append(report)
        logger.info(
            f"Cell problem {i} ({spec.kind}, n={cell_mesh.n}): "
            f"{report.iterations} CG iterations, residual {report.final_residual:.3e}"
        )

    return CellSolutions(
        chi1=chis[0], chi2=chis[1], cell_mesh=cell_mesh, spec=spec, reports=tuple(reports)
    )


def corrected_gradients(cells: CellSolutions) -> Tuple[np.ndarray, np.ndarray]:
    """Element-wise e^i + grad chi^i on the cell mesh, each of shape (T, 2)."""
    return tuple(
        e + element_gradients(cells.cell_mesh, chi) for e, chi in zip(UNIT_VECTORS, cells.chis)
    )


def compute_effective_tensor(cells: CellSolutions) -> EffectiveTensor:
    """a0_ij = sum_T |T| a(T)(e^i + grad chi^i) . (e^j + grad chi^j)."""
    mesh = cells.cell_mesh
    samples = sample_coefficients(mesh, cell_coefficient(cells.spec))
    fields = corrected_gradients(cells)
    a0 = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            a0[i, j] = np.dot(
                mesh.areas, np.einsum("ti,tij,tj->t", fields[i], samples, fields[j])
            )
    logger.info(f"Effective tensor: [[{a0[0, 0]:.8f}, {a0[0, 1]:.3e}], [{a0[1, 0]:.3e}, {a0[1, 1]:.8f}]]")
    return EffectiveTensor(a0=a0)


def inclusion_fraction(spec: MicrostructureSpec) -> float:
    """Area fraction |Y_s| of the inclusion phase."""
    if spec.kind == "constant":
        return 0.0
    if spec.kind == "circular_inclusion":
        return math.pi * spec.radius**2
    return 0.5


def voigt_reuss_bounds(spec: MicrostructureSpec) -> Tuple[float, float]:
    """(harmonic mean, arithmetic mean) of the phase values weighted by area fractions."""
    a_m, a_s = spec.phase_values
    f_s = inclusion_fraction(spec)
    f_m = 1.0 - f_s
    upper = f_m * a_m + f_s * a_s
    lower = 1.0 / (f_m / a_m + f_s / a_s)
    return lower, upper


def hashin_shtrikman_bounds(spec: MicrostructureSpec) -> Tuple[float, float]:
    """
    Two-dimensional Hashin-Shtrikman bounds for isotropic two-phase media.

    Raises:
        ConfigurationError: For the laminate, whose effective tensor is anisotropic
    """
    if spec.kind == "laminate":
        raise ConfigurationError(
            "microstructure.kind", "Hashin-Shtrikman bounds need an isotropic geometry"
        )
    a_m, a_s = spec.phase_values
    f_s = inclusion_fraction(spec)
    f_m = 1.0 - f_s
    (a1, f1), (a2, f2) = sorted([(a_m, f_m), (a_s, f_s)])
    if a1 == a2:
        return a1, a1
    lower = a1 + f2 / (1.0 / (a2 - a1) + f1 / (2.0 * a1))
    upper = a2 + f1 / (1.0 / (a1 - a2) + f2 / (2.0 * a2))
    return lower, upper


def richardson_extrapolate(values: Sequence[float]) -> float:
    """
    Extrapolate the limit of a sequence computed on meshes n, 2n, 4n.

    Uses the Aitken form of Richardson extrapolation with an observed rate;
    returns the last value when the differences do not contract.
    """
    if len(values) < 3:
        return float(values[-1])
    a0, a1, a2 = (float(v) for v in values[-3:])
    d1, d2 = a1 - a0, a2 - a1
    if d1 == 0.0 or d2 == 0.0 or d2 / d1 <= 0.0 or abs(d2) >= abs(d1):
        return a2
    ratio = d2 / d1
    return a2 + d2 * ratio / (1.0 - ratio)


def homogenize_cell(
    spec: MicrostructureSpec, n: int, tol: float = DEFAULT_CG_TOL
) -> Tuple[CellSolutions, EffectiveTensor]:
    """Build the cell mesh, solve both cell problems and return a0."""
    cell_mesh = build_unit_square_mesh(n)
    cells = solve_cell_problems(cell_mesh, build_periodic_map(cell_mesh), spec, tol=tol)
    return cells, compute_effective_tensor(cells)


def check_tensor_bounds(
    tensor: EffectiveTensor, spec: MicrostructureSpec, slack: float = 1e-10
) -> Optional[str]:
    """Return a description of the violated bound, or None when a0 sits inside Voigt-Reuss."""
    lower, upper = voigt_reuss_bounds(spec)
    eigs = tensor.eigenvalues
    if tensor.symmetry_defect > 1e-12:
        return f"symmetry defect {tensor.symmetry_defect:.3e}"
    if eigs[0] < lower - slack:
        return f"eigenvalue {eigs[0]:.10f} below harmonic mean {lower:.10f}"
    if eigs[1] > upper + slack:
        return f"eigenvalue {eigs[1]:.10f} above arithmetic mean {upper:.10f}"
    return None
