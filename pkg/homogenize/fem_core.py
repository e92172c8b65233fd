"""P1 finite-element kernel: assembly, Jacobi-preconditioned CG and discrete norms.

Coefficient providers map an array of points of shape (P, 2) to matrices of
shape (P, 2, 2); loads map points to values of shape (P,). Both are sampled
at triangle centroids. ``dof_map`` optionally renumbers nodes into degrees
of freedom (periodic identification); by default every node is a dof.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from .exceptions import ConfigurationError, EvaluationError, PreconditionerError
from .mesh import StructuredMesh

logger = logging.getLogger(__name__)

CoefficientProvider = Callable[[np.ndarray], np.ndarray]
PointFunction = Callable[[np.ndarray], np.ndarray]

DEFAULT_CG_TOL = 1e-10


@dataclass(frozen=True)
class CgReport:
    """Outcome of one conjugate-gradient solve."""

    iterations: int
    final_residual: float
    converged: bool


def _dofs(mesh: StructuredMesh, dof_map: Optional[np.ndarray]) -> Tuple[np.ndarray, int]:
    if dof_map is None:
        return mesh.triangles, mesh.num_nodes
    dof_map = np.asarray(dof_map)
    return dof_map[mesh.triangles], int(dof_map.max()) + 1


def sample_coefficients(mesh: StructuredMesh, coeff: CoefficientProvider) -> np.ndarray:
    """
    Sample a coefficient provider at the centroids and check the samples are SPD.

    Raises:
        ConfigurationError: If a sample is not symmetric positive definite
    """
    samples = np.broadcast_to(
        np.asarray(coeff(mesh.centroids), dtype=float), (mesh.num_triangles, 2, 2)
    )
    asym = np.abs(samples[:, 0, 1] - samples[:, 1, 0])
    scale = np.maximum(np.abs(samples).max(axis=(1, 2)), 1.0)
    if not np.all(np.isfinite(samples)) or np.any(asym > 1e-12 * scale):
        raise ConfigurationError("coefficient", "Coefficient sample is not symmetric")
    smallest = np.linalg.eigvalsh(samples)[:, 0]
    if np.any(smallest <= 0.0):
        bad = int(np.argmin(smallest))
        raise ConfigurationError(
            "coefficient",
            f"Coefficient sample at triangle {bad} is not positive definite "
            f"(smallest eigenvalue {smallest[bad]:.3e})",
        )
    return samples


def assemble_stiffness(
    mesh: StructuredMesh,
    coeff: CoefficientProvider,
    dof_map: Optional[np.ndarray] = None,
) -> sp.csr_matrix:
    """
    Assemble A_ij = sum_T (coeff(T) grad phi_j) . grad phi_i |T|.

    Args:
        mesh: Structured mesh
        coeff: Coefficient provider sampled at centroids
        dof_map: Optional node-to-dof renumbering

    Returns:
        Symmetric positive semidefinite CSR matrix
    """
    samples = sample_coefficients(mesh, coeff)
    grads = mesh.basis_gradients
    local = np.einsum("tai,tij,tbj->tab", grads, samples, grads) * mesh.areas[:, None, None]
    dofs, size = _dofs(mesh, dof_map)
    rows = np.repeat(dofs, 3, axis=1).ravel()
    cols = np.tile(dofs, (1, 3)).ravel()
    matrix = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(size, size)).tocsr()
    matrix.sum_duplicates()
    return matrix


def assemble_mass_lumped(
    mesh: StructuredMesh, dof_map: Optional[np.ndarray] = None
) -> np.ndarray:
    """Lumped mass: entry i is the sum of |T|/3 over triangles T incident to i."""
    dofs, size = _dofs(mesh, dof_map)
    weights = np.repeat(mesh.areas / 3.0, 3)
    return np.bincount(dofs.ravel(), weights=weights, minlength=size)


def evaluate_at_centroids(mesh: StructuredMesh, f: PointFunction, name: str = "f") -> np.ndarray:
    """
    Evaluate a point function at the centroids.

    Raises:
        EvaluationError: If any value is not finite
    """
    values = np.broadcast_to(
        np.asarray(f(mesh.centroids), dtype=float), (mesh.num_triangles,)
    )
    bad = ~np.isfinite(values)
    if np.any(bad):
        logger.error(f"Load '{name}' is not finite at {int(bad.sum())} centroid(s)")
        raise EvaluationError(name, int(bad.sum()))
    return values


def assemble_load(
    mesh: StructuredMesh,
    f: PointFunction,
    dof_map: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Load vector: entry i is the sum of f(centroid_T) |T| / 3 over incident triangles."""
    values = evaluate_at_centroids(mesh, f)
    dofs, size = _dofs(mesh, dof_map)
    weights = np.repeat(values * mesh.areas / 3.0, 3)
    return np.bincount(dofs.ravel(), weights=weights, minlength=size)


def assemble_flux_load(
    mesh: StructuredMesh,
    coeff: CoefficientProvider,
    direction: np.ndarray,
    dof_map: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Right-hand side -int a e . grad phi_i for a constant vector e."""
    samples = sample_coefficients(mesh, coeff)
    flux = samples @ np.asarray(direction, dtype=float)
    local = -np.einsum("tai,ti->ta", mesh.basis_gradients, flux) * mesh.areas[:, None]
    dofs, size = _dofs(mesh, dof_map)
    return np.bincount(dofs.ravel(), weights=local.ravel(), minlength=size)


def cg_solve(
    A: sp.spmatrix,
    b: np.ndarray,
    tol: float = DEFAULT_CG_TOL,
    maxit: Optional[int] = None,
    x0: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, CgReport]:
    """
    Solve A x = b with Jacobi-preconditioned conjugate gradients.

    Args:
        A: Symmetric positive (semi)definite matrix; semidefinite systems
            must be consistent
        b: Right-hand side
        tol: Relative tolerance on the Euclidean residual norm
        maxit: Iteration cap, 10 * n_dof by default
        x0: Initial guess, zero by default

    Returns:
        Tuple (x, CgReport)

    Raises:
        PreconditionerError: If A has a zero diagonal entry
    """
    b = np.asarray(b, dtype=float)
    size = b.shape[0]
    maxit = maxit or 10 * size
    diagonal = A.diagonal()
    bad = np.flatnonzero(~np.isfinite(diagonal) | (diagonal == 0.0))
    if bad.size:
        logger.error(f"Zero diagonal entry at row {bad[0]}")
        raise PreconditionerError(int(bad[0]))

    b_norm = float(np.linalg.norm(b))
    x = np.zeros(size) if x0 is None else np.array(x0, dtype=float)
    if b_norm == 0.0 and x0 is None:
        return x, CgReport(iterations=0, final_residual=0.0, converged=True)

    target = tol * b_norm
    jacobi = sp.diags(1.0 / diagonal)
    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    residual = float(np.linalg.norm(b - A @ x))
    # The recurrence residual can drift from the true one; restart on the true residual.
    for _ in range(3):
        if residual <= target:
            break
        remaining = maxit - iterations
        if remaining <= 0:
            break
        x, _info = cg(A, b, x0=x, rtol=tol, atol=0.0, maxiter=remaining, M=jacobi, callback=count)
        residual = float(np.linalg.norm(b - A @ x))

    report = CgReport(
        iterations=iterations, final_residual=residual, converged=residual <= target
    )
    logger.debug(
        f"CG: {report.iterations} iterations, residual {report.final_residual:.3e}"
        f" (target {target:.3e})"
    )
    return x, report


def element_gradients(mesh: StructuredMesh, u: np.ndarray) -> np.ndarray:
    """Piecewise-constant gradient of a nodal P1 field, shape (T, 2)."""
    u = np.asarray(u, dtype=float)
    return np.einsum("ta,tai->ti", u[mesh.triangles], mesh.basis_gradients)


def l2_norm(mesh: StructuredMesh, u: np.ndarray) -> float:
    """L2 norm with lumped (nodal) quadrature."""
    u = np.asarray(u, dtype=float)
    return float(np.sqrt(np.dot(assemble_mass_lumped(mesh), u * u)))


def h1_seminorm(mesh: StructuredMesh, u: np.ndarray) -> float:
    """H1 seminorm, exact for the piecewise-constant P1 gradient."""
    grads = element_gradients(mesh, u)
    return float(np.sqrt(np.dot(mesh.areas, np.einsum("ti,ti->t", grads, grads))))


def piecewise_l2_norm(mesh: StructuredMesh, values: np.ndarray) -> float:
    """L2 norm of an element-wise constant (scalar or vector) field."""
    values = np.asarray(values, dtype=float).reshape(mesh.num_triangles, -1)
    return float(np.sqrt(np.dot(mesh.areas, np.einsum("ti,ti->t", values, values))))
