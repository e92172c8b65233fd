"""Epsilon sweeps comparing fine-scale and homogenized solutions, pairing checks and file output."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import astuple, dataclass, field, fields
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from .cell_homog import CellSolutions, EffectiveTensor, homogenize_cell
from .exceptions import ConfigurationError, HomogenizeError, OutputError, SweepError
from .fem_core import (
    PointFunction,
    assemble_mass_lumped,
    element_gradients,
    h1_seminorm,
    l2_norm,
    piecewise_l2_norm,
)
from .mesh import StructuredMesh, build_unit_square_mesh, interpolate, locate_elements
from .microstructure import MicrostructureSpec, NonlinearitySpec, cell_fraction
from .semilinear import (
    AprioriCheck,
    NewtonConfig,
    SemilinearProblem,
    apriori_check,
    build_load,
    solve_semilinear,
)

logger = logging.getLogger(__name__)

COLUMNS = (
    "eps",
    "h",
    "l2_error",
    "grad_error",
    "corrector_energy_error",
    "newton_iters",
    "cg_iters",
)

PHI: Dict[str, PointFunction] = {
    "one": lambda points: np.ones(np.asarray(points).shape[0]),
    "x1": lambda points: np.asarray(points, dtype=float)[:, 0],
    "sine": lambda points: np.sin(np.pi * np.asarray(points, dtype=float)[:, 0])
    * np.sin(np.pi * np.asarray(points, dtype=float)[:, 1]),
}


def periods_per_side(eps: float) -> int:
    """
    Return k = 1 / eps for eps the reciprocal of a positive integer.

    Raises:
        ConfigurationError: If 1 / eps is not (up to round-off) a positive integer
    """
    if not (isinstance(eps, (int, float)) and math.isfinite(eps) and eps > 0.0):
        raise ConfigurationError("sweep.eps_list", f"eps must be > 0, got {eps!r}")
    k = round(1.0 / eps)
    if k < 1 or abs(1.0 / eps - k) > 1e-9 * k:
        raise ConfigurationError(
            "sweep.eps_list", f"eps = {eps:g} is not of the form 1/k for an integer k"
        )
    return k


@dataclass(frozen=True)
class SweepConfig:
    """Everything a sweep needs; rows are produced for eps in decreasing order."""

    spec: MicrostructureSpec = field(default_factory=MicrostructureSpec)
    g: NonlinearitySpec = field(default_factory=NonlinearitySpec)
    load_kind: str = "constant"
    load_value: float = 1.0
    eps_list: Tuple[float, ...] = (0.25, 0.125, 0.0625)
    cells_per_period: int = 16
    cell_mesh_n: int = 128
    reference_n: int = 128
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    max_workers: int = 1

    def __post_init__(self):
        if not self.eps_list:
            raise ConfigurationError("sweep.eps_list", "eps_list is empty")
        for eps in self.eps_list:
            periods_per_side(eps)
        if self.cells_per_period < 1:
            raise ConfigurationError(
                "sweep.cells_per_period", "cells_per_period must be a positive integer"
            )
        if self.max_workers < 1:
            raise ConfigurationError("sweep.max_workers", "max_workers must be >= 1")
        # Fails early on an unknown load kind.
        build_load(self.load_kind, self.load_value, self.g)

    @classmethod
    def from_config(cls, config) -> "SweepConfig":
        return cls(
            spec=MicrostructureSpec.from_config(config),
            g=NonlinearitySpec.from_config(config),
            load_kind=config.get("load.kind"),
            load_value=config.get("load.value"),
            eps_list=tuple(config.get("sweep.eps_list")),
            cells_per_period=config.get("sweep.cells_per_period"),
            cell_mesh_n=config.get("sweep.cell_mesh_n"),
            reference_n=config.get("sweep.reference_n"),
            newton=NewtonConfig.from_config(config),
            max_workers=config.get("sweep.max_workers"),
        )

    @property
    def f(self) -> PointFunction:
        return build_load(self.load_kind, self.load_value, self.g)

    @property
    def sorted_eps(self) -> List[float]:
        return sorted(set(self.eps_list), reverse=True)

    def fine_n(self, eps: float) -> int:
        """Fine mesh size n = cells_per_period / eps, so h divides eps."""
        return self.cells_per_period * periods_per_side(eps)


@dataclass(frozen=True)
class ErrorRow:
    eps: float
    h: float
    l2_error: float
    grad_error: float
    corrector_energy_error: float
    newton_iters: int
    cg_iters: int


class PairingRow(NamedTuple):
    eps: float
    lhs: float
    rhs: float
    gap: float


@dataclass
class ErrorTable:
    """One row per eps plus the per-row diagnostics that do not go to the CSV."""

    rows: List[ErrorRow] = field(default_factory=list)
    apriori: List[AprioriCheck] = field(default_factory=list)
    gradient_pairing: List[PairingRow] = field(default_factory=list)
    consistency: List[Tuple[float, float]] = field(default_factory=list)
    homogenized_apriori: Optional[AprioriCheck] = None
    tensor: Optional[EffectiveTensor] = None

    def __len__(self) -> int:
        return len(self.rows)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([astuple(row) for row in self.rows], columns=list(COLUMNS))

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "ErrorTable":
        rows = []
        for record in frame.to_dict("records"):
            rows.append(
                ErrorRow(
                    **{
                        f.name: (int if f.type is int else float)(record[f.name])
                        for f in fields(ErrorRow)
                    }
                )
            )
        return cls(rows=rows)


@dataclass(frozen=True, eq=False)
class CorrectorField:
    """First-order corrector u0 + eps * d_i u0 * chi^i(x / eps) on a fine mesh."""

    values: np.ndarray  # nodal
    gradient: np.ndarray  # (T, 2), grad u0 + d_i u0 * grad_y chi^i(x / eps)
    nodal_gradient: np.ndarray  # (N, 2), recovered d_i u0
    eps: float
    mesh: StructuredMesh


def recover_nodal_gradient(mesh: StructuredMesh, u: np.ndarray) -> np.ndarray:
    """Arithmetic average of the element gradients around each node, shape (N, 2)."""
    grads = element_gradients(mesh, u)
    nodes = mesh.triangles.ravel()
    counts = np.bincount(nodes, minlength=mesh.num_nodes)
    averaged = np.empty((mesh.num_nodes, 2))
    for i in range(2):
        sums = np.bincount(nodes, weights=np.repeat(grads[:, i], 3), minlength=mesh.num_nodes)
        averaged[:, i] = sums / counts
    return averaged


def assemble_corrector(
    u0: np.ndarray, cells: CellSolutions, eps: float, fine_mesh: StructuredMesh
) -> CorrectorField:
    """
    Build the corrector field of u0 on the fine mesh.

    chi^i(x / eps) is the P1 interpolant of the cell solution at frac(x / eps);
    the corrected gradient drops the eps * grad_x u1 term.

    Args:
        u0: Homogenized solution, nodal on the fine mesh
        cells: Cell problem solutions
        eps: Period of the microstructure
        fine_mesh: Mesh u0 lives on

    Returns:
        CorrectorField
    """
    u0 = np.asarray(u0, dtype=float)
    cell_mesh = cells.cell_mesh
    nodal_gradient = recover_nodal_gradient(fine_mesh, u0)
    node_cells = cell_fraction(fine_mesh.node_coords, eps)
    values = u0.copy()
    for i, chi in enumerate(cells.chis):
        values += eps * nodal_gradient[:, i] * interpolate(cell_mesh, chi, node_cells)

    grad_u0 = element_gradients(fine_mesh, u0)
    cell_tri, _, _ = locate_elements(cell_mesh, cell_fraction(fine_mesh.centroids, eps))
    gradient = grad_u0.copy()
    for i, chi in enumerate(cells.chis):
        grad_chi = element_gradients(cell_mesh, chi)[cell_tri]
        gradient += grad_u0[:, i : i + 1] * grad_chi

    return CorrectorField(
        values=values,
        gradient=gradient,
        nodal_gradient=nodal_gradient,
        eps=eps,
        mesh=fine_mesh,
    )


def corrector_energy_error(
    u_eps: np.ndarray, corr: CorrectorField, fine_mesh: StructuredMesh
) -> float:
    """L2 norm of grad u_eps minus the corrected gradient, element by element."""
    return piecewise_l2_norm(fine_mesh, element_gradients(fine_mesh, u_eps) - corr.gradient)


def corrector_consistency_bound(corr: CorrectorField, cells: CellSolutions) -> float:
    """eps * sum_i max|d_i u0| * max|chi^i|, an upper bound on ||corrector - u0||_L2."""
    return corr.eps * sum(
        float(np.abs(corr.nodal_gradient[:, i]).max()) * float(np.abs(chi).max())
        for i, chi in enumerate(cells.chis)
    )


def two_scale_pairing_check(
    phi: PointFunction, eps_list: Sequence[float], points_per_period: int = 32
) -> List[PairingRow]:
    """
    Compare int |psi(x, x/eps)|^2 with its two-scale limit for psi = phi(x) cos(2 pi y1).

    Both integrals use lumped quadrature on a mesh with h = eps / points_per_period,
    so the limit 1/2 int phi^2 is evaluated on the same nodes.
    """
    rows = []
    for eps in sorted(eps_list, reverse=True):
        mesh = build_unit_square_mesh(points_per_period * periods_per_side(eps))
        x = mesh.node_coords
        weights = assemble_mass_lumped(mesh)
        phi_values = np.asarray(phi(x), dtype=float)
        psi = phi_values * np.cos(2.0 * np.pi * x[:, 0] / eps)
        lhs = float(np.dot(weights, psi**2))
        rhs = 0.5 * float(np.dot(weights, phi_values**2))
        rows.append(PairingRow(eps=eps, lhs=lhs, rhs=rhs, gap=abs(lhs - rhs)))
        logger.info(f"Pairing eps={eps:g}: lhs {lhs:.8f}, rhs {rhs:.8f}, gap {abs(lhs - rhs):.3e}")
    return rows


def gradient_pairing_check(
    u_eps: np.ndarray,
    fine_mesh: StructuredMesh,
    u0: np.ndarray,
    cells: CellSolutions,
    eps: float,
    phi: PointFunction = PHI["one"],
) -> PairingRow:
    """
    Pair d_1 u_eps with phi(x) cos(2 pi x1 / eps) and compare with its two-scale limit.

    The limit is sum_i int phi d_i u0 dx * int d_{y1} chi^i cos(2 pi y1) dy, the
    oscillating part of grad u0 + grad_y u1.
    """
    centroids = fine_mesh.centroids
    areas = fine_mesh.areas
    weight = np.asarray(phi(centroids), dtype=float)
    oscillation = np.cos(2.0 * np.pi * centroids[:, 0] / eps)
    lhs = float(np.dot(areas, element_gradients(fine_mesh, u_eps)[:, 0] * weight * oscillation))

    grad_u0 = element_gradients(fine_mesh, u0)
    cell_mesh = cells.cell_mesh
    cell_cos = np.cos(2.0 * np.pi * cell_mesh.centroids[:, 0])
    rhs = 0.0
    for i, chi in enumerate(cells.chis):
        macro = float(np.dot(areas, weight * grad_u0[:, i]))
        micro = float(np.dot(cell_mesh.areas, element_gradients(cell_mesh, chi)[:, 0] * cell_cos))
        rhs += macro * micro
    return PairingRow(eps=eps, lhs=lhs, rhs=rhs, gap=abs(lhs - rhs))


class _RowResult(NamedTuple):
    row: ErrorRow
    apriori: AprioriCheck
    pairing: PairingRow
    consistency: Tuple[float, float]


def _sweep_row(
    cfg: SweepConfig,
    eps: float,
    cells: CellSolutions,
    reference_mesh: StructuredMesh,
    u0_reference: np.ndarray,
) -> _RowResult:
    fine_mesh = build_unit_square_mesh(cfg.fine_n(eps))
    problem = SemilinearProblem.fine_scale(fine_mesh, cfg.spec, eps, cfg.g, cfg.f)
    u_eps, report = solve_semilinear(problem, cfg.newton)

    u0 = interpolate(reference_mesh, u0_reference, fine_mesh.node_coords)
    corr = assemble_corrector(u0, cells, eps, fine_mesh)
    difference = u_eps - u0
    row = ErrorRow(
        eps=eps,
        h=fine_mesh.h,
        l2_error=l2_norm(fine_mesh, difference),
        grad_error=h1_seminorm(fine_mesh, difference),
        corrector_energy_error=corrector_energy_error(u_eps, corr, fine_mesh),
        newton_iters=report.newton_iters,
        cg_iters=report.total_cg_iters,
    )
    consistency = (l2_norm(fine_mesh, corr.values - u0), corrector_consistency_bound(corr, cells))
    logger.info(
        f"eps={eps:g} (n={fine_mesh.n}): l2 {row.l2_error:.4e}, grad {row.grad_error:.4e}, "
        f"corrector {row.corrector_energy_error:.4e}"
    )
    return _RowResult(
        row=row,
        apriori=apriori_check(u_eps, problem),
        pairing=gradient_pairing_check(u_eps, fine_mesh, u0, cells, eps, phi=PHI["x1"]),
        consistency=consistency,
    )


def run_epsilon_sweep(
    cfg: SweepConfig,
    progress: bool = True,
    cells: Optional[CellSolutions] = None,
    tensor: Optional[EffectiveTensor] = None,
) -> ErrorTable:
    """
    Run the fine-scale versus homogenized comparison for every eps.

    Args:
        cfg: Sweep configuration
        progress: Show a tqdm progress bar over the rows
        cells, tensor: Precomputed cell solutions and a0 (computed on
            cfg.cell_mesh_n when omitted)

    Returns:
        ErrorTable with rows sorted by decreasing eps

    Raises:
        SweepError: If any fine-scale sub-solve fails
    """
    if cells is None or tensor is None:
        cells, tensor = homogenize_cell(cfg.spec, cfg.cell_mesh_n, tol=cfg.newton.cg_tol)

    reference_mesh = build_unit_square_mesh(cfg.reference_n)
    homogenized = SemilinearProblem.homogenized(reference_mesh, tensor.a0, cfg.g, cfg.f)
    u0_reference, _ = solve_semilinear(homogenized, cfg.newton)
    table = ErrorTable(tensor=tensor, homogenized_apriori=apriori_check(u0_reference, homogenized))

    eps_values = cfg.sorted_eps

    def run(eps):
        try:
            return _sweep_row(cfg, eps, cells, reference_mesh, u0_reference)
        except HomogenizeError as e:
            logger.error(f"Sweep row eps={eps:g} failed: {e}")
            raise SweepError(eps, e) from e

    with tqdm(total=len(eps_values), desc="eps sweep", unit="row", disable=not progress) as bar:
        if cfg.max_workers > 1:
            with ThreadPoolExecutor(max_workers=cfg.max_workers) as executor:
                results = []
                for result in executor.map(run, eps_values):
                    results.append(result)
                    bar.update(1)
        else:
            results = []
            for eps in eps_values:
                results.append(run(eps))
                bar.update(1)

    for result in results:
        table.rows.append(result.row)
        table.apriori.append(result.apriori)
        table.gradient_pairing.append(result.pairing)
        table.consistency.append(result.consistency)
    return table


def write_outputs(table: ErrorTable, path: str) -> None:
    """
    Write the error table as CSV.

    Raises:
        OutputError: If the table is empty or the file cannot be written
    """
    if not table.rows:
        raise OutputError(path, "Refusing to write an empty error table")
    try:
        table.to_frame().to_csv(path, index=False)
    except OSError as e:
        logger.error(f"Cannot write {path}: {e}")
        raise OutputError(path)
    logger.info(f"Error table written to {path}")


def read_error_table(path: str) -> ErrorTable:
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = [c for c in COLUMNS if c not in frame.columns]
    if missing:
        raise ConfigurationError("errors.csv", f"Missing columns in {path}: {', '.join(missing)}")
    return ErrorTable.from_frame(frame)


PLOT_SCRIPT = '''"""Log-log plot of the homogenization errors against eps."""

import matplotlib.pyplot as plt
import pandas as pd

df = pd.read_csv("{csv_name}")

fig, ax = plt.subplots()
ax.loglog(df["eps"], df["l2_error"], "o-", label="l2_error")
ax.loglog(df["eps"], df["grad_error"], "s-", label="grad_error")
ax.loglog(df["eps"], df["corrector_energy_error"], "^-", label="corrector_energy_error")
ax.set_xlabel("eps")
ax.set_ylabel("error")
ax.legend()
ax.grid(True, which="both", alpha=0.3)
fig.savefig("{image_name}", dpi=150, bbox_inches="tight")
'''


def emit_plot_script(
    table: ErrorTable, path: str, csv_name: str = "errors.csv", image_name: str = "errors.png"
) -> None:
    """
    Write a standalone matplotlib script plotting the error CSV on log-log axes.

    Raises:
        OutputError: If the table is empty or the file cannot be written
    """
    if not table.rows:
        raise OutputError(path, "Nothing to plot: the error table is empty")
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write(PLOT_SCRIPT.format(csv_name=csv_name, image_name=image_name))
    except OSError as e:
        logger.error(f"Cannot write {path}: {e}")
        raise OutputError(path)


def write_solution_csv(mesh: StructuredMesh, u: np.ndarray, path: str) -> None:
    """Write a nodal field as CSV with columns node, x1, x2, u."""
    frame = pd.DataFrame(
        {
            "node": np.arange(mesh.num_nodes),
            "x1": mesh.node_coords[:, 0],
            "x2": mesh.node_coords[:, 1],
            "u": np.asarray(u, dtype=float),
        }
    )
    try:
        frame.to_csv(path, index=False)
    except OSError as e:
        logger.error(f"Cannot write {path}: {e}")
        raise OutputError(path)


def write_tensor_csv(tensor: EffectiveTensor, path: str) -> None:
    """Write a0 as a headerless 2x2 CSV."""
    try:
        pd.DataFrame(tensor.a0).to_csv(path, header=False, index=False)
    except OSError as e:
        logger.error(f"Cannot write {path}: {e}")
        raise OutputError(path)
