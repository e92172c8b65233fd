"""Command-line interface: homogenize cell|solve|sweep|pairing|verify."""

import functools
import logging
from dataclasses import astuple
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from .cell_homog import (
    check_tensor_bounds,
    hashin_shtrikman_bounds,
    homogenize_cell,
    voigt_reuss_bounds,
)
from .config import Config, get_config, set_config
from .exceptions import HomogenizeError, get_error_suggestion, setup_logging
from .mesh import boundary_mask, build_periodic_map, build_unit_square_mesh, write_vtk
from .microstructure import check_growth, check_monotone
from .multiscale_exp import (
    COLUMNS,
    PHI,
    SweepConfig,
    emit_plot_script,
    run_epsilon_sweep,
    two_scale_pairing_check,
    write_outputs,
    write_solution_csv,
    write_tensor_csv,
)
from .semilinear import SemilinearProblem, apriori_check, solve_semilinear, uniqueness_probe
from .ui_utils import (
    CheckStats,
    format_table,
    print_error,
    print_header,
    print_info,
    print_success,
    print_warning,
)

logger = logging.getLogger(__name__)

EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2

UNIQUENESS_TOL = 1e-7
PAIRING_FLOOR = 1e-6


def _parse_eps(value: str) -> float:
    try:
        return float(Fraction(value.strip()))
    except (ValueError, ZeroDivisionError):
        raise click.BadParameter(f"'{value}' is not a number or fraction like 1/8")


def command_with_checks(func):
    """Run a command body with a CheckStats tally and map the outcome to the exit code."""

    @click.pass_context
    @functools.wraps(func)
    def wrapper(ctx, *args, **kwargs):
        stats = CheckStats()
        stats.start()
        try:
            func(stats, *args, **kwargs)
        except HomogenizeError as e:
            logger.error(f"{ctx.info_name} failed: {e}")
            print(get_error_suggestion(e))
            ctx.exit(EXIT_ERROR)
        stats.end()
        stats.print_summary()
        if not stats.all_passed:
            ctx.exit(EXIT_CHECK_FAILED)

    return wrapper


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False),
    default=None,
    help="Configuration file with [section] key = value lines.",
)
@click.option("--out", default=None, help="Output directory (or tensor CSV path for 'cell').")
@click.option("--verbose", is_flag=True, help="Also log to the console.")
@click.pass_context
def cli(ctx, config_path, out, verbose):
    """Periodic homogenization of semilinear elliptic problems on the unit square."""
    try:
        config = Config(config_path) if config_path else get_config()
    except HomogenizeError as e:
        print(get_error_suggestion(e))
        ctx.exit(EXIT_ERROR)
    if out and not out.endswith(".csv"):
        config.set("output.output_dir", out)
    set_config(config)
    setup_logging(
        config.get_log_path(), verbose=verbose or config.get("output.verbose")
    )
    ctx.obj = {"config": config, "out": out}


@cli.command()
@command_with_checks
def cell(stats):
    """Solve the cell problems and print the effective tensor a0."""
    ctx = click.get_current_context()
    config = ctx.obj["config"]
    cfg = SweepConfig.from_config(config)
    n = cfg.cell_mesh_n

    print_header(f"🧩 Cell problems: {cfg.spec.kind}, n = {n}")
    cells, tensor = homogenize_cell(cfg.spec, n, tol=cfg.newton.cg_tol)
    a0 = tensor.a0
    print(f"a0 = [[{a0[0, 0]:.10f}, {a0[0, 1]:.3e}],\n      [{a0[1, 0]:.3e}, {a0[1, 1]:.10f}]]")
    for i, report in enumerate(cells.reports, start=1):
        print_info(f"chi^{i}: {report.iterations} CG iterations, residual {report.final_residual:.3e}")

    lower, upper = voigt_reuss_bounds(cfg.spec)
    print(f"Voigt-Reuss bounds:       [{lower:.10f}, {upper:.10f}]")
    if cfg.spec.kind != "laminate":
        hs_lower, hs_upper = hashin_shtrikman_bounds(cfg.spec)
        print(f"Hashin-Shtrikman bounds:  [{hs_lower:.10f}, {hs_upper:.10f}]")

    violation = check_tensor_bounds(tensor, cfg.spec)
    if stats.record("a0 symmetric and within Voigt-Reuss", violation is None, violation or ""):
        print_success("a0 is symmetric and inside the Voigt-Reuss bounds")
    else:
        print_error(f"a0 check failed: {violation}")

    out = ctx.obj["out"]
    if out and out.endswith(".csv"):
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        path = out
    else:
        path = config.get_output_path("tensor.csv")
    write_tensor_csv(tensor, path)
    print_success(f"Tensor written to {path}")


@cli.command()
@click.option("--fine", "eps", default=None, help="Solve the fine-scale problem at this eps (e.g. 1/8).")
@click.option("--homogenized", is_flag=True, help="Solve the homogenized problem.")
@click.option("--vtk", is_flag=True, help="Also write solution.vtk.")
@command_with_checks
def solve(stats, eps, homogenized, vtk):
    """Solve one fine-scale or homogenized problem and write the nodal solution."""
    ctx = click.get_current_context()
    if (eps is None) == (not homogenized):
        raise click.UsageError("Give exactly one of --fine EPS or --homogenized")
    config = ctx.obj["config"]
    cfg = SweepConfig.from_config(config)

    if eps is not None:
        eps = _parse_eps(eps)
        mesh = build_unit_square_mesh(cfg.fine_n(eps))
        problem = SemilinearProblem.fine_scale(mesh, cfg.spec, eps, cfg.g, cfg.f)
        print_header(f"🔬 Fine-scale problem: eps = {eps:g}, n = {mesh.n}")
    else:
        _, tensor = homogenize_cell(cfg.spec, cfg.cell_mesh_n, tol=cfg.newton.cg_tol)
        mesh = build_unit_square_mesh(cfg.reference_n)
        problem = SemilinearProblem.homogenized(mesh, tensor.a0, cfg.g, cfg.f)
        print_header(f"🧮 Homogenized problem: n = {mesh.n}")

    u, report = solve_semilinear(problem, cfg.newton)
    method = "Picard" if report.used_picard else "Newton"
    print_info(
        f"{method}: {report.newton_iters} Newton / {report.picard_iters} Picard iterations, "
        f"{report.total_cg_iters} CG iterations, residual {report.final_residual:.3e}"
    )

    check = apriori_check(u, problem)
    if stats.record("a priori bound", check.ok, f"{check.lhs:.6e} > {check.rhs:.6e}"):
        print_success(f"A priori bound: {check.lhs:.6e} <= {check.rhs:.6e}")
    else:
        print_error(f"A priori bound violated: {check.lhs:.6e} > {check.rhs:.6e}")

    path = config.get_output_path("solution.csv")
    write_solution_csv(mesh, u, path)
    print_success(f"Solution written to {path}")
    if vtk or config.get("output.write_vtk"):
        vtk_path = config.get_output_path("solution.vtk")
        write_vtk(mesh, vtk_path, {"u": u})
        print_success(f"VTK written to {vtk_path}")


def _record_sweep_checks(stats, table):
    for row, check in zip(table.rows, table.apriori):
        ok = stats.record(
            f"a priori bound (eps={row.eps:g})", check.ok, f"{check.lhs:.6e} > {check.rhs:.6e}"
        )
        if not ok:
            print_error(f"A priori bound violated at eps = {row.eps:g}")
    if table.homogenized_apriori is not None:
        check = table.homogenized_apriori
        stats.record("a priori bound (homogenized)", check.ok, f"{check.lhs:.6e} > {check.rhs:.6e}")
    for row, (distance, bound) in zip(table.rows, table.consistency):
        stats.record(
            f"corrector consistency (eps={row.eps:g})",
            distance <= bound + 1e-12,
            f"{distance:.3e} > {bound:.3e}",
        )
    _record_pairing_checks(stats, table.gradient_pairing, label="gradient pairing")
    values = table.to_frame()[list(COLUMNS[2:5])].to_numpy()
    stats.record(
        "error columns finite and nonnegative",
        bool(np.all(np.isfinite(values)) and np.all(values >= 0.0)),
        "non-finite or negative error entry",
    )


@cli.command()
@command_with_checks
def sweep(stats):
    """Run the eps sweep and write errors.csv with a plot script."""
    config = click.get_current_context().obj["config"]
    cfg = SweepConfig.from_config(config)
    print_header(
        f"📉 Eps sweep: {cfg.spec.kind}, g = {cfg.g.kind}, eps = "
        + ", ".join(f"{eps:g}" for eps in cfg.sorted_eps)
    )
    table = run_epsilon_sweep(cfg)
    print(format_table(COLUMNS, [astuple(row) for row in table.rows]))

    l2 = [row.l2_error for row in table.rows]
    if any(b >= a for a, b in zip(l2, l2[1:])):
        print_warning("l2_error is not strictly decreasing as eps halves")
    _record_sweep_checks(stats, table)

    csv_path = config.get_output_path("errors.csv")
    write_outputs(table, csv_path)
    emit_plot_script(table, config.get_output_path("plot_errors.py"), csv_name="errors.csv")
    print_success(f"Error table written to {csv_path}")


def _record_pairing_checks(stats, rows, label="pairing"):
    for previous, current in zip(rows, rows[1:]):
        stats.record(
            f"{label} gap non-increasing (eps={current.eps:g})",
            current.gap <= previous.gap + PAIRING_FLOOR,
            f"{current.gap:.3e} > {previous.gap:.3e}",
        )


@cli.command()
@click.option("--phi", type=click.Choice(sorted(PHI)), default="one", help="Macroscopic factor.")
@command_with_checks
def pairing(stats, phi):
    """Two-scale pairing of phi(x) cos(2 pi x1 / eps) against its limit."""
    ctx = click.get_current_context()
    cfg = SweepConfig.from_config(ctx.obj["config"])
    print_header(f"〰️  Two-scale pairing, phi = {phi}")
    rows = two_scale_pairing_check(PHI[phi], cfg.eps_list)
    print(format_table(("eps", "lhs", "rhs", "gap"), rows))
    _record_pairing_checks(stats, rows)


@cli.command()
@command_with_checks
def verify(stats):
    """Run every internal invariant check on the configured problem."""
    ctx = click.get_current_context()
    cfg = SweepConfig.from_config(ctx.obj["config"])
    print_header("🔎 Verifying invariants")

    mesh = build_unit_square_mesh(cfg.cell_mesh_n)
    n = mesh.n
    stats.record(
        "periodic dof count", build_periodic_map(mesh).free_count == n * n, "free_count != n^2"
    )
    stats.record("boundary node count", boundary_mask(mesh).count == 4 * n, "count != 4n")
    stats.record("mesh areas sum to 1", abs(mesh.areas.sum() - 1.0) <= 1e-12, "area defect")

    stats.record("g monotone", check_monotone(cfg.g) >= 0.0, f"{cfg.g.kind} is not monotone")
    stats.record("g growth", check_growth(cfg.g) <= 1e-9, f"{cfg.g.kind} exceeds its envelope")

    cells, tensor = homogenize_cell(cfg.spec, cfg.cell_mesh_n, tol=cfg.newton.cg_tol)
    violation = check_tensor_bounds(tensor, cfg.spec)
    stats.record("a0 symmetric and within Voigt-Reuss", violation is None, violation or "")

    table = run_epsilon_sweep(cfg, cells=cells, tensor=tensor)
    _record_sweep_checks(stats, table)

    eps = cfg.sorted_eps[0]
    fine_mesh = build_unit_square_mesh(cfg.fine_n(eps))
    problem = SemilinearProblem.fine_scale(fine_mesh, cfg.spec, eps, cfg.g, cfg.f)
    distance = uniqueness_probe(problem, cfg.newton)
    stats.record(
        f"uniqueness (eps={eps:g})", distance <= UNIQUENESS_TOL, f"distance {distance:.3e}"
    )

    _record_pairing_checks(stats, two_scale_pairing_check(PHI["one"], cfg.eps_list))

    if stats.all_passed:
        print_success(f"All {stats.total} checks passed")
    else:
        print_error(f"{stats.failed} of {stats.total} checks failed")


def main():
    cli(prog_name="homogenize")


if __name__ == "__main__":
    main()
