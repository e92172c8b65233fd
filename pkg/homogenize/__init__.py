from .mesh import (
    BoundaryMask,
    PeriodicMap,
    StructuredMesh,
    boundary_mask,
    build_periodic_map,
    build_unit_square_mesh,
    interpolate,
    locate_elements,
    write_vtk,
)
from .fem_core import (
    CgReport,
    assemble_load,
    assemble_mass_lumped,
    assemble_stiffness,
    cg_solve,
    h1_seminorm,
    l2_norm,
)
from .microstructure import (
    MicrostructureSpec,
    NonlinearitySpec,
    check_growth,
    check_monotone,
    eval_g,
    eval_g_prime,
    sample_cell_coefficient,
    sample_epsilon_coefficient,
)
from .cell_homog import (
    CellSolutions,
    EffectiveTensor,
    compute_effective_tensor,
    hashin_shtrikman_bounds,
    homogenize_cell,
    richardson_extrapolate,
    solve_cell_problems,
    voigt_reuss_bounds,
)
from .semilinear import (
    NewtonConfig,
    SemilinearProblem,
    SolveReport,
    apriori_check,
    build_load,
    load_from_config,
    solve_semilinear,
    uniqueness_probe,
)
from .multiscale_exp import (
    CorrectorField,
    ErrorTable,
    SweepConfig,
    assemble_corrector,
    corrector_energy_error,
    emit_plot_script,
    read_error_table,
    run_epsilon_sweep,
    two_scale_pairing_check,
    write_outputs,
)
from .config import Config, get_config, set_config
from .exceptions import (
    HomogenizeError,
    ConfigurationError,
    EvaluationError,
    PreconditionerError,
    ConvergenceError,
    NewtonStagnationError,
    SweepError,
    OutputError,
)

__all__ = [
    "BoundaryMask",
    "PeriodicMap",
    "StructuredMesh",
    "boundary_mask",
    "build_periodic_map",
    "build_unit_square_mesh",
    "interpolate",
    "locate_elements",
    "write_vtk",
    "CgReport",
    "assemble_load",
    "assemble_mass_lumped",
    "assemble_stiffness",
    "cg_solve",
    "h1_seminorm",
    "l2_norm",
    "MicrostructureSpec",
    "NonlinearitySpec",
    "check_growth",
    "check_monotone",
    "eval_g",
    "eval_g_prime",
    "sample_cell_coefficient",
    "sample_epsilon_coefficient",
    "CellSolutions",
    "EffectiveTensor",
    "compute_effective_tensor",
    "hashin_shtrikman_bounds",
    "homogenize_cell",
    "richardson_extrapolate",
    "solve_cell_problems",
    "voigt_reuss_bounds",
    "NewtonConfig",
    "SemilinearProblem",
    "SolveReport",
    "apriori_check",
    "build_load",
    "load_from_config",
    "solve_semilinear",
    "uniqueness_probe",
    "CorrectorField",
    "ErrorTable",
    "SweepConfig",
    "assemble_corrector",
    "corrector_energy_error",
    "emit_plot_script",
    "read_error_table",
    "run_epsilon_sweep",
    "two_scale_pairing_check",
    "write_outputs",
    "Config",
    "get_config",
    "set_config",
    "HomogenizeError",
    "ConfigurationError",
    "EvaluationError",
    "PreconditionerError",
    "ConvergenceError",
    "NewtonStagnationError",
    "SweepError",
    "OutputError",
]

__version__ = "0.1.0"
