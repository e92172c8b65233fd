"""Custom exceptions and error handling for homogenize."""

import logging
from typing import Optional


class HomogenizeError(Exception):
    """Base exception for homogenize errors."""

    pass


class ConfigurationError(HomogenizeError):
    """Exception raised when a configuration value or model parameter is invalid."""

    def __init__(self, key: str, message: str = None):
        self.key = key
        self.message = message or f"Invalid configuration value for '{key}'"
        super().__init__(self.message)


class EvaluationError(HomogenizeError):
    """Exception raised when a point-evaluable function returns non-finite values."""

    def __init__(self, name: str, count: int, message: str = None):
        self.name = name
        self.count = count
        self.message = (
            message or f"Function '{name}' returned {count} non-finite value(s)"
        )
        super().__init__(self.message)


class PreconditionerError(HomogenizeError):
    """Exception raised when the Jacobi preconditioner meets a zero diagonal."""

    def __init__(self, index: int, message: str = None):
        self.index = index
        self.message = (
            message or f"Jacobi preconditioner failed: zero diagonal at row {index}"
        )
        super().__init__(self.message)


class ConvergenceError(HomogenizeError):
    """Exception raised when an iterative solver does not converge."""

    def __init__(
        self,
        solver: str,
        iterations: int,
        residual: Optional[float] = None,
        message: str = None,
    ):
        self.solver = solver
        self.iterations = iterations
        self.residual = residual
        self.message = message or f"{solver} did not converge in {iterations} iterations"
        if residual is not None:
            self.message += f" (residual: {residual:.3e})"
        super().__init__(self.message)


class NewtonStagnationError(ConvergenceError):
    """Exception raised when the Armijo line search cannot reduce the residual."""

    def __init__(self, iterations: int, residual: float, step: float):
        self.step = step
        super().__init__(
            "Newton",
            iterations,
            residual,
            message=(
                f"Newton stagnated after {iterations} iterations: step {step:.3e} "
                f"below minimum (residual: {residual:.3e})"
            ),
        )


class SweepError(HomogenizeError):
    """Exception raised when a sub-solve fails inside an epsilon sweep."""

    def __init__(self, eps: float, cause: Exception):
        self.eps = eps
        self.cause = cause
        self.message = f"Sweep aborted at eps = {eps:g}: {cause}"
        super().__init__(self.message)


class OutputError(HomogenizeError):
    """Exception raised when an output file cannot be written."""

    def __init__(self, path: str, message: str = None):
        self.path = path
        self.message = message or f"Cannot write output file: {path}"
        super().__init__(self.message)


def setup_logging(
    log_file: str = "homogenize.log", level: int = logging.INFO, verbose: bool = False
) -> logging.Logger:
    """
    Setup logging configuration.

    Args:
        log_file: Path to log file
        level: Logging level
        verbose: If True, also log to console

    Returns:
        Configured package logger
    """
    logger = logging.getLogger("homogenize")
    logger.setLevel(logging.DEBUG if verbose else level)

    # Remove existing handlers
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    file_handler = logging.FileHandler(log_file, encoding="utf-8")
    file_handler.setLevel(level)
    file_formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )
    file_handler.setFormatter(file_formatter)
    logger.addHandler(file_handler)

    if verbose:
        console_handler = logging.StreamHandler()
        console_handler.setLevel(logging.DEBUG)
        console_formatter = logging.Formatter("%(levelname)s: %(message)s")
        console_handler.setFormatter(console_formatter)
        logger.addHandler(console_handler)

    return logger


def get_error_suggestion(error: Exception) -> str:
    """
    Get user-friendly error message and suggestions.

    Args:
        error: Exception instance

    Returns:
        User-friendly error message with suggestions
    """
    if isinstance(error, ConfigurationError):
        return (
            f"❌ {error.message}\n"
            f"   Suggestions:\n"
            f"   • Check the [section] and key names in your config file\n"
            f"   • Run 'homogenize verify' with the default configuration first\n"
        )
    elif isinstance(error, NewtonStagnationError):
        return (
            f"❌ {error.message}\n"
            f"   Suggestions:\n"
            f"   • Enable 'picard_fallback = true' in the [solver] section\n"
            f"   • Check that the nonlinearity is non-decreasing\n"
        )
    elif isinstance(error, ConvergenceError):
        return (
            f"❌ {error.message}\n"
            f"   Suggestions:\n"
            f"   • Loosen 'cg_tol' or 'residual_tol' in the [solver] section\n"
            f"   • Reduce the coefficient contrast or the mesh size\n"
        )
    elif isinstance(error, SweepError):
        return (
            f"❌ {error.message}\n"
            f"   Suggestion: rerun 'homogenize solve --fine {error.eps:g}' to inspect "
            f"that row alone.\n"
        )
    elif isinstance(error, EvaluationError):
        return f"❌ {error.message}\n" f"   Check the [load] section of your config.\n"
    elif isinstance(error, PreconditionerError):
        return (
            f"❌ {error.message}\n"
            f"   The assembled matrix has an empty row; check the mesh and coefficients.\n"
        )
    elif isinstance(error, OutputError):
        return f"❌ {error.message}\n" f"   Check that --out points to a writable place.\n"
    else:
        return (
            f"❌ An unexpected error occurred: {str(error)}\n"
            f"   Please check homogenize.log for more details.\n"
        )
