"""Periodic coefficients, their epsilon-dilation and the registry of monotone nonlinearities."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, NamedTuple, Optional

import numpy as np

from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)

GEOMETRIES = ("constant", "circular_inclusion", "laminate", "checkerboard")

CELL_CENTER = np.array([0.5, 0.5])


@dataclass(frozen=True)
class MicrostructureSpec:
    """Two-phase isotropic periodic coefficient on the unit cell.

    ``a_matrix`` fills Y_f, ``a_inclusion`` fills Y_s. The inclusion is the
    disc of ``radius`` around the cell center, the half y1 >= 0.5 for the
    laminate, and the squares where exactly one of y1, y2 is >= 0.5 for the
    checkerboard. The constant kind uses ``a_matrix`` everywhere.
    """

    kind: str = "circular_inclusion"
    a_matrix: float = 1.0
    a_inclusion: float = 10.0
    radius: float = 0.25

    def __post_init__(self):
        if self.kind not in GEOMETRIES:
            raise ConfigurationError(
                "microstructure.kind",
                f"Unknown microstructure '{self.kind}'. Supported: {', '.join(GEOMETRIES)}",
            )
        for key in ("a_matrix", "a_inclusion"):
            value = getattr(self, key)
            if not math.isfinite(value) or value <= 0.0:
                raise ConfigurationError(
                    f"microstructure.{key}", f"{key} must be finite and > 0, got {value}"
                )
        if self.kind == "circular_inclusion" and not 0.0 < self.radius < 0.5:
            raise ConfigurationError(
                "microstructure.radius",
                f"Inclusion radius must lie in (0, 0.5), got {self.radius}",
            )

    @classmethod
    def from_config(cls, config) -> "MicrostructureSpec":
        return cls(
            kind=config.get("microstructure.kind"),
            a_matrix=config.get("microstructure.a_matrix"),
            a_inclusion=config.get("microstructure.a_inclusion"),
            radius=config.get("microstructure.radius"),
        )

    @property
    def phase_values(self):
        if self.kind == "constant":
            return (self.a_matrix, self.a_matrix)
        return (self.a_matrix, self.a_inclusion)

    @property
    def lam(self) -> float:
        """Ellipticity constant (smallest phase value)."""
        return min(self.phase_values)

    @property
    def Lam(self) -> float:
        """Boundedness constant (largest phase value)."""
        return max(self.phase_values)


def in_inclusion(spec: MicrostructureSpec, y: np.ndarray) -> np.ndarray:
    """Membership of cell points in Y_s (closed set); y has shape (..., 2)."""
    y = np.asarray(y, dtype=float)
    y1, y2 = y[..., 0], y[..., 1]
    if spec.kind == "constant":
        return np.zeros(y1.shape, dtype=bool)
    if spec.kind == "circular_inclusion":
        return np.hypot(y1 - CELL_CENTER[0], y2 - CELL_CENTER[1]) <= spec.radius
    if spec.kind == "laminate":
        return y1 >= 0.5
    return (y1 >= 0.5) != (y2 >= 0.5)


def sample_cell_coefficient(spec: MicrostructureSpec, y: np.ndarray) -> np.ndarray:
    """a(y) for points y in [0, 1]^2, shape (..., 2) -> (..., 2, 2)."""
    y = np.asarray(y, dtype=float)
    values = np.where(in_inclusion(spec, y), spec.phase_values[1], spec.phase_values[0])
    return values[..., None, None] * np.eye(2)


def cell_fraction(x: np.ndarray, eps: float) -> np.ndarray:
    """Component-wise fractional part of x / eps."""
    scaled = np.asarray(x, dtype=float) / eps
    return scaled - np.floor(scaled)


def sample_epsilon_coefficient(spec: MicrostructureSpec, eps: float, x: np.ndarray) -> np.ndarray:
    """a^eps(x) = a(x / eps)."""
    if not eps > 0.0:
        raise ConfigurationError("eps", f"eps must be > 0, got {eps}")
    return sample_cell_coefficient(spec, cell_fraction(x, eps))


def cell_coefficient(spec: MicrostructureSpec) -> Callable[[np.ndarray], np.ndarray]:
    """Coefficient provider y -> a(y)."""
    return lambda points: sample_cell_coefficient(spec, points)


def epsilon_coefficient(spec: MicrostructureSpec, eps: float) -> Callable[[np.ndarray], np.ndarray]:
    """Coefficient provider x -> a^eps(x)."""
    if not eps > 0.0:
        raise ConfigurationError("eps", f"eps must be > 0, got {eps}")
    return lambda points: sample_epsilon_coefficient(spec, eps, points)


def constant_coefficient(matrix: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """Coefficient provider returning the same 2x2 matrix everywhere."""
    matrix = np.array(matrix, dtype=float)
    return lambda points: np.broadcast_to(matrix, (np.asarray(points).shape[0], 2, 2))


class _Nonlinearity(NamedTuple):
    g: Callable[[np.ndarray, float], np.ndarray]
    g_prime: Optional[Callable[[np.ndarray, float], np.ndarray]]
    growth: Callable[[float], tuple]  # c -> (C_g, q, h0)


NONLINEARITIES: Dict[str, _Nonlinearity] = {
    "zero": _Nonlinearity(
        g=lambda u, c: np.zeros_like(u),
        g_prime=lambda u, c: np.zeros_like(u),
        growth=lambda c: (0.0, 2.0, 0.0),
    ),
    "linear": _Nonlinearity(
        g=lambda u, c: c * u,
        g_prime=lambda u, c: np.full_like(u, c),
        growth=lambda c: (c, 2.0, 0.0),
    ),
    "cubic": _Nonlinearity(
        g=lambda u, c: u**3,
        g_prime=lambda u, c: 3.0 * u**2,
        growth=lambda c: (1.0, 4.0, 0.0),
    ),
    "saturating": _Nonlinearity(
        g=lambda u, c: u / (1.0 + np.abs(u)),
        g_prime=lambda u, c: 1.0 / (1.0 + np.abs(u)) ** 2,
        growth=lambda c: (1.0, 2.0, 1.0),
    ),
    # Monotone but not differentiable at 0; solved by Picard iteration.
    "ramp": _Nonlinearity(
        g=lambda u, c: np.maximum(u, 0.0),
        g_prime=None,
        growth=lambda c: (1.0, 2.0, 0.0),
    ),
}

# With d = 2 the critical Sobolev exponent is free; it is fixed to 4 here.
CRITICAL_EXPONENT = 4.0


@dataclass(frozen=True)
class NonlinearitySpec:
    """A registered non-decreasing g with its growth constants |g(u)| <= C_g (|u|^(q-1) + h0)."""

    kind: str = "cubic"
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in NONLINEARITIES:
            raise ConfigurationError(
                "nonlinearity.kind",
                f"Unknown nonlinearity '{self.kind}'. Supported: {', '.join(NONLINEARITIES)}",
            )
        if self.kind == "linear" and not (math.isfinite(self.c) and self.c >= 0.0):
            raise ConfigurationError(
                "nonlinearity.c", f"linear slope must be >= 0 for monotonicity, got {self.c}"
            )

    @classmethod
    def from_config(cls, config) -> "NonlinearitySpec":
        return cls(kind=config.get("nonlinearity.kind"), c=config.get("nonlinearity.c"))

    @property
    def differentiable(self) -> bool:
        return NONLINEARITIES[self.kind].g_prime is not None

    @property
    def C_g(self) -> float:
        return NONLINEARITIES[self.kind].growth(self.c)[0]

    @property
    def q(self) -> float:
        return NONLINEARITIES[self.kind].growth(self.c)[1]

    @property
    def h0(self) -> float:
        return NONLINEARITIES[self.kind].growth(self.c)[2]

    def g(self, u):
        return eval_g(self, u)

    def g_prime(self, u):
        return eval_g_prime(self, u)


def eval_g(spec: NonlinearitySpec, u):
    """g(u), elementwise for arrays."""
    value = NONLINEARITIES[spec.kind].g(np.asarray(u, dtype=float), spec.c)
    return float(value) if np.ndim(value) == 0 else value


def eval_g_prime(spec: NonlinearitySpec, u):
    """g'(u), or None when the registered g has no derivative."""
    g_prime = NONLINEARITIES[spec.kind].g_prime
    if g_prime is None:
        return None
    value = g_prime(np.asarray(u, dtype=float), spec.c)
    return float(value) if np.ndim(value) == 0 else value


def check_monotone(spec: NonlinearitySpec, samples: int = 10_000, seed: int = 0) -> float:
    """Smallest (g(u) - g(v))(u - v) over random pairs in [-10, 10]^2; >= 0 for monotone g."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(-10.0, 10.0, samples)
    v = rng.uniform(-10.0, 10.0, samples)
    products = (eval_g(spec, u) - eval_g(spec, v)) * (u - v)
    return float(products.min())


def check_growth(spec: NonlinearitySpec, samples: int = 2001) -> float:
    """Largest |g(u)| - C_g (|u|^(q-1) + h0) over u in [-10, 10]; <= 0 when the envelope holds."""
    u = np.linspace(-10.0, 10.0, samples)
    envelope = spec.C_g * (np.abs(u) ** (spec.q - 1.0) + spec.h0)
    return float((np.abs(eval_g(spec, u)) - envelope).max())
