"""Uniform triangulations of the unit square and their boundary index maps.

The same mesh type discretizes the periodic cell Y and the domain Omega.
Nodes are numbered row-major, ``index = j * (n + 1) + i`` for the node at
``(i * h, j * h)``, and every grid square is split along its lower-left to
upper-right diagonal.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Optional

import meshio
import numpy as np

from .exceptions import ConfigurationError, OutputError

logger = logging.getLogger(__name__)


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class StructuredMesh:
    """Uniform triangulation of [0, 1]^2 with n cells per side."""

    n: int
    node_coords: np.ndarray  # (n+1)^2 x 2
    triangles: np.ndarray  # 2n^2 x 3, counterclockwise

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def num_nodes(self) -> int:
        return self.node_coords.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.node_coords[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return _frozen(0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]))

    @property
    def areas(self) -> np.ndarray:
        return self.signed_areas

    @cached_property
    def centroids(self) -> np.ndarray:
        return _frozen(self.node_coords[self.triangles].mean(axis=1))

    @cached_property
    def basis_gradients(self) -> np.ndarray:
        """Constant gradients of the three P1 basis functions per triangle, shape (T, 3, 2)."""
        p = self.node_coords[self.triangles]
        x, y = p[..., 0], p[..., 1]
        twice_area = (2.0 * self.signed_areas)[:, None]
        gx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
        gy = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
        return _frozen(np.stack([gx / twice_area, gy / twice_area], axis=2))


@dataclass(frozen=True, eq=False)
class PeriodicMap:
    """Identification of opposite faces of the unit cell.

    ``representative`` maps each node to the node of its class lying on the
    left/bottom faces; ``dof_index`` numbers the classes 0..free_count-1.
    """

    representative: np.ndarray
    dof_index: np.ndarray
    free_count: int


@dataclass(frozen=True, eq=False)
class BoundaryMask:
    """Per-node flags for nodes on the boundary of the unit square."""

    is_boundary: np.ndarray

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.is_boundary))

    @cached_property
    def free_nodes(self) -> np.ndarray:
        return _frozen(np.flatnonzero(~self.is_boundary))


def build_unit_square_mesh(n: int) -> StructuredMesh:
    """Build the uniform triangulation of the unit square with n cells per side.

    Raises:
        ConfigurationError: If n is not a positive integer
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise ConfigurationError("n", f"Mesh needs n >= 1 cells per side, got {n!r}")
    n = int(n)

    ticks = np.arange(n + 1) / n
    xs, ys = np.meshgrid(ticks, ticks)
    coords = np.column_stack([xs.ravel(), ys.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    v00 = (j * (n + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    logger.debug(
        f"Built unit square mesh n={n}: {coords.shape[0]} nodes, {triangles.shape[0]} triangles"
    )
    return StructuredMesh(n=n, node_coords=_frozen(coords), triangles=_frozen(triangles))


def build_periodic_map(mesh: StructuredMesh) -> PeriodicMap:
    """Identify the right face with the left face and the top face with the bottom face."""
    n = mesh.n
    idx = np.arange(mesh.num_nodes)
    i = idx % (n + 1)
    j = idx // (n + 1)
    i_rep = i % n
    j_rep = j % n
    representative = j_rep * (n + 1) + i_rep
    dof_index = j_rep * n + i_rep
    return PeriodicMap(
        representative=_frozen(representative),
        dof_index=_frozen(dof_index),
        free_count=n * n,
    )


def boundary_mask(mesh: StructuredMesh) -> BoundaryMask:
    """Flag the nodes having a coordinate equal to 0 or 1."""
    n = mesh.n
    idx = np.arange(mesh.num_nodes)
    i = idx % (n + 1)
    j = idx // (n + 1)
    flags = (i == 0) | (i == n) | (j == 0) | (j == n)
    return BoundaryMask(is_boundary=_frozen(flags))


def locate_elements(mesh: StructuredMesh, points: np.ndarray):
    """
    Find the triangle containing each point and its local square coordinates.

    Args:
        mesh: Structured mesh
        points: Array of shape (P, 2) inside [0, 1]^2

    Returns:
        Tuple (triangle index, s, t) with (s, t) in [0, 1]^2 the position
        inside the grid square
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = mesh.n
    scaled = points * n
    cell = np.clip(np.floor(scaled).astype(np.int64), 0, n - 1)
    s = scaled[:, 0] - cell[:, 0]
    t = scaled[:, 1] - cell[:, 1]
    square = cell[:, 1] * n + cell[:, 0]
    upper = t > s
    return 2 * square + upper, s, t


def interpolate(mesh: StructuredMesh, values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate the P1 field with nodal ``values`` at arbitrary points of [0, 1]^2."""
    values = np.asarray(values, dtype=float)
    tri, s, t = locate_elements(mesh, points)
    # Both triangles of a square start at its lower-left node v00 and share v11.
    verts = mesh.triangles[tri]
    u00 = values[verts[:, 0]]
    lower = tri % 2 == 0
    u11 = values[np.where(lower, verts[:, 2], verts[:, 1])]
    out = np.empty(len(tri))
    # lower: (v00, v10, v11); upper: (v00, v11, v01)
    u10 = values[verts[lower, 1]]
    out[lower] = u00[lower] + s[lower] * (u10 - u00[lower]) + t[lower] * (u11[lower] - u10)
    up = ~lower
    u01 = values[verts[up, 2]]
    out[up] = u00[up] + t[up] * (u01 - u00[up]) + s[up] * (u11[up] - u01)
    return out


def write_vtk(
    mesh: StructuredMesh,
    path: str,
    point_data: Optional[Dict[str, np.ndarray]] = None,
) -> None:
    """
    Dump the mesh (and optional nodal fields) as legacy ASCII VTK.

    Raises:
        OutputError: If the file cannot be written
    """
    points = np.column_stack([mesh.node_coords, np.zeros(mesh.num_nodes)])
    data = {name: np.asarray(values, dtype=float) for name, values in (point_data or {}).items()}
    try:
        meshio.write_points_cells(
            path,
            points,
            [("triangle", np.asarray(mesh.triangles))],
            point_data=data,
            file_format="vtk",
            binary=False,
        )
    except OSError as e:
        logger.error(f"Cannot write VTK file {path}: {e}")
        raise OutputError(path)
    logger.info(f"Mesh written to {path}")
