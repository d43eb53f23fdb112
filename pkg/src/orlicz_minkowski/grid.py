"""Fixed discretizations of the unit sphere S^{n-1} (n = 2, 3).

A grid is a set of unit normals u_i with positive quadrature weights w_i
such that sums  sum_i g(u_i) w_i  approximate the surface integral of g.
Grids are immutable after construction; every downstream index (support
vectors, measures, facet areas) refers to a fixed grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.spatial import SphericalVoronoi

# H^{n-1}(S^{n-1}) = n * kappa_n
SPHERE_MEASURE = {2: 2.0 * np.pi, 3: 4.0 * np.pi}
# kappa_n = volume of the unit ball B^n
BALL_VOLUME = {1: 2.0, 2: np.pi, 3: 4.0 * np.pi / 3.0}

MIN_RESOLUTION = {2: 4, 3: 12}

_ANGLE_TOL = 1e-12


@dataclass(frozen=True)
class SphereGrid:
    """Unit normals with spherical quadrature weights.

    Attributes
    ----------
    dim : int
        Ambient dimension n (2 or 3).
    normals : ndarray, shape (N, dim)
        Unit outward directions u_i.
    weights : ndarray, shape (N,)
        Positive weights w_i with sum w_i = H^{n-1}(S^{n-1}).
    """

    dim: int
    normals: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.normals.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])


def build_grid(dim: int, resolution: int) -> SphereGrid:
    """Build a fixed sphere grid.

    For n = 2 the grid has ``resolution`` equally spaced angles with equal
    weights 2*pi/N.  For n = 3 the normals are the vertices of the smallest
    subdivided icosahedron with at least ``resolution`` vertices (N = 12, 42,
    162, 642, ...), projected to the sphere, and the weights are the
    spherical Voronoi cell areas, so positivity and sum w_i = 4*pi are exact.
    """
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    if resolution < MIN_RESOLUTION[dim]:
        raise ValueError(
            f"resolution {resolution} below minimum {MIN_RESOLUTION[dim]} for dim {dim}"
        )
    if dim == 2:
        angles = 2.0 * np.pi * np.arange(resolution) / resolution
        normals = np.column_stack([np.cos(angles), np.sin(angles)])
        weights = np.full(resolution, 2.0 * np.pi / resolution)
    else:
        points = _icosphere_vertices(resolution)
        voronoi = SphericalVoronoi(points, radius=1.0)
        weights = voronoi.calculate_areas()
        normals = points
    return SphereGrid(dim=dim, normals=normals, weights=weights)


def _icosphere_vertices(resolution: int) -> np.ndarray:
    """Vertices of a subdivided icosahedron, projected to the unit sphere.

    Subdivision level k gives 10*4^k + 2 vertices; the smallest level with
    at least ``resolution`` vertices is used.
    """
    level = 0
    while 10 * 4**level + 2 < resolution:
        level += 1

    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=float,
    )
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]

    verts = [tuple(v) for v in verts]
    for _ in range(level):
        index = {v: i for i, v in enumerate(verts)}
        midpoint_cache: dict[tuple[int, int], int] = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key in midpoint_cache:
                return midpoint_cache[key]
            m = np.asarray(verts[i]) + np.asarray(verts[j])
            m /= np.linalg.norm(m)
            verts.append(tuple(m))
            idx = len(verts) - 1
            midpoint_cache[key] = idx
            return idx

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
        del index

    points = np.asarray(verts, dtype=float)
    points /= np.linalg.norm(points, axis=1, keepdims=True)
    return points


def cap_indices(grid: SphereGrid, v: np.ndarray, alpha: float) -> np.ndarray:
    """Indices of grid normals in the spherical cap around v of angle alpha.

    Returns exactly the i with <u_i, v> >= cos(alpha); the comparison carries
    a 1e-12 slack so that boundary directions are included despite rounding.
    """
    if not 0.0 <= alpha <= np.pi:
        raise ValueError(f"alpha must lie in [0, pi], got {alpha}")
    v = np.asarray(v, dtype=float)
    return np.nonzero(grid.normals @ v >= np.cos(alpha) - _ANGLE_TOL)[0]


def grid_checks(grid: SphereGrid, n_random: int = 512, seed: int = 0) -> dict:
    """Diagnostic report of the grid invariants (used by tests).

    Checks total measure, odd-moment cancellation, positive spanning with
    constant 0.1 on sampled directions, and minimum pairwise angle.
    """
    n = grid.dim
    total = float(grid.weights.sum())
    first_moment = float(np.linalg.norm(grid.normals.T @ grid.weights))
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(n_random, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs = np.vstack([dirs, grid.normals, -grid.normals])
    span_margin = float((dirs @ grid.normals.T).max(axis=1).min())
    dots = np.clip(grid.normals @ grid.normals.T, -1.0, 1.0)
    np.fill_diagonal(dots, -1.0)
    min_angle = float(np.arccos(dots.max()))
    return {
        "total_weight": total,
        "total_weight_error": abs(total - SPHERE_MEASURE[n]),
        "first_moment": first_moment,
        "span_margin": span_margin,
        "min_pairwise_angle": min_angle,
    }


def write_grid_csv(grid: SphereGrid, path) -> None:
    """Export rows ``i,u_x,u_y[,u_z],w``."""
    header = ["i", "u_x", "u_y"] + (["u_z"] if grid.dim == 3 else []) + ["w"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(grid.size):
            writer.writerow(
                [i, *(repr(c) for c in grid.normals[i]), repr(float(grid.weights[i]))]
            )
