"""Wulff-body realization of a support vector and its measurements.

Given positive support numbers h_i over the grid normals, the body is the
halfspace intersection  [h] = {x : <x, u_i> <= h_i}.  Construction goes
through duality: with the origin interior, the polar body is the convex
hull of the points u_i / h_i, and the primal vertices are the poles of the
dual hull facets.  One hull primitive therefore serves both n = 2 and
n = 3, and the hull combinatorics give the per-normal facets without any
tolerance decisions on the primal side.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .grid import SphereGrid

# facets below this absolute (n-1)-area are treated as inactive
DEGENERATE_AREA = 1e-14

_INTERIOR_TOL = 1e-12


@dataclass(frozen=True)
class Body:
    """Polytope realization of a support vector.

    Attributes
    ----------
    grid : SphereGrid
        The normal grid the body refers to.
    h : ndarray, shape (N,)
        Input support numbers (h_i may exceed the true support value when
        the constraint i is redundant).
    support : ndarray, shape (N,)
        True support values of the body at the grid normals.
    vertices : ndarray, shape (V, n)
    facets : list of ndarray
        Per-normal vertex index lists, ordered along the facet boundary;
        empty for inactive normals.
    areas : ndarray, shape (N,)
        Facet (n-1)-areas S_i; exactly 0 for inactive normals.
    volume : float
    centroid : ndarray, shape (n,)
    """

    grid: SphereGrid
    h: np.ndarray
    support: np.ndarray
    vertices: np.ndarray
    facets: list
    areas: np.ndarray
    volume: float
    centroid: np.ndarray

    def __post_init__(self):
        for arr in (self.h, self.support, self.vertices, self.areas, self.centroid):
            arr.setflags(write=False)


def wulff_body(h: np.ndarray, grid: SphereGrid) -> Body:
    """Intersect the halfspaces {<x, u_i> <= h_i} and measure the result.

    Requires h_i > 0 (origin interior).  Raises ValueError when the
    intersection is unbounded, which can only happen if the grid normals do
    not positively span.
    """
    h = np.asarray(h, dtype=float)
    if h.shape != (grid.size,):
        raise ValueError(f"support vector has shape {h.shape}, expected ({grid.size},)")
    if not np.all(h > 0.0):
        raise ValueError("support vector must be strictly positive (origin interior)")

    dual = grid.normals / h[:, None]
    try:
        hull = ConvexHull(dual)
    except QhullError as exc:
        raise ValueError(f"unbounded or degenerate body: {exc}") from exc

    # o must be strictly interior to the dual hull, otherwise [h] is unbounded
    offsets = hull.equations[:, -1]
    if np.any(offsets >= -1e-12):
        raise ValueError("unbounded body: grid normals do not positively span")

    if grid.dim == 2:
        vertices, facets, areas = _polygon_from_dual(h, grid, hull)
    else:
        vertices, facets, areas = _polytope_from_dual(h, grid, hull)

    areas[areas < DEGENERATE_AREA] = 0.0
    for i in range(grid.size):
        if areas[i] == 0.0:
            facets[i] = np.empty(0, dtype=int)

    support = (vertices @ grid.normals.T).max(axis=0)
    volume = float(np.dot(h[areas > 0], areas[areas > 0]) / grid.dim)
    centroid = _centroid(vertices, facets, areas, grid)
    return Body(
        grid=grid,
        h=h.copy(),
        support=support,
        vertices=vertices,
        facets=facets,
        areas=areas,
        volume=volume,
        centroid=centroid,
    )


def _polygon_from_dual(h, grid, hull):
    order = hull.vertices  # counterclockwise dual hull vertices
    m = len(order)
    U = grid.normals
    verts = np.empty((m, 2))
    for j in range(m):
        a, b = order[j], order[(j + 1) % m]
        A = np.array([U[a], U[b]])
        verts[j] = np.linalg.solve(A, np.array([h[a], h[b]]))
    facets = [np.empty(0, dtype=int) for _ in range(grid.size)]
    areas = np.zeros(grid.size)
    for j in range(m):
        i = order[j]
        prev_vertex = (j - 1) % m
        facets[i] = np.array([prev_vertex, j])
        areas[i] = float(np.linalg.norm(verts[j] - verts[prev_vertex]))
    return verts, facets, areas


def _polytope_from_dual(h, grid, hull):
    # pole of each dual facet plane <y, w> = c is the primal vertex w / c
    eqs = hull.equations
    poles = eqs[:, :3] / (-eqs[:, 3:])

    scale = np.abs(poles).max() + 1.0
    vert_ids, unique = _merge_points(poles, tol=1e-9 * scale)

    facets = [np.empty(0, dtype=int) for _ in range(grid.size)]
    areas = np.zeros(grid.size)
    incident: dict[int, list[int]] = {}
    for s, tri in enumerate(hull.simplices):
        for i in tri:
            incident.setdefault(int(i), []).append(vert_ids[s])

    for i, vid_list in incident.items():
        vids = np.unique(np.array(vid_list, dtype=int))
        if len(vids) < 3:
            continue
        u = grid.normals[i]
        pts = unique[vids]
        center = pts.mean(axis=0)
        e1 = _orthonormal_to(u)
        e2 = np.cross(u, e1)
        rel = pts - center
        ang = np.arctan2(rel @ e2, rel @ e1)
        ring = vids[np.argsort(ang)]
        p = unique[ring]
        cross_sum = np.cross(p, np.roll(p, -1, axis=0)).sum(axis=0)
        area = 0.5 * float(cross_sum @ u)
        facets[i] = ring
        areas[i] = max(area, 0.0)
    return unique, facets, areas


def _merge_points(points, tol):
    """Cluster nearly identical points; returns (ids per input row, unique array)."""
    order = np.lexsort(points.T[::-1])
    ids = np.empty(len(points), dtype=int)
    reps: list[np.ndarray] = []
    for idx in order:
        p = points[idx]
        assigned = False
        for k in range(len(reps) - 1, -1, -1):
            if np.abs(reps[k] - p).max() <= tol:
                ids[idx] = k
                assigned = True
                break
            # lexsorted stream: stop scanning once first coordinate is far
            if reps[k][0] < p[0] - tol:
                break
        if not assigned:
            reps.append(p)
            ids[idx] = len(reps) - 1
    return ids, np.asarray(reps)


def _orthonormal_to(u):
    k = int(np.argmin(np.abs(u)))
    e = np.zeros(3)
    e[k] = 1.0
    v = np.cross(u, e)
    return v / np.linalg.norm(v)


def _centroid(vertices, facets, areas, grid):
    if grid.dim == 2:
        ring = vertices
        x, y = ring[:, 0], ring[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        area = 0.5 * cross.sum()
        cx = ((x + xn) * cross).sum() / (6.0 * area)
        cy = ((y + yn) * cross).sum() / (6.0 * area)
        return np.array([cx, cy])
    # fan tetrahedra (o, q0, qj, qj+1) over every facet polygon
    vol_total = 0.0
    moment = np.zeros(3)
    for i in range(grid.size):
        ring = facets[i]
        if len(ring) < 3:
            continue
        q0 = vertices[ring[0]]
        for j in range(1, len(ring) - 1):
            qa, qb = vertices[ring[j]], vertices[ring[j + 1]]
            vol6 = float(q0 @ np.cross(qa, qb))
            vol_total += vol6
            moment += vol6 * (q0 + qa + qb)
    vol_total /= 6.0
    moment /= 24.0
    return moment / vol_total


def volume(body: Body) -> float:
    """Lebesgue volume via the cone decomposition V = (1/n) sum h_i S_i."""
    return body.volume


def surface_area_measure(body: Body) -> np.ndarray:
    """Per-normal facet areas S_i (zero at inactive normals)."""
    return body.areas


def centroid(body: Body) -> np.ndarray:
    return body.centroid


def support_eval(body: Body, v: np.ndarray) -> float:
    """True support value max_x <x, v> over the body."""
    return float((body.vertices @ np.asarray(v, dtype=float)).max())


def radii(body: Body, center: np.ndarray) -> tuple[float, float]:
    """(r, R): min distance from center to an active facet plane, max vertex distance.

    Raises ValueError if the center is not interior.
    """
    center = np.asarray(center, dtype=float)
    active = body.areas > 0
    margins = body.h[active] - body.grid.normals[active] @ center
    r = float(margins.min())
    if r <= 0.0:
        raise ValueError("center lies on or outside the body")
    R = float(np.linalg.norm(body.vertices - center, axis=1).max())
    return r, R


def recenter(h: np.ndarray, grid: SphereGrid, v: np.ndarray) -> np.ndarray:
    """Support numbers of the translated body [h] - v, i.e. h_i - <u_i, v>."""
    v = np.asarray(v, dtype=float)
    shifted = np.asarray(h, dtype=float) - grid.normals @ v
    if np.any(shifted <= 0.0):
        raise ValueError("translation point is not interior to the body")
    return shifted


def scale_body(body: Body, alpha: float) -> Body:
    """Exact image of the body under x -> alpha x (alpha > 0)."""
    n = body.grid.dim
    return Body(
        grid=body.grid,
        h=body.h * alpha,
        support=body.support * alpha,
        vertices=body.vertices * alpha,
        facets=body.facets,
        areas=body.areas * alpha ** (n - 1),
        volume=body.volume * alpha**n,
        centroid=body.centroid * alpha,
    )


def boundary_loop(body: Body) -> np.ndarray:
    """Vertices of an n=2 body in counterclockwise boundary order."""
    if body.grid.dim != 2:
        raise ValueError("boundary_loop is only defined for n = 2")
    return body.vertices


def write_polygon_csv(body: Body, path) -> None:
    """n=2 mesh export: closed polygon rows ``x,y``."""
    ring = boundary_loop(body)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y"])
        for p in ring:
            writer.writerow([repr(p[0]), repr(p[1])])
        writer.writerow([repr(ring[0][0]), repr(ring[0][1])])


def write_off(body: Body, path) -> None:
    """n=3 mesh export in OFF format (vertices + facet polygons)."""
    if body.grid.dim != 3:
        raise ValueError("OFF export is only defined for n = 3")
    polys = [f for f in body.facets if len(f) >= 3]
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{len(body.vertices)} {len(polys)} 0\n")
        for v in body.vertices:
            fh.write(f"{v[0]!r} {v[1]!r} {v[2]!r}\n")
        for f in polys:
            fh.write(" ".join([str(len(f))] + [str(int(j)) for j in f]) + "\n")
