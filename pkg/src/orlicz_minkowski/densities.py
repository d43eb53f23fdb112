"""Built-in density families sampled at grid normals.

Families cover the test regimes: constant, low-order angular harmonics
(n = 2), clamped powers of <u, e1> (essentially positive with a zero set),
per-normal tables, restricted numpy expressions, and seeded positive noise.
"""

from __future__ import annotations

import numpy as np

from .grid import SphereGrid


def sample_density(grid: SphereGrid, kind: str, params: dict | None = None,
                   seed: int = 0) -> np.ndarray:
    """Evaluate a named density family at the grid normals."""
    params = dict(params or {})
    u = grid.normals
    if kind == "constant":
        value = float(params.get("value", 1.0))
        if value <= 0.0:
            raise ValueError("density.params.value must be positive")
        return np.full(grid.size, value)
    if kind == "harmonic":
        if grid.dim != 2:
            raise ValueError("density.kind harmonic requires dim 2")
        a = float(params.get("a", 0.5))
        k = int(params.get("k", 4))
        theta = np.arctan2(u[:, 1], u[:, 0])
        vals = 1.0 + a * np.cos(k * theta)
        if vals.min() < 0.0:
            raise ValueError("density.params.a gives a negative harmonic density")
        return vals
    if kind == "cospower":
        power = float(params.get("power", 3.0))
        return np.maximum(u[:, 0], 0.0) ** power
    if kind == "table":
        vals = np.asarray(params.get("values", []), dtype=float)
        if vals.shape != (grid.size,):
            raise ValueError(
                f"density.params.values must have length {grid.size}, got {vals.shape}"
            )
        return vals
    if kind == "expression":
        expr = params.get("expr")
        if not expr:
            raise ValueError("density.params.expr is required for kind expression")
        names = {"np": np, "x": u[:, 0], "y": u[:, 1], "u": u}
        if grid.dim == 3:
            names["z"] = u[:, 2]
        else:
            names["theta"] = np.arctan2(u[:, 1], u[:, 0])
        vals = eval(expr, {"__builtins__": {}}, names)  # noqa: S307 - sandboxed names
        vals = np.broadcast_to(np.asarray(vals, dtype=float), (grid.size,)).copy()
        return vals
    if kind == "random":
        sigma = float(params.get("sigma", 0.3))
        rng = np.random.default_rng(seed)
        return np.exp(rng.normal(0.0, sigma, grid.size))
    raise ValueError(f"density.kind unknown: {kind!r}")
