"""Outer loops: density truncation, kernel annealing, and final certification.

Degenerate or unbounded densities are clamped into [1/m, m] along an
increasing m schedule; for each truncation level the kernel smoothing eps
is annealed downward, warm-starting each stage from the previous body.
The per-stage optimization target is the mollified residual; the accepted
answer is re-certified against the UN-mollified kernel psi = 1/phi, which
is the quantity reported as residual_plain.  For power gains the
multiplier can be absorbed into a rescaling of the body afterwards.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .extremal import ExtremalBody, OuterConfig, extremize, pointwise_residual
from .center import validate_measure
from .geometry import wulff_body
from .grid import SphereGrid, build_grid
from .kernel import KernelConstants, OrliczSpec, derive_constants, mollify

logger = logging.getLogger(__name__)

DEFAULT_EPS_SCHEDULE = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4)
DEFAULT_M_SCHEDULE = (4, 16, 64, 256)


@dataclass(frozen=True)
class ProblemSpec:
    """Full problem description: grid, density samples, gain, schedules."""

    dim: int
    resolution: int
    density: np.ndarray           # raw f(u_i) samples, nonnegative
    orlicz: OrliczSpec
    eps_schedule: tuple = DEFAULT_EPS_SCHEDULE
    m_schedule: tuple = DEFAULT_M_SCHEDULE
    inner_tol: float = 1e-10
    outer_tol: float = 1e-3
    max_iters: int = 600
    direction: str = "maximize"
    symmetry_order: int | None = None

    def validate(self) -> None:
        eps = tuple(self.eps_schedule)
        if not eps or any(e <= 0.0 for e in eps):
            raise ValueError("schedules.eps must be a nonempty positive list")
        if any(not b < a for a, b in zip(eps, eps[1:])):
            raise ValueError("schedules.eps must be strictly decreasing")
        ms = tuple(self.m_schedule)
        if not ms or any(m < 2 for m in ms):
            raise ValueError("schedules.m entries must be >= 2")
        if any(not b > a for a, b in zip(ms, ms[1:])):
            raise ValueError("schedules.m must be strictly increasing")
        f = np.asarray(self.density, dtype=float)
        if np.any(f < 0.0):
            raise ValueError("density must be nonnegative")
        if not np.any(f > 0.0):
            raise ValueError("density must be positive somewhere")


@dataclass
class StageRecord:
    m: int
    eps: float
    iterations: int
    energy: float
    residual_mollified: float
    lam_mollified: float
    drift: float
    converged: bool
    trace: list = field(default_factory=list)


@dataclass
class Solution:
    """Final gauged answer with certification numbers and the stage trace."""

    h: np.ndarray
    xi: np.ndarray
    lam: float
    residual_plain: float
    residual_mollified: float
    energy: float
    converged: bool
    kind: str
    stages: list
    symmetry_error: float | None = None
    grid: SphereGrid | None = None
    final_measure: np.ndarray | None = None


def truncate_density(f_values: np.ndarray, m: int) -> np.ndarray:
    """Clamp density samples into [1/m, m]."""
    if m < 2:
        raise ValueError("truncation level m must be >= 2")
    return np.clip(np.asarray(f_values, dtype=float), 1.0 / m, float(m))


def plain_lambda(h: np.ndarray, grid: SphereGrid, mu: np.ndarray,
                 spec: OrliczSpec) -> float:
    """Multiplier against the un-mollified kernel."""
    return float(np.dot(h * np.asarray(spec.psi(h), dtype=float), mu) / grid.dim)


def plain_residual(h: np.ndarray, grid: SphereGrid, mu: np.ndarray,
                   spec: OrliczSpec, areas: np.ndarray,
                   lam: float | None = None) -> float:
    """Euler-Lagrange residual against the un-mollified kernel.

    Single implementation shared by the continuation driver and the
    certificate builder.
    """
    if lam is None:
        lam = plain_lambda(h, grid, mu, spec)
    return pointwise_residual(np.asarray(spec.psi(h), dtype=float), mu, lam, areas)


def solve(problem: ProblemSpec, grid: SphereGrid | None = None) -> Solution:
    """Run the full truncation x annealing continuation."""
    problem.validate()
    if grid is None:
        grid = build_grid(problem.dim, problem.resolution)
    f_raw = np.asarray(problem.density, dtype=float)
    spec = problem.orlicz
    constants = derive_constants(spec, problem.dim)
    eps_schedule = tuple(e for e in problem.eps_schedule if e < constants.delta)
    if not eps_schedule:
        raise ValueError(
            f"all schedules.eps entries are >= delta={constants.delta}; nothing to run"
        )

    kernels: dict[float, object] = {}
    config = OuterConfig(tol=problem.outer_tol, inner_tol=problem.inner_tol,
                         max_iters=problem.max_iters, direction=problem.direction)

    h = None
    stages: list[StageRecord] = []
    all_converged = True
    result: ExtremalBody | None = None
    mu = None
    for m in problem.m_schedule:
        fm = truncate_density(f_raw, m)
        mu = fm * grid.weights
        validate_measure(mu, grid)
        for eps in eps_schedule:
            if eps not in kernels:
                kernels[eps] = mollify(spec, constants, eps)
            kernel = kernels[eps]
            h_start = h
            result = extremize(grid, mu, kernel, config, h0=h_start)
            drift = 0.0 if h_start is None else float(np.abs(result.h - h_start).max())
            h = result.h
            stages.append(StageRecord(
                m=m, eps=eps, iterations=result.iterations,
                energy=result.energy_value,
                residual_mollified=result.el_residual,
                lam_mollified=result.lam, drift=drift,
                converged=result.converged, trace=result.trace,
            ))
            all_converged = all_converged and result.converged
            if not result.converged:
                logger.warning("stage m=%d eps=%.1e not converged (residual %.3e)",
                               m, eps, result.el_residual)

    body = wulff_body(h, grid)
    lam = plain_lambda(h, grid, mu, spec)
    res_plain = plain_residual(h, grid, mu, spec, body.areas, lam)

    symmetry_error = None
    k = problem.symmetry_order
    if k and grid.dim == 2 and grid.size % k == 0:
        perm = np.roll(np.arange(grid.size), -grid.size // k)
        symmetry_error = float(np.abs(h - h[perm]).max())

    return Solution(
        h=h, xi=np.zeros(grid.dim), lam=lam,
        residual_plain=res_plain,
        residual_mollified=stages[-1].residual_mollified,
        energy=result.energy_value, converged=all_converged,
        kind=spec.kind, stages=stages, symmetry_error=symmetry_error,
        grid=grid, final_measure=mu,
    )


def absorb_lambda(solution: Solution, p: float, n: int) -> np.ndarray:
    """Rescale a power-gain solution so that the multiplier becomes 1.

    With psi(alpha h) = alpha^(p-1) psi(h) and S(alpha h) = alpha^(n-1) S(h),
    the balance psi(h) mu = lam S turns into psi(h~) mu = S~ exactly for
    h~ = lam^(1/(n-p)) h; the relative residual is invariant under the
    rescaling.
    """
    if solution.kind != "power":
        raise ValueError("lambda absorption requires a power gain")
    alpha = solution.lam ** (1.0 / (n - p))
    return solution.h * alpha
