"""Forward solvers for the semilinear heat problem and its linear part.

The evolution u_t - lap(u) + f(u) = q with Dirichlet data phi is
discretized by Crank-Nicolson in the diffusion term and a two-step
Adams-Bashforth extrapolation of the reaction term (first step
bootstrapped with f(u^0)), which keeps the scheme second order in both
h and dt without nonlinear solves. Boundary values are imposed
strongly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded
from scipy.sparse import identity, kron, diags
from scipy.sparse.linalg import splu

from .errors import ConfigurationError, InputError, NumericalError
from .fields import BoundaryTrace, SolutionField
from .geometry import (BoundaryNodeSet, DomainKind, DomainSpec, SpatialGrid,
                       boundary_nodes, build_grid)

SourceFn = Callable[[SpatialGrid, float], np.ndarray]


@dataclass(frozen=True)
class Nonlinearity:
    """A reaction law u -> f(u) with an optional derivative."""

    fn: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray] | None = None
    label: str = "custom"

    def check_admissible(self, u_max: float, samples: int = 257, tol: float = 1e-10) -> None:
        """Sampled admissibility: f(0) = 0, f >= 0 and nondecreasing on [0, u_max]."""
        us = np.linspace(0.0, max(u_max, 1e-12), samples)
        vals = np.asarray(self.fn(us), dtype=float)
        if abs(float(vals[0])) > tol:
            raise InputError(f"reaction law must vanish at 0, got f(0) = {vals[0]:g}")
        if np.min(vals) < -tol:
            raise InputError("reaction law must be nonnegative on the data range")
        if np.min(np.diff(vals)) < -tol:
            raise InputError("reaction law must be nondecreasing on the data range")


@dataclass(frozen=True)
class DirichletData:
    """Time-dependent Dirichlet boundary data phi(x, t).

    fn maps (points (N, dim), t) to values (N,); final_time is the
    horizon T of the experiment.
    """

    fn: Callable[[np.ndarray, float], np.ndarray]
    final_time: float
    label: str = "custom"

    def __call__(self, points: np.ndarray, t: float) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(points, dtype=float), float(t)), dtype=float)

    def check_admissible(self, nodes: BoundaryNodeSet, time_samples: int = 65,
                         tol: float = 1e-10) -> None:
        """Sampled admissibility: phi(., 0) = 0, phi >= 0, phi not identically 0."""
        ts = np.linspace(0.0, self.final_time, time_samples)
        vals = np.stack([self(nodes.nodes, t) for t in ts])
        if np.max(np.abs(vals[0])) > tol:
            raise InputError("boundary data must vanish at t = 0")
        if np.min(vals) < -tol:
            raise InputError("boundary data must be nonnegative")
        if np.max(np.abs(vals)) <= tol:
            raise InputError("boundary data must not vanish identically")


def _check_counts(nt: int) -> None:
    if nt < 2:
        raise ConfigurationError(f"need at least 2 time steps, got {nt}")


def _interval_step_matrix(n: int, h: float, dt: float) -> np.ndarray:
    """Banded (I - dt/2 lap) on the n-1 interior nodes for solve_banded."""
    r = dt / (2.0 * h * h)
    ab = np.zeros((3, n - 1))
    ab[0, 1:] = -r
    ab[1, :] = 1.0 + 2.0 * r
    ab[2, :-1] = -r
    return ab


def _solve_1d(grid: SpatialGrid, reaction, data: DirichletData, nt: int,
              source: SourceFn | None, u0: np.ndarray | None) -> SolutionField:
    n = grid.n[0]
    h = grid.h[0]
    T = data.final_time
    dt = T / nt
    times = np.linspace(0.0, T, nt + 1)
    xs = grid.axes[0]
    bpts = np.array([[xs[0]], [xs[-1]]])
    ab = _interval_step_matrix(n, h, dt)
    r = dt / (2.0 * h * h)

    u = np.zeros((nt + 1, n + 1))
    if u0 is not None:
        u[0] = u0
    u[0, 0], u[0, -1] = data(bpts, 0.0)
    f_prev = None
    for m in range(nt):
        um = u[m]
        fm = reaction(um) if reaction is not None else np.zeros_like(um)
        f_ex = fm if f_prev is None else 1.5 * fm - 0.5 * f_prev
        lap_m = (um[:-2] - 2.0 * um[1:-1] + um[2:]) / (h * h)
        rhs = um[1:-1] + 0.5 * dt * lap_m - dt * f_ex[1:-1]
        if source is not None:
            rhs = rhs + dt * source(grid, times[m] + 0.5 * dt)[1:-1]
        bc_new = data(bpts, times[m + 1])
        rhs[0] += r * bc_new[0]
        rhs[-1] += r * bc_new[1]
        if not np.all(np.isfinite(rhs)):
            raise NumericalError(f"solver diverged at step {m + 1} (t = {times[m + 1]:g})")
        u_new = solve_banded((1, 1), ab, rhs)
        if not np.all(np.isfinite(u_new)):
            raise NumericalError(f"solver diverged at step {m + 1} (t = {times[m + 1]:g})")
        u[m + 1, 1:-1] = u_new
        u[m + 1, 0], u[m + 1, -1] = bc_new
        f_prev = fm
    return SolutionField(grid=grid, times=times, values=u)


def _rect_interior_matrix(grid: SpatialGrid):
    nx, ny = grid.n
    hx, hy = grid.h

    def lap1(n, h):
        return diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n - 1, n - 1)) / (h * h)

    ix = identity(nx - 1, format="csr")
    iy = identity(ny - 1, format="csr")
    return kron(lap1(nx, hx), iy) + kron(ix, lap1(ny, hy))


def _rect_bc_coupling(grid: SpatialGrid, ring: np.ndarray) -> np.ndarray:
    """Contribution of boundary-ring values to the interior 5-point stencil."""
    nx, ny = grid.n
    hx, hy = grid.h
    out = np.zeros((nx - 1, ny - 1))
    out[0, :] += ring[0, 1:-1] / (hx * hx)
    out[-1, :] += ring[-1, 1:-1] / (hx * hx)
    out[:, 0] += ring[1:-1, 0] / (hy * hy)
    out[:, -1] += ring[1:-1, -1] / (hy * hy)
    return out


def _rect_boundary_ring(grid: SpatialGrid, data: DirichletData, t: float) -> np.ndarray:
    """Dirichlet values on the full boundary ring of grid nodes at time t."""
    nx, ny = grid.n
    vals = np.zeros((nx + 1, ny + 1))
    xg, yg = grid.axes
    for idx, pts in [
        ((0, slice(None)), np.column_stack([np.zeros(ny + 1), yg])),
        ((-1, slice(None)), np.column_stack([np.full(ny + 1, xg[-1]), yg])),
        ((slice(None), 0), np.column_stack([xg, np.zeros(nx + 1)])),
        ((slice(None), -1), np.column_stack([xg, np.full(nx + 1, yg[-1])])),
    ]:
        vals[idx] = data(pts, t)
    return vals


def _solve_2d(grid: SpatialGrid, reaction, data: DirichletData, nt: int,
              source: SourceFn | None, u0: np.ndarray | None) -> SolutionField:
    nx, ny = grid.n
    hx, hy = grid.h
    T = data.final_time
    dt = T / nt
    times = np.linspace(0.0, T, nt + 1)
    A = _rect_interior_matrix(grid).tocsc()
    ni = (nx - 1) * (ny - 1)
    lhs = splu(identity(ni, format="csc") - (dt / 2.0) * A)

    def lap_full(w: np.ndarray) -> np.ndarray:
        out = np.zeros_like(w)
        out[1:-1, 1:-1] = ((w[:-2, 1:-1] - 2 * w[1:-1, 1:-1] + w[2:, 1:-1]) / (hx * hx)
                           + (w[1:-1, :-2] - 2 * w[1:-1, 1:-1] + w[1:-1, 2:]) / (hy * hy))
        return out

    u = np.zeros((nt + 1,) + grid.shape)
    if u0 is not None:
        u[0] = u0
    ring0 = _rect_boundary_ring(grid, data, 0.0)
    u[0][0, :], u[0][-1, :] = ring0[0, :], ring0[-1, :]
    u[0][:, 0], u[0][:, -1] = ring0[:, 0], ring0[:, -1]
    f_prev = None
    for m in range(nt):
        um = u[m]
        fm = reaction(um) if reaction is not None else np.zeros_like(um)
        f_ex = fm if f_prev is None else 1.5 * fm - 0.5 * f_prev
        ring_new = _rect_boundary_ring(grid, data, times[m + 1])
        rhs = (um[1:-1, 1:-1] + 0.5 * dt * lap_full(um)[1:-1, 1:-1]
               - dt * f_ex[1:-1, 1:-1] + 0.5 * dt * _rect_bc_coupling(grid, ring_new))
        if source is not None:
            rhs = rhs + dt * source(grid, times[m] + 0.5 * dt)[1:-1, 1:-1]
        if not np.all(np.isfinite(rhs)):
            raise NumericalError(f"solver diverged at step {m + 1} (t = {times[m + 1]:g})")
        u_new = lhs.solve(rhs.ravel())
        if not np.all(np.isfinite(u_new)):
            raise NumericalError(f"solver diverged at step {m + 1} (t = {times[m + 1]:g})")
        full = ring_new.copy()
        full[1:-1, 1:-1] = u_new.reshape(nx - 1, ny - 1)
        u[m + 1] = full
        f_prev = fm
    return SolutionField(grid=grid, times=times, values=u)


def solve_semilinear(grid: SpatialGrid, reaction: Nonlinearity, data: DirichletData,
                     nt: int, source: SourceFn | None = None,
                     u0: np.ndarray | None = None) -> SolutionField:
    """March u_t - lap(u) + f(u) = source with Dirichlet data to t = T."""
    _check_counts(nt)
    fn = reaction.fn if reaction is not None else None
    if grid.domain.kind is DomainKind.INTERVAL:
        return _solve_1d(grid, fn, data, nt, source, u0)
    return _solve_2d(grid, fn, data, nt, source, u0)


def solve_linear_heat(grid: SpatialGrid, data: DirichletData, nt: int,
                      source: SourceFn | None = None,
                      u0: np.ndarray | None = None) -> SolutionField:
    """March the linear heat equation with the same discretization."""
    _check_counts(nt)
    if grid.domain.kind is DomainKind.INTERVAL:
        return _solve_1d(grid, None, data, nt, source, u0)
    return _solve_2d(grid, None, data, nt, source, u0)


def _grid_index(axis: np.ndarray, coord: float) -> int:
    i = int(round((coord - axis[0]) / (axis[1] - axis[0])))
    if not (0 <= i < len(axis)) or abs(axis[i] - coord) > 1e-9 * max(1.0, abs(coord)):
        raise InputError(f"boundary node at {coord:g} is not aligned with the grid")
    return i


def default_trace_nodes(grid: SpatialGrid) -> BoundaryNodeSet:
    """Grid-aligned boundary quadrature nodes (rectangle: n/2 per side)."""
    if grid.domain.kind is DomainKind.INTERVAL:
        return boundary_nodes(grid.domain)
    if grid.n[0] % 2 or grid.n[1] % 2 or grid.n[0] != grid.n[1]:
        raise ConfigurationError(
            f"rectangle traces need an even, equal cell count per axis, got {grid.n}")
    return boundary_nodes(grid.domain, m=grid.n[0] // 2)


def neumann_trace(field: SolutionField, nodes: BoundaryNodeSet | None = None) -> BoundaryTrace:
    """Outward normal derivative at boundary nodes, one-sided second order.

    At x = 0 the stencil is dn(u) = (3 u_0 - 4 u_1 + u_2) / (2h); nodes
    must lie on grid lines (the default set does).
    """
    grid = field.grid
    if nodes is None:
        nodes = default_trace_nodes(grid)
    nt1 = len(field.times)
    out = np.empty((nt1, nodes.count))
    for b in range(nodes.count):
        pt = nodes.nodes[b]
        nrm = nodes.normals[b]
        d = int(np.argmax(np.abs(nrm)))
        h = grid.h[d]
        if grid.domain.dim == 1:
            series = field.values
        else:
            other = 1 - d
            j = _grid_index(grid.axes[other], float(pt[other]))
            series = field.values[:, :, j] if d == 0 else field.values[:, j, :]
        if nrm[d] < 0:
            out[:, b] = (3.0 * series[:, 0] - 4.0 * series[:, 1] + series[:, 2]) / (2.0 * h)
        else:
            out[:, b] = (3.0 * series[:, -1] - 4.0 * series[:, -2] + series[:, -3]) / (2.0 * h)
    return BoundaryTrace(nodes=nodes, times=field.times, values=out)


@dataclass(frozen=True)
class DifferenceResidualReport:
    """Discrete residual of the difference field w = u - v, which should
    satisfy w_t - lap(w) + f(u) = 0 with zero boundary and initial data."""

    interior_max: float
    boundary_max: float
    initial_max: float


def difference_residual(u: SolutionField, v: SolutionField,
                        reaction: Nonlinearity) -> DifferenceResidualReport:
    """Check w = u - v against its evolution law with discrete operators
    (centered time derivative, 3/5-point Laplacian) on interior nodes and
    interior times."""
    if u.values.shape != v.values.shape or not np.allclose(u.times, v.times):
        raise InputError("fields must share grid and time sampling")
    grid = u.grid
    w = u.values - v.values
    dt = float(u.times[1] - u.times[0])
    wt = (w[2:] - w[:-2]) / (2.0 * dt)
    if grid.domain.dim == 1:
        h = grid.h[0]
        lap = (w[:, :-2] - 2.0 * w[:, 1:-1] + w[:, 2:]) / (h * h)
        res = wt[:, 1:-1] - lap[1:-1] + reaction.fn(u.values[1:-1, 1:-1])
        boundary = np.max(np.abs(w[:, [0, -1]]))
    else:
        hx, hy = grid.h
        lap = ((w[:, :-2, 1:-1] - 2.0 * w[:, 1:-1, 1:-1] + w[:, 2:, 1:-1]) / (hx * hx)
               + (w[:, 1:-1, :-2] - 2.0 * w[:, 1:-1, 1:-1] + w[:, 1:-1, 2:]) / (hy * hy))
        res = wt[:, 1:-1, 1:-1] - lap[1:-1] + reaction.fn(u.values[1:-1, 1:-1, 1:-1])
        edge = np.concatenate([w[:, 0, :].ravel(), w[:, -1, :].ravel(),
                               w[:, :, 0].ravel(), w[:, :, -1].ravel()])
        boundary = np.max(np.abs(edge))
    return DifferenceResidualReport(interior_max=float(np.max(np.abs(res))),
                                    boundary_max=float(boundary),
                                    initial_max=float(np.max(np.abs(w[0]))))


@dataclass(frozen=True, eq=False)
class ObservedData:
    """A synthetic measurement: known boundary data plus observed flux.

    f_label tags the generating reaction law for scoring; the
    reconstruction path never reads it.
    """

    domain: DomainSpec
    phi: DirichletData
    flux: BoundaryTrace
    noise_level: float
    seed: int
    f_label: str | None = None
    meta: dict = field(default_factory=dict)


def synthesize_observation(domain: DomainSpec, reaction: Nonlinearity,
                           phi: DirichletData, fine_n: int, fine_nt: int,
                           sub_nt: int, noise_level: float = 0.0,
                           seed: int = 0, m_nodes: int | None = None) -> ObservedData:
    """Solve on a fine grid, extract the flux, perturb, subsample.

    The time subsampling ratio must be an integer >= 2 so observations
    never live on the grid the reconstruction will use (inverse-crime
    guard); spatial fineness is the caller's responsibility via fine_n.
    m_nodes picks the per-side boundary node count on the rectangle
    (must align with both the fine and the reconstruction grid).
    """
    if fine_nt % sub_nt != 0 or fine_nt // sub_nt < 2:
        raise ConfigurationError(
            f"fine steps {fine_nt} must be an integer multiple (>= 2) of {sub_nt}")
    if noise_level < 0:
        raise ConfigurationError(f"noise level must be >= 0, got {noise_level}")
    grid = build_grid(domain, fine_n)
    if m_nodes is not None and domain.kind is DomainKind.RECTANGLE:
        nodes = boundary_nodes(domain, m_nodes)
    else:
        nodes = default_trace_nodes(grid)
    phi.check_admissible(nodes)
    u = solve_semilinear(grid, reaction, phi, fine_nt)
    reaction.check_admissible(float(np.max(u.values)))
    flux = neumann_trace(u, nodes)
    values = flux.values
    if noise_level > 0:
        rng = np.random.default_rng(seed)
        scale = noise_level * float(np.max(np.abs(values)))
        values = values + rng.normal(0.0, scale, size=values.shape)
    noisy = BoundaryTrace(nodes=flux.nodes, times=flux.times, values=values)
    sub = noisy.subsample_time(fine_nt // sub_nt)
    return ObservedData(domain=domain, phi=phi, flux=sub,
                        noise_level=noise_level, seed=seed,
                        f_label=reaction.label,
                        meta={"fine_n": fine_n, "fine_nt": fine_nt, "sub_nt": sub_nt})
