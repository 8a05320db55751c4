"""Recovery of the reaction law from observed boundary flux.

Pipeline: subtract the linear-part flux (flux_difference), propagate
the mismatch through the Neumann kernel to the data functional on the
boundary (compute_data_functional), extend it into the domain with a
surrogate profile (extend_boundary_data), project onto the eigenbasis,
differentiate the coefficients in time, and resum

    F(x, s) = sum_k (a_k'(s) + lambda_k a_k(s)) omega_k(x)

at boundary nodes. Pairing F(x, s) with the known boundary state
phi(x, s) and aggregating over all (node, time) samples yields a
monotone curve estimate of f.

The extension is the only heuristic stage: it fixes how the boundary
data is continued inward, and the resummed series inherits whatever
curvature the chosen profile carries.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.linalg import splu

from .eigenbasis import EigenBasis, make_basis
from .errors import ConfigurationError, InputError, NumericalError
from .fields import BoundaryTrace, SolutionField
from .forward import (Nonlinearity, ObservedData, _rect_bc_coupling,
                      _rect_interior_matrix, neumann_trace, solve_linear_heat)
from .geometry import DomainKind, SpatialGrid, build_grid
from .heatkernel import KernelConfig, KernelEvaluator
from .numerics import exp_convolve, isotonic_nondecreasing, sliding_derivative, smoothstep

EXTENSIONS = ("harmonic", "normal_constant")


@dataclass(frozen=True)
class ReconstructionConfig:
    """Tunable parameters of the reconstruction pipeline."""

    grid_n: int = 128
    k_modes: int = 16
    extension: str = "harmonic"
    diff_halfwidth: int = 2
    bins: int = 24
    monotone: bool = True
    q_lo: float = 0.1
    q_hi: float = 0.9
    kernel: KernelConfig = field(default_factory=KernelConfig)
    compare_extensions: bool = False

    def __post_init__(self):
        if self.extension not in EXTENSIONS:
            raise ConfigurationError(
                f"unknown extension {self.extension!r}, expected one of {EXTENSIONS}")
        if self.k_modes < 2:
            raise ConfigurationError(f"k_modes must be >= 2, got {self.k_modes}")
        if self.bins < 8:
            raise ConfigurationError(f"need at least 8 bins, got {self.bins}")
        if not (0.0 <= self.q_lo < self.q_hi <= 1.0):
            raise ConfigurationError(
                f"quantile band must satisfy 0 <= lo < hi <= 1, got ({self.q_lo}, {self.q_hi})")
        if self.diff_halfwidth < 1:
            raise ConfigurationError("diff_halfwidth must be >= 1")


@dataclass(frozen=True, eq=False)
class CoefficientSeries:
    """Eigenbasis coefficients of a space-time field, with optional time
    derivatives filled in by differentiate_coefficients."""

    times: np.ndarray = field(repr=False)
    lambdas: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)        # (nt+1, K)
    derivs: np.ndarray | None = field(default=None, repr=False)

    @property
    def k_modes(self) -> int:
        return len(self.lambdas)


@dataclass(frozen=True, eq=False)
class CurveEstimate:
    """Monotone curve u -> f_hat(u) with per-knot sample statistics."""

    knots: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)
    spreads: np.ndarray = field(repr=False)
    trusted_lo: float = 0.0
    trusted_hi: float = 0.0

    @property
    def knot_max(self) -> float:
        return float(self.knots[-1])


def flux_difference(obs: ObservedData, grid: SpatialGrid) -> BoundaryTrace:
    """g = observed flux minus the flux of the linear evolution v_phi,
    with v_phi recomputed on the reconstruction grid."""
    nt = len(obs.flux.times) - 1
    v = solve_linear_heat(grid, obs.phi, nt)
    if not np.allclose(v.times, obs.flux.times, rtol=0.0, atol=1e-12):
        raise InputError("observation time grid is not the uniform grid on "
                         f"[0, {obs.phi.final_time}] with {nt} steps")
    v_flux = neumann_trace(v, obs.flux.nodes)
    return BoundaryTrace(nodes=obs.flux.nodes, times=obs.flux.times,
                         values=obs.flux.values - v_flux.values)


def compute_data_functional(gap: BoundaryTrace, kernel: KernelEvaluator) -> BoundaryTrace:
    """Propagate the flux mismatch to the boundary data functional

        a(x, t) = int_0^t int_bnd U(x, t; y, s) g(y, s) dS(y) ds.
    """
    values = kernel.boundary_propagate_trace(gap, gap.nodes.nodes)
    return BoundaryTrace(nodes=gap.nodes, times=gap.times, values=values)


# -- extensions --------------------------------------------------------


def _interval_extension(a: BoundaryTrace, grid: SpatialGrid, method: str) -> np.ndarray:
    L = grid.domain.lengths[0]
    xs = grid.axes[0]
    left = a.values[:, 0][:, None]
    right = a.values[:, 1][:, None]
    if method == "harmonic":
        lam = (xs / L)[None, :]
    else:
        lam = smoothstep((xs - 0.4 * L) / (0.2 * L))[None, :]
    return left + (right - left) * lam


def _side_values_on_axis(a: BoundaryTrace, side: int, coords: np.ndarray) -> np.ndarray:
    """Interpolate one side's trace onto tangential coordinates, with
    linear extrapolation past the first/last node; (nt+1, len(coords))."""
    sel = a.nodes.side == side
    nrm = a.nodes.normals[sel][0]
    tangent = 1 - int(np.argmax(np.abs(nrm)))
    tc = a.nodes.nodes[sel][:, tangent]
    order = np.argsort(tc)
    tc = tc[order]
    vals = a.values[:, sel][:, order]
    out = np.empty((vals.shape[0], len(coords)))
    for j in range(vals.shape[0]):
        out[j] = np.interp(coords, tc, vals[j])
    lo = coords < tc[0]
    hi = coords > tc[-1]
    if np.any(lo):
        slope = (vals[:, 1] - vals[:, 0]) / (tc[1] - tc[0])
        out[:, lo] = vals[:, [0]] + slope[:, None] * (coords[lo] - tc[0])[None, :]
    if np.any(hi):
        slope = (vals[:, -1] - vals[:, -2]) / (tc[-1] - tc[-2])
        out[:, hi] = vals[:, [-1]] + slope[:, None] * (coords[hi] - tc[-1])[None, :]
    return out


def _rect_rings(a: BoundaryTrace, grid: SpatialGrid) -> np.ndarray:
    """Boundary-ring Dirichlet values per time from the side traces;
    corners average the two adjacent sides' extrapolations."""
    nx, ny = grid.n
    nt1 = a.values.shape[0]
    xg, yg = grid.axes
    sides = [_side_values_on_axis(a, s, c)
             for s, c in [(0, yg), (1, yg), (2, xg), (3, xg)]]
    rings = np.zeros((nt1, nx + 1, ny + 1))
    rings[:, 0, :] = sides[0]
    rings[:, -1, :] = sides[1]
    rings[:, :, 0] = sides[2]
    rings[:, :, -1] = sides[3]
    for (i, j), (u, v) in [((0, 0), (0, 2)), ((0, -1), (0, 3)),
                           ((-1, 0), (1, 2)), ((-1, -1), (1, 3))]:
        ci = 0 if j == 0 else -1
        cj = 0 if i == 0 else -1
        rings[:, i, j] = 0.5 * (sides[u][:, ci] + sides[v][:, cj])
    return rings


def _rect_harmonic(a: BoundaryTrace, grid: SpatialGrid) -> np.ndarray:
    rings = _rect_rings(a, grid)
    A = _rect_interior_matrix(grid).tocsc()
    lu = splu(-A)
    nt1 = rings.shape[0]
    out = rings.copy()
    rhs = np.stack([_rect_bc_coupling(grid, rings[j]).ravel() for j in range(nt1)], axis=1)
    sol = lu.solve(rhs)
    nx, ny = grid.n
    out[:, 1:-1, 1:-1] = sol.T.reshape(nt1, nx - 1, ny - 1)
    return out


def _rect_normal_constant(a: BoundaryTrace, grid: SpatialGrid) -> np.ndarray:
    lx, ly = grid.domain.lengths
    xg, yg = grid.axes
    X, Y = np.meshgrid(xg, yg, indexing="ij")
    dists = np.stack([X, lx - X, Y, ly - Y])            # per side
    sides = [_side_values_on_axis(a, 0, yg), _side_values_on_axis(a, 1, yg),
             _side_values_on_axis(a, 2, xg), _side_values_on_axis(a, 3, xg)]
    nt1 = sides[0].shape[0]
    vals = np.empty((4, nt1) + X.shape)
    vals[0] = sides[0][:, None, :]
    vals[1] = sides[1][:, None, :]
    vals[2] = sides[2][:, :, None]
    vals[3] = sides[3][:, :, None]
    # inverse-distance-power blend: near-constant along each normal,
    # C^inf crossover at the medial region, exact on the boundary
    scale = min(lx, ly)
    w = 1.0 / (dists / scale + 1e-14) ** 4
    w /= np.sum(w, axis=0)
    out = np.einsum("sxy,stxy->txy", w, vals)
    for s, idx in [(0, (0, slice(None))), (1, (-1, slice(None))),
                   (2, (slice(None), 0)), (3, (slice(None), -1))]:
        out[(slice(None),) + idx] = vals[s][(slice(None),) + idx]
    return out


def extend_boundary_data(a: BoundaryTrace, grid: SpatialGrid, method: str) -> np.ndarray:
    """Continue boundary data into the domain; (nt+1, *grid.shape).

    harmonic solves lap = 0 per time node (interval: linear profile);
    normal_constant holds the nearest side's value along the inward
    normal and blends smoothly at the medial region. Both reproduce the
    input exactly at (grid-aligned) boundary nodes.
    """
    if method not in EXTENSIONS:
        raise ConfigurationError(
            f"unknown extension {method!r}, expected one of {EXTENSIONS}")
    if grid.domain.kind is DomainKind.INTERVAL:
        return _interval_extension(a, grid, method)
    if method == "harmonic":
        return _rect_harmonic(a, grid)
    return _rect_normal_constant(a, grid)


# -- modal stages ------------------------------------------------------


def project_coefficients(extended: np.ndarray, grid: SpatialGrid,
                         basis: EigenBasis, times: np.ndarray) -> CoefficientSeries:
    """Quadrature eigenbasis coefficients of the extended field per time."""
    coeffs = basis.project(grid, extended)
    return CoefficientSeries(times=np.asarray(times, dtype=float),
                             lambdas=basis.lambdas.copy(), values=coeffs)


def differentiate_coefficients(series: CoefficientSeries,
                               halfwidth: int) -> CoefficientSeries:
    """Fill in sliding-window least-squares time derivatives."""
    derivs = sliding_derivative(series.times, series.values, halfwidth)
    return replace(series, derivs=derivs)


def assemble_series(series: CoefficientSeries, basis: EigenBasis,
                    points: np.ndarray) -> np.ndarray:
    """F(x, s) = sum_k (a_k'(s) + lambda_k a_k(s)) omega_k(x); (nt+1, npts)."""
    if series.derivs is None:
        raise InputError("coefficient series has no derivatives; differentiate first")
    if basis.size != series.k_modes:
        raise InputError(f"basis size {basis.size} != series modes {series.k_modes}")
    combo = series.derivs + series.values * series.lambdas[None, :]
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return combo @ basis.values_at(pts)


def volterra_oracle(u: SolutionField, reaction: Nonlinearity, basis: EigenBasis
                    ) -> tuple[CoefficientSeries, CoefficientSeries]:
    """Oracle modal data from a known interior state: source coefficients
    c_k(s) = (f(u(s)), omega_k) and their Volterra responses

        p_k(t) = int_0^t exp(-lambda_k (t - s)) c_k(s) ds

    computed by the exponentially-weighted trapezoid rule (exact for
    piecewise-linear c_k). Verification-only: consumes the interior
    state the inverse problem does not observe.
    """
    source = basis.project(u.grid, reaction.fn(u.values))
    response = exp_convolve(basis.lambdas, u.times, source)
    c = CoefficientSeries(times=u.times, lambdas=basis.lambdas.copy(), values=source)
    p = CoefficientSeries(times=u.times, lambdas=basis.lambdas.copy(), values=response)
    return c, p


# -- curve aggregation -------------------------------------------------


def build_curve(phi_samples: np.ndarray, series_samples: np.ndarray,
                config: ReconstructionConfig) -> CurveEstimate:
    """Aggregate (phi, F) pairs into a monotone curve estimate.

    Bins [0, max phi] uniformly, takes per-bin medians, anchors the
    curve at (0, 0) and projects onto nondecreasing sequences (PAV)
    when monotone is set. The trusted range is the [q_lo, q_hi]
    quantile band of the phi samples.
    """
    phi = np.asarray(phi_samples, dtype=float).ravel()
    fv = np.asarray(series_samples, dtype=float).ravel()
    if phi.shape != fv.shape:
        raise InputError("phi and series samples must align")
    ok = np.isfinite(phi) & np.isfinite(fv)
    phi, fv = phi[ok], fv[ok]
    pmax = float(np.max(phi)) if len(phi) else 0.0
    if len(phi) < 3 * config.bins or pmax <= 0:
        raise NumericalError(
            f"degenerate sample set for curve fitting ({len(phi)} samples, "
            f"max phi {pmax:g})")
    edges = np.linspace(0.0, pmax, config.bins + 1)
    idx = np.clip(np.digitize(phi, edges) - 1, 0, config.bins - 1)
    knots, meds, counts, spreads = [0.0], [0.0], [0.0], [0.0]
    for b in range(config.bins):
        sel = idx == b
        cnt = int(np.sum(sel))
        if cnt == 0:
            continue
        q25, q50, q75 = np.percentile(fv[sel], [25.0, 50.0, 75.0])
        knots.append(0.5 * (edges[b] + edges[b + 1]))
        meds.append(float(q50))
        counts.append(cnt)
        spreads.append(float(q75 - q25))
    if len(knots) < 4:  # anchor plus at least 3 populated bins
        raise NumericalError("too few populated bins for a curve estimate")
    knots = np.asarray(knots)
    values = np.asarray(meds)
    counts = np.asarray(counts, dtype=float)
    spreads = np.asarray(spreads)
    if config.monotone:
        weights = counts.copy()
        weights[0] = np.sum(counts)  # pin the exact anchor f(0) = 0
        values = isotonic_nondecreasing(values, weights)
        # the admissible class has f >= 0, so negative pooled levels
        # (possible when early-bin medians dip below zero) clip to zero;
        # this keeps the sequence nondecreasing with the anchor at 0
        values = np.maximum(values, 0.0)
        values[0] = 0.0
    lo, hi = np.quantile(phi, [config.q_lo, config.q_hi])
    return CurveEstimate(knots=knots, values=values, counts=counts, spreads=spreads,
                         trusted_lo=float(lo), trusted_hi=float(hi))


def evaluate_curve(curve: CurveEstimate, u) -> tuple[np.ndarray, np.ndarray]:
    """Piecewise-linear curve evaluation with an out-of-range flag.

    Arguments outside the knot span clamp to the nearest knot value;
    the flag marks anything outside the trusted quantile band.
    """
    uu = np.asarray(u, dtype=float)
    vals = np.interp(np.clip(uu, 0.0, curve.knot_max), curve.knots, curve.values)
    flags = (uu < curve.trusted_lo) | (uu > curve.trusted_hi)
    return vals, flags


# -- orchestration -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    curve: CurveEstimate
    coefficients: CoefficientSeries
    functional: BoundaryTrace
    gap: BoundaryTrace
    series_values: np.ndarray = field(repr=False)  # (nt+1, nb)
    phi_values: np.ndarray = field(repr=False)     # (nt+1, nb)
    diagnostics: dict = field(default_factory=dict)
    alt_curve: CurveEstimate | None = None


def _pipeline(a: BoundaryTrace, grid: SpatialGrid, basis: EigenBasis,
              config: ReconstructionConfig, method: str):
    extended = extend_boundary_data(a, grid, method)
    series = project_coefficients(extended, grid, basis, a.times)
    series = differentiate_coefficients(series, config.diff_halfwidth)
    fvals = assemble_series(series, basis, a.nodes.nodes)
    return series, fvals


def reconstruct(obs: ObservedData, config: ReconstructionConfig) -> ReconstructionResult:
    """Run the full pipeline on one observation.

    Never touches obs.f_label; scoring against a known law is the
    caller's business.
    """
    grid = build_grid(obs.domain, config.grid_n)
    gap = flux_difference(obs, grid)
    kernel = KernelEvaluator(obs.domain, config.kernel)
    functional = compute_data_functional(gap, kernel)
    basis = make_basis(obs.domain, config.k_modes)
    series, fvals = _pipeline(functional, grid, basis, config, config.extension)
    phi_vals = np.stack([obs.phi(functional.nodes.nodes, t) for t in functional.times])
    curve = build_curve(phi_vals, fvals, config)

    energy = np.max(np.abs(series.values), axis=0)
    tail = float(np.max(energy[3 * len(energy) // 4:]) / max(np.max(energy), 1e-300))
    diagnostics = {
        "functional_min": float(np.min(functional.values)),
        "functional_initial_max": float(np.max(np.abs(functional.values[0]))),
        "mode_energy": energy.tolist(),
        "tail_energy_ratio": tail,
        "tail_energy_flagged": bool(tail > 0.1),
        "extension_method": config.extension,
    }
    alt_curve = None
    if config.compare_extensions:
        other = "normal_constant" if config.extension == "harmonic" else "harmonic"
        _, alt_fvals = _pipeline(functional, grid, basis, config, other)
        alt_curve = build_curve(phi_vals, alt_fvals, config)
        us = np.linspace(max(curve.trusted_lo, alt_curve.trusted_lo),
                         min(curve.trusted_hi, alt_curve.trusted_hi), 101)
        v1, _ = evaluate_curve(curve, us)
        v2, _ = evaluate_curve(alt_curve, us)
        diagnostics["extension_discrepancy"] = float(np.max(np.abs(v1 - v2)))
        diagnostics["alt_extension_method"] = other
    return ReconstructionResult(curve=curve, coefficients=series, functional=functional,
                                gap=gap, series_values=fvals, phi_values=phi_vals,
                                diagnostics=diagnostics, alt_curve=alt_curve)
