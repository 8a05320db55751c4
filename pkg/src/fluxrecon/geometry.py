"""Domains, tensor grids and boundary quadrature nodes.

Supported domains are the interval (0, L) and the axis-aligned rectangle
(0, L1) x (0, L2). Points are ndarrays of shape (..., dim) throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError
from .numerics import trapezoid_weights

MIN_CELLS = 8


class DomainKind(Enum):
    INTERVAL = "interval"
    RECTANGLE = "rectangle"


@dataclass(frozen=True)
class DomainSpec:
    """A product domain described by its kind and per-axis lengths."""

    kind: DomainKind
    lengths: tuple[float, ...]

    def __post_init__(self):
        expected = 1 if self.kind is DomainKind.INTERVAL else 2
        if len(self.lengths) != expected:
            raise ConfigurationError(
                f"{self.kind.value} domain needs {expected} length(s), "
                f"got {self.lengths}")
        if any(L <= 0 for L in self.lengths):
            raise ConfigurationError(f"domain lengths must be positive: {self.lengths}")

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))


def interval(length: float = 1.0) -> DomainSpec:
    return DomainSpec(DomainKind.INTERVAL, (float(length),))


def rectangle(lx: float = 1.0, ly: float = 1.0) -> DomainSpec:
    return DomainSpec(DomainKind.RECTANGLE, (float(lx), float(ly)))


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """Uniform tensor grid on a domain, boundary nodes included.

    axes[d] holds the n[d] + 1 node coordinates along axis d and weights
    is the tensor-product trapezoid quadrature weight array over the
    full grid (shape == field shape).
    """

    domain: DomainSpec
    n: tuple[int, ...]
    axes: tuple[np.ndarray, ...] = field(repr=False)
    h: tuple[float, ...]
    weights: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(ax) for ax in self.axes)

    def interior(self) -> tuple[slice, ...]:
        """Index slices selecting strictly interior nodes."""
        return tuple(slice(1, -1) for _ in self.axes)

    def integrate(self, values: np.ndarray) -> float:
        """Trapezoid integral of a nodal field over the domain."""
        return float(np.sum(self.weights * values))


def make_grid(domain: DomainSpec, n) -> SpatialGrid:
    """Construct a uniform grid with n cells per axis, without bounds checks."""
    ns = (int(n),) * domain.dim if np.isscalar(n) else tuple(int(v) for v in n)
    if len(ns) != domain.dim:
        raise ConfigurationError(f"expected {domain.dim} cell counts, got {ns}")
    if any(v < 2 for v in ns):
        raise ConfigurationError(f"need at least 2 cells per axis, got {ns}")
    axes = tuple(np.linspace(0.0, L, v + 1) for L, v in zip(domain.lengths, ns))
    hs = tuple(L / v for L, v in zip(domain.lengths, ns))
    w1 = [trapezoid_weights(v, L) for v, L in zip(ns, domain.lengths)]
    weights = w1[0] if domain.dim == 1 else np.multiply.outer(w1[0], w1[1])
    return SpatialGrid(domain=domain, n=ns, axes=axes, h=hs, weights=weights)


def build_grid(domain: DomainSpec, n) -> SpatialGrid:
    """Uniform tensor grid with at least MIN_CELLS cells per axis."""
    grid = make_grid(domain, n)
    if any(v < MIN_CELLS for v in grid.n):
        raise ConfigurationError(
            f"grid too coarse: need >= {MIN_CELLS} cells per axis, got {grid.n}")
    return grid


@dataclass(frozen=True, eq=False)
class BoundaryNodeSet:
    """Quadrature nodes on the boundary with outward normals.

    For the interval these are the two endpoints with unit weight (the
    boundary integral is a two-point sum). For the rectangle each side
    carries m cell-midpoint nodes of weight side_length / m; corners are
    excluded.
    """

    domain: DomainSpec
    nodes: np.ndarray = field(repr=False)    # (nb, dim)
    normals: np.ndarray = field(repr=False)  # (nb, dim)
    weights: np.ndarray = field(repr=False)  # (nb,)
    side: np.ndarray = field(repr=False)     # (nb,) side index, interval: 0 / 1

    @property
    def count(self) -> int:
        return len(self.weights)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Boundary integral of nodal values laid out on the last axis."""
        return np.asarray(values) @ self.weights


def boundary_nodes(domain: DomainSpec, m: int = 0) -> BoundaryNodeSet:
    """Boundary quadrature node set; m is the per-side node count (rectangle)."""
    if domain.kind is DomainKind.INTERVAL:
        L = domain.lengths[0]
        nodes = np.array([[0.0], [L]])
        normals = np.array([[-1.0], [1.0]])
        weights = np.array([1.0, 1.0])
        side = np.array([0, 1])
        return BoundaryNodeSet(domain, nodes, normals, weights, side)
    if m < 4:
        raise ConfigurationError(f"rectangle boundary needs m >= 4 nodes per side, got {m}")
    lx, ly = domain.lengths
    mids_x = (np.arange(m) + 0.5) * (lx / m)
    mids_y = (np.arange(m) + 0.5) * (ly / m)
    chunks, norms, wts, sides = [], [], [], []
    # side order: x=0, x=lx, y=0, y=ly
    for s, (pts, nrm, w) in enumerate([
        (np.column_stack([np.zeros(m), mids_y]), (-1.0, 0.0), ly / m),
        (np.column_stack([np.full(m, lx), mids_y]), (1.0, 0.0), ly / m),
        (np.column_stack([mids_x, np.zeros(m)]), (0.0, -1.0), lx / m),
        (np.column_stack([mids_x, np.full(m, ly)]), (0.0, 1.0), lx / m),
    ]):
        chunks.append(pts)
        norms.append(np.tile(nrm, (m, 1)))
        wts.append(np.full(m, w))
        sides.append(np.full(m, s, dtype=int))
    return BoundaryNodeSet(domain, np.vstack(chunks), np.vstack(norms),
                           np.concatenate(wts), np.concatenate(sides))
