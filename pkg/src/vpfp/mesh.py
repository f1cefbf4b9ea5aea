"""Phase-space grids and state containers.

The velocity domain is the symmetric interval [-v_max, v_max] discretized by
N_v + 1 nodes v_j = -v_max + j*dv, dv = 2*v_max/N_v, both endpoints included.
The spatial domain [0, L) is periodic with N_x nodes x_i = i*dx.  Distribution
values are stored row-major with velocity fastest-varying, so velocity kernels
stream contiguously for each spatial column.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadCount, NonFiniteSample, NonPositiveExtent

MIN_NV = 8
MIN_NX = 4


@dataclass(frozen=True, eq=False)
class VelocityGrid:
    """Truncated uniform velocity mesh, 1D or 2D (tensor product of one axis)."""

    v_max: float
    n_v: int
    dims: int = 1
    dv: float = field(init=False)
    nodes: np.ndarray = field(init=False, repr=False)
    midpoints: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.v_max <= 0:
            raise NonPositiveExtent(f"v_max must be positive, got {self.v_max}")
        if self.n_v < MIN_NV:
            raise BadCount(f"N_v must be >= {MIN_NV}, got {self.n_v}")
        if self.dims not in (1, 2):
            raise BadCount(f"velocity dims must be 1 or 2, got {self.dims}")
        dv = 2.0 * self.v_max / self.n_v
        nodes = -self.v_max + dv * np.arange(self.n_v + 1)
        object.__setattr__(self, "dv", dv)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "midpoints", 0.5 * (nodes[1:] + nodes[:-1]))

    @property
    def n_nodes(self) -> int:
        return self.n_v + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_nodes,) * self.dims

    @property
    def weight(self) -> float:
        """Quadrature weight of one velocity cell (dv in 1D, dv^2 in 2D)."""
        return self.dv**self.dims


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """Periodic spatial mesh on [0, L)."""

    length: float
    n_x: int
    dx: float = field(init=False)
    nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.length <= 0:
            raise NonPositiveExtent(f"L must be positive, got {self.length}")
        if self.n_x < MIN_NX:
            raise BadCount(f"N_x must be >= {MIN_NX}, got {self.n_x}")
        dx = self.length / self.n_x
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "nodes", dx * np.arange(self.n_x))

    def wrap(self, i):
        """Periodic index arithmetic."""
        return np.asarray(i) % self.n_x


@dataclass(frozen=True, eq=False)
class PhaseGrid:
    """Spatial grid (absent for homogeneous runs) plus velocity grid."""

    spatial: SpatialGrid | None
    velocity: VelocityGrid

    @property
    def homogeneous(self) -> bool:
        return self.spatial is None

    @property
    def shape(self) -> tuple[int, ...]:
        if self.spatial is None:
            return self.velocity.shape
        return (self.spatial.n_x,) + self.velocity.shape

    @property
    def cell_volume(self) -> float:
        """Phase-space quadrature weight dx * dv^dims (dv^dims if homogeneous)."""
        w = self.velocity.weight
        return w if self.spatial is None else w * self.spatial.dx


def build_phase_grid(length, n_x, v_max, n_v, dims) -> PhaseGrid:
    """Construct the phase grid for a run.

    dims selects the configuration: 0 homogeneous (velocity only, no spatial
    axis; length/n_x are ignored), 1 for 1dx-1dv, 2 for 1dx-2dv.
    """
    if dims not in (0, 1, 2):
        raise BadCount(f"dims must be 0, 1 or 2, got {dims}")
    vdims = 1 if dims == 0 else dims
    velocity = VelocityGrid(float(v_max), int(n_v), vdims)
    if dims == 0:
        return PhaseGrid(None, velocity)
    spatial = SpatialGrid(float(length), int(n_x))
    return PhaseGrid(spatial, velocity)


@dataclass
class DistState:
    """Distribution-function values on a phase grid at one time level."""

    values: np.ndarray
    grid: PhaseGrid
    t: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise BadCount(
                f"state shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def copy(self) -> "DistState":
        return DistState(self.values.copy(), self.grid, self.t)


@dataclass
class FieldState:
    """Electric field values (one component, along x) on the spatial mesh."""

    e: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.e = np.asarray(self.e, dtype=float)

    def copy(self) -> "FieldState":
        return FieldState(self.e.copy(), self.t)


def sample_on_grid(grid: PhaseGrid, initializer) -> DistState:
    """Evaluate a closed-form initializer pointwise at the grid nodes.

    The initializer receives broadcastable coordinate arrays: f(v) for
    homogeneous grids, f(x, v) for 1dx-1dv and f(x, vx, vy) for 1dx-2dv.
    """
    v = grid.velocity.nodes
    if grid.spatial is None:
        vals = np.asarray(initializer(v), dtype=float)
    else:
        x = grid.spatial.nodes
        if grid.velocity.dims == 1:
            vals = initializer(x[:, None], v[None, :])
        else:
            vals = initializer(x[:, None, None], v[None, :, None], v[None, None, :])
        vals = np.asarray(vals, dtype=float)
    vals = np.broadcast_to(vals, grid.shape).copy()
    if not np.isfinite(vals).all():
        raise NonFiniteSample("initializer produced non-finite values on the grid")
    return DistState(vals, grid, 0.0)


def maxwellian_1d(rho, u, T):
    """Closed-form Maxwellian rho/sqrt(2 pi T) exp(-(v-u)^2/(2T)) as a callable."""
    return lambda v: rho / np.sqrt(2.0 * np.pi * T) * np.exp(-((v - u) ** 2) / (2.0 * T))


def maxwellian_2d(rho, ux, uy, T):
    """Closed-form 2D Maxwellian rho/(2 pi T) exp(-|v-u|^2/(2T)) as a callable."""
    return lambda vx, vy: (
        rho / (2.0 * np.pi * T) * np.exp(-((vx - ux) ** 2 + (vy - uy) ** 2) / (2.0 * T))
    )
