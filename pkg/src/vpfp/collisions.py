"""Conservative velocity discretizations of the Fokker-Planck operator.

The drift-diffusion operator Q(f) = d/dv((v - u_f) f + T_f df/dv) is
discretized in flux form with staggered interface moments, so that discrete
mass is conserved exactly on the truncated domain (zero flux at the two
outermost interfaces) and momentum/energy are conserved up to the boundary
values of f.  A fourth-order variant, an algebraically equivalent L2-form,
and the 2D-velocity extension are provided.

All operations are pure and vectorized: f may carry arbitrary leading axes
(spatial columns), the velocity axis (or the two velocity axes in 2D) comes
last.  drift_shift adds a per-column offset to the drift velocity, which is
how the E-field transport is folded into the collision operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDensity, EquilibriumSingularity, StencilTooSmall
from .mesh import VelocityGrid

MIN_NV_Q4 = 8


@dataclass
class StaggeredMoments:
    """Density, mean velocity and temperature from interface-averaged f.

    u has one trailing component per velocity dimension in 2D; n and T are
    scalars (or arrays over the leading axes of f).
    """

    n: np.ndarray
    u: np.ndarray
    T: np.ndarray


def _check_positive(n, T):
    if np.any(n <= 0.0):
        raise DegenerateDensity("nonpositive density")
    if np.any(T <= 0.0):
        raise DegenerateDensity("nonpositive temperature")


def staggered_moments(f, grid: VelocityGrid) -> StaggeredMoments:
    """Moments built from arithmetic interface means f_{j+1/2} = (f_j + f_{j+1})/2.

    1D:  n = dv sum f_j,  n u = dv sum v_{j+1/2} f_{j+1/2},
         n T = dv sum (v_{j+1/2} - u)^2 f_{j+1/2}.
    2D:  per-axis staggered sums with the 1/2 factor in 2 n T.
    """
    f = np.asarray(f, dtype=float)
    dv = grid.dv
    vh = grid.midpoints
    if grid.dims == 1:
        n = f.sum(axis=-1) * dv
        fh = 0.5 * (f[..., 1:] + f[..., :-1])
        if np.any(n <= 0.0):
            raise DegenerateDensity("nonpositive density")
        u = (vh * fh).sum(axis=-1) * dv / n
        T = ((vh - np.asarray(u)[..., None]) ** 2 * fh).sum(axis=-1) * dv / n
        _check_positive(n, T)
        return StaggeredMoments(n, u, T)

    w = grid.weight
    n = f.sum(axis=(-2, -1)) * w
    if np.any(n <= 0.0):
        raise DegenerateDensity("nonpositive density")
    fhx = 0.5 * (f[..., 1:, :] + f[..., :-1, :])
    fhy = 0.5 * (f[..., :, 1:] + f[..., :, :-1])
    ux = (vh[:, None] * fhx).sum(axis=(-2, -1)) * w / n
    uy = (vh[None, :] * fhy).sum(axis=(-2, -1)) * w / n
    Tx = ((vh[:, None] - np.asarray(ux)[..., None, None]) ** 2 * fhx).sum(axis=(-2, -1)) * w
    Ty = ((vh[None, :] - np.asarray(uy)[..., None, None]) ** 2 * fhy).sum(axis=(-2, -1)) * w
    T = (Tx + Ty) / (2.0 * n)
    _check_positive(n, T)
    u = np.stack(np.broadcast_arrays(ux, uy), axis=-1)
    return StaggeredMoments(n, u, T)


def _breve_interface(f):
    """Fourth-order interface reconstruction; arithmetic-mean fallback at the ends."""
    fb = np.empty(f.shape[:-1] + (f.shape[-1] - 1,), dtype=float)
    fb[..., 1:-1] = (
        -f[..., :-3] + 9.0 * f[..., 1:-2] + 9.0 * f[..., 2:-1] - f[..., 3:]
    ) / 16.0
    fb[..., 0] = 0.5 * (f[..., 0] + f[..., 1])
    fb[..., -1] = 0.5 * (f[..., -1] + f[..., -2])
    return fb


def breve_moments(f, grid: VelocityGrid) -> StaggeredMoments:
    """Fourth-order staggered moments (1D only).

    Same sums as staggered_moments but with the fourth-order interface values;
    the mean velocity carries the 1/n factor so that n u = dv sum v_{j+1/2}
    f_{j+1/2}, consistent with the second-order definition.
    """
    if grid.dims != 1:
        raise StencilTooSmall("fourth-order moments are 1D only")
    f = np.asarray(f, dtype=float)
    dv = grid.dv
    vh = grid.midpoints
    n = f.sum(axis=-1) * dv
    if np.any(n <= 0.0):
        raise DegenerateDensity("nonpositive density")
    fb = _breve_interface(f)
    u = (vh * fb).sum(axis=-1) * dv / n
    T = ((vh - np.asarray(u)[..., None]) ** 2 * fb).sum(axis=-1) * dv / n
    _check_positive(n, T)
    return StaggeredMoments(n, u, T)


def discrete_maxwellian(n, u, T, grid: VelocityGrid) -> np.ndarray:
    """Maxwellian with prescribed moments sampled at the grid nodes.

    1D: n/sqrt(2 pi T) exp(-(v_j - u)^2/(2T)); 2D: product form with
    normalization n/(2 pi T), u = (u_x, u_y).
    """
    n = np.asarray(n, dtype=float)
    T = np.asarray(T, dtype=float)
    _check_positive(n, T)
    v = grid.nodes
    if grid.dims == 1:
        u = np.asarray(u, dtype=float)
        arg = (v - u[..., None]) ** 2 / (2.0 * T[..., None])
        return n[..., None] / np.sqrt(2.0 * np.pi * T[..., None]) * np.exp(-arg)
    u = np.asarray(u, dtype=float)
    ux, uy = u[..., 0], u[..., 1]
    r2 = (v[:, None] - ux[..., None, None]) ** 2 + (v[None, :] - uy[..., None, None]) ** 2
    Tb = T[..., None, None]
    return n[..., None, None] / (2.0 * np.pi * Tb) * np.exp(-r2 / (2.0 * Tb))


def _interface_flux(f, grid, u, T):
    """Second-order flux F_{j+1/2} = f_{j+1/2}(v_{j+1/2} - u) + T/dv (f_{j+1} - f_j)."""
    dv = grid.dv
    fh = 0.5 * (f[..., 1:] + f[..., :-1])
    w = grid.midpoints - np.asarray(u)[..., None]
    return fh * w + (np.asarray(T)[..., None] / dv) * (f[..., 1:] - f[..., :-1])


def _flux_divergence(flux, dv):
    """Q_j = (F_{j+1/2} - F_{j-1/2})/dv with zero flux at the outermost interfaces."""
    return np.diff(flux, axis=-1, prepend=0.0, append=0.0) / dv


def q2_frozen(f, grid: VelocityGrid, u, T) -> np.ndarray:
    """Second-order operator with frozen drift u and temperature T (linear in f)."""
    return _flux_divergence(_interface_flux(f, grid, u, T), grid.dv)


def q2_apply(f, grid: VelocityGrid, drift_shift=0.0) -> np.ndarray:
    """Second-order conservative Fokker-Planck operator (standard form).

    drift_shift offsets the drift velocity, u <- u + drift_shift, realizing
    the combined field-collision operator; moments are still taken from f.
    """
    m = staggered_moments(f, grid)
    return q2_frozen(f, grid, m.u + drift_shift, m.T)


def interface_maxwellian(f, grid: VelocityGrid) -> np.ndarray:
    """Interface weights that make the L2-form match the standard form.

    Raises EquilibriumSingularity when any denominator f_{j+1} M_j - f_j M_{j+1}
    is exactly zero (f locally proportional to its Maxwellian, e.g. underflowed
    tails or equilibrium).
    """
    f = np.asarray(f, dtype=float)
    m = staggered_moments(f, grid)
    M = discrete_maxwellian(m.n, m.u, m.T, grid)
    den = f[..., 1:] * M[..., :-1] - f[..., :-1] * M[..., 1:]
    if np.any(den == 0.0):
        raise EquilibriumSingularity("interface denominator vanished")
    dv = grid.dv
    fh = 0.5 * (f[..., 1:] + f[..., :-1])
    w = grid.midpoints - np.asarray(m.u)[..., None]
    MM = M[..., 1:] * M[..., :-1]
    T = np.asarray(m.T)[..., None]
    return (dv / T) * MM * fh * w / den + MM * (f[..., 1:] - f[..., :-1]) / den


def q2_l2form(f, grid: VelocityGrid) -> np.ndarray:
    """Second-order operator in L2 form; equals q2_apply nodewise by construction.

    Used for entropy diagnostics only; production stepping uses the standard
    form, which has no equilibrium singularity.
    """
    f = np.asarray(f, dtype=float)
    m = staggered_moments(f, grid)
    M = discrete_maxwellian(m.n, m.u, m.T, grid)
    if np.any(M == 0.0):
        raise EquilibriumSingularity("Maxwellian underflowed to zero at some node")
    Mt = interface_maxwellian(f, grid)
    g = f / M
    dv = grid.dv
    G = (np.asarray(m.T)[..., None] / dv) * Mt * (g[..., 1:] - g[..., :-1])
    return _flux_divergence(G, dv)


def q4_apply(f, grid: VelocityGrid, drift_shift=0.0) -> np.ndarray:
    """Fourth-order conservative Fokker-Planck operator (1D).

    Combines the fourth-order finite-volume flux with the cell-average to
    point-value correction, written as a single flux difference so that mass
    conservation stays exact.  The two interfaces nearest each boundary fall
    back to the second-order flux; the correction uses the second-order
    operator values throughout.
    """
    if grid.dims != 1:
        raise StencilTooSmall("q4_apply is 1D only; use q2d_apply for 2D velocity")
    if grid.n_v < MIN_NV_Q4:
        raise StencilTooSmall(f"fourth-order scheme needs N_v >= {MIN_NV_Q4}")
    f = np.asarray(f, dtype=float)
    dv = grid.dv
    vh = grid.midpoints

    m2 = staggered_moments(f, grid)
    u2 = m2.u + drift_shift
    F2 = _interface_flux(f, grid, u2, m2.T)
    Q2 = _flux_divergence(F2, dv)

    mb = breve_moments(f, grid)
    ub = np.asarray(mb.u + drift_shift)
    fb = _breve_interface(f)
    F4 = np.empty_like(F2)
    # interior interfaces j+1/2, j = 1..N_v-2: five-point drift/diffusion flux
    F4[..., 1:-1] = (vh[1:-1] - ub[..., None]) * fb[..., 1:-1] + np.asarray(mb.T)[
        ..., None
    ] * (f[..., :-3] - 27.0 * f[..., 1:-2] + 27.0 * f[..., 2:-1] - f[..., 3:]) / (24.0 * dv)
    F4[..., 0] = F2[..., 0]
    F4[..., -1] = F2[..., -1]

    # point-value correction folded into the flux: H = F4 - (dv/24)(Q_{j+1} - Q_j)
    H = F4 - (dv / 24.0) * (Q2[..., 1:] - Q2[..., :-1])
    return _flux_divergence(H, dv)


def q2d_apply(f, grid: VelocityGrid, drift_shift=(0.0, 0.0)) -> np.ndarray:
    """Second-order operator in 2D velocity: sum of the two per-axis stencils.

    A single scalar temperature couples the axes; zero boundary fluxes on all
    four edges.  drift_shift is an (sx, sy) pair, broadcastable per column.
    """
    if grid.dims != 2:
        raise StencilTooSmall("q2d_apply requires a 2D velocity grid")
    f = np.asarray(f, dtype=float)
    m = staggered_moments(f, grid)
    dv = grid.dv
    vh = grid.midpoints
    T = np.asarray(m.T)[..., None, None]
    sx, sy = drift_shift
    ux = np.asarray(m.u[..., 0] + sx)[..., None, None]
    uy = np.asarray(m.u[..., 1] + sy)[..., None, None]

    fhx = 0.5 * (f[..., 1:, :] + f[..., :-1, :])
    Fx = fhx * (vh[:, None] - ux) + (T / dv) * (f[..., 1:, :] - f[..., :-1, :])
    Qx = np.diff(Fx, axis=-2, prepend=0.0, append=0.0) / dv

    fhy = 0.5 * (f[..., :, 1:] + f[..., :, :-1])
    Fy = fhy * (vh[None, :] - uy) + (T / dv) * (f[..., :, 1:] - f[..., :, :-1])
    Qy = np.diff(Fy, axis=-1, prepend=0.0, append=0.0) / dv
    return Qx + Qy


def assemble_frozen_operator(n, u, T, nu, grid: VelocityGrid) -> np.ndarray:
    """Dense matrix A with A f = nu * Q(f) at frozen (u, T), for eigenvalue studies.

    The dv-weighted column sums vanish (mass-conservation column property).
    """
    _check_positive(np.asarray(n, dtype=float), np.asarray(T, dtype=float))
    if nu <= 0:
        raise DegenerateDensity("collision rate must be positive for the frozen operator")
    if grid.dims != 1:
        raise StencilTooSmall("frozen operator export is 1D only")
    eye = np.eye(grid.n_nodes)
    # row k of the batched apply is Q(e_k), i.e. the k-th column of A
    return nu * q2_frozen(eye, grid, float(u), float(T)).T


def gershgorin_interval(a: np.ndarray) -> tuple[float, float]:
    """Real-part bounds from column Gershgorin discs of a real matrix."""
    a = np.asarray(a, dtype=float)
    d = np.diag(a)
    radius = np.abs(a).sum(axis=0) - np.abs(d)
    return float(np.min(d - radius)), float(np.max(d + radius))
