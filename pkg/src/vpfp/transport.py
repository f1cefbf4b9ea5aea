"""Collisionless building blocks: spatial advection, field solves, velocity transport.

Spatial transport is solved exactly in time in Fourier space (the domain is
periodic); a periodic cubic-spline semi-Lagrangian path is kept for
cross-checks.  The Poisson solve drops the zero mode, so the returned field
always has zero spatial mean.  The Ampere update advances E from the current
carried by the RK2 midpoint stage, which is what makes the split scheme
conserve total (kinetic + electric) energy exactly.

Functions take plain arrays with the spatial axis first and velocity axes
last, matching the DistState storage order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .collisions import q2_apply
from .errors import DisplacementTooLarge, NonFiniteState, StencilTooSmall
from .mesh import PhaseGrid


@dataclass(frozen=True, eq=False)
class SpectralPlan:
    """Real-FFT wavenumbers for one periodic axis (k_m = 2 pi m / L, m >= 0)."""

    n: int
    length: float
    k: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        k = 2.0 * np.pi * np.fft.rfftfreq(self.n, d=self.length / self.n)
        object.__setattr__(self, "k", k)

    def forward(self, f, axis=0):
        return np.fft.rfft(f, axis=axis)

    def backward(self, fh, axis=0):
        return np.fft.irfft(fh, n=self.n, axis=axis)


_PLANS: dict[tuple[int, float], SpectralPlan] = {}


def get_plan(grid: PhaseGrid) -> SpectralPlan:
    sp = grid.spatial
    key = (sp.n_x, sp.length)
    if key not in _PLANS:
        _PLANS[key] = SpectralPlan(*key)
    return _PLANS[key]


def advect_x(f, dt: float, grid: PhaseGrid, method: str = "spectral") -> np.ndarray:
    """Exact-in-time solution of df/dt + v df/dx = 0 over one step.

    Spectral path multiplies mode m by exp(-i k_m v_j dt); the semi-Lagrangian
    path interpolates at x - v_j dt with a periodic cubic spline.
    """
    f = np.asarray(f, dtype=float)
    if method == "spectral":
        plan = get_plan(grid)
        v = grid.velocity.nodes
        fh = plan.forward(f, axis=0)
        shape = (plan.k.size,) + (1,) * (f.ndim - 1)
        kcol = plan.k.reshape(shape)
        vrow = v.reshape((1, v.size) + (1,) * (f.ndim - 2))
        return plan.backward(fh * np.exp(-1j * kcol * vrow * dt), axis=0)
    if method != "spline":
        raise ValueError(f"unknown advect_x method {method!r}")
    sp = grid.spatial
    x = sp.nodes
    xe = np.append(x, sp.length)
    out = np.empty_like(f)
    v = grid.velocity.nodes
    for j, vj in enumerate(v):
        xq = (x - vj * dt) % sp.length
        col = f[:, j] if f.ndim == 2 else f[:, j, :]
        fe = np.concatenate([col, col[:1]], axis=0)
        cs = CubicSpline(xe, fe, axis=0, bc_type="periodic")
        if f.ndim == 2:
            out[:, j] = cs(xq)
        else:
            out[:, j, :] = cs(xq)
    return out


def density(f, grid: PhaseGrid) -> np.ndarray:
    """n_i = dv^dims sum_j f_ij with uniform node weights."""
    f = np.asarray(f, dtype=float)
    vaxes = tuple(range(1, f.ndim))
    return f.sum(axis=vaxes) * grid.velocity.weight


def poisson_field(f, grid: PhaseGrid, t: float = 0.0) -> np.ndarray:
    """Spectral field solve dE/dx = n - 1 against the neutralizing background.

    This sign pairs with the +E df/dv force term and the E' = E - dt J Ampere
    update (the closure that yields Landau-damped plasma oscillations).  The
    zero mode is dropped, so the returned field always has zero spatial mean.
    """
    plan = get_plan(grid)
    nh = plan.forward(density(f, grid) - 1.0, axis=0)
    eh = np.zeros_like(nh)
    eh[1:] = nh[1:] / (1j * plan.k[1:])
    return plan.backward(eh, axis=0)


def current(f, grid: PhaseGrid) -> np.ndarray:
    """x-directed current J_i = dv^dims sum_j v_xj f_ij."""
    f = np.asarray(f, dtype=float)
    v = grid.velocity.nodes
    if grid.velocity.dims == 1:
        return (f * v[None, :]).sum(axis=-1) * grid.velocity.weight
    return (f * v[None, :, None]).sum(axis=(-2, -1)) * grid.velocity.weight


def ampere_update(e, f_mid, dt: float, grid: PhaseGrid) -> np.ndarray:
    """E^{n+1} = E^n - dt J(f_mid), midpoint-rule quadrature of the Ampere law."""
    return np.asarray(e, dtype=float) - dt * current(f_mid, grid)


def upwind_dv(f, sign, grid: PhaseGrid) -> np.ndarray:
    """Third-order upwind-biased velocity derivative (1dv), exact for cubics.

    The biased side follows sign(E) per spatial node; one-sided closures are
    used at the two nodes nearest each boundary.
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    if n < 6:
        raise StencilTooSmall("upwind derivative needs at least 6 velocity nodes")
    h6 = 6.0 * grid.velocity.dv

    left = np.empty_like(f)
    left[..., 2:-1] = (f[..., :-3] - 6.0 * f[..., 1:-2] + 3.0 * f[..., 2:-1]
                       + 2.0 * f[..., 3:]) / h6
    left[..., 1] = (-2.0 * f[..., 0] - 3.0 * f[..., 1] + 6.0 * f[..., 2]
                    - f[..., 3]) / h6
    right = np.empty_like(f)
    right[..., 1:-2] = (-2.0 * f[..., :-3] - 3.0 * f[..., 1:-2] + 6.0 * f[..., 2:-1]
                        - f[..., 3:]) / h6
    right[..., -2] = (f[..., -4] - 6.0 * f[..., -3] + 3.0 * f[..., -2]
                      + 2.0 * f[..., -1]) / h6
    for d in (left, right):
        d[..., 0] = (-11.0 * f[..., 0] + 18.0 * f[..., 1] - 9.0 * f[..., 2]
                     + 2.0 * f[..., 3]) / h6
        d[..., -1] = (11.0 * f[..., -1] - 18.0 * f[..., -2] + 9.0 * f[..., -3]
                      - 2.0 * f[..., -4]) / h6

    sign = np.asarray(sign, dtype=float)
    if sign.ndim == 0:
        return left if sign >= 0 else right
    return np.where(sign[..., None] >= 0.0, left, right)


def spectral_dx(f, grid: PhaseGrid) -> np.ndarray:
    """Spectral x-derivative along axis 0."""
    plan = get_plan(grid)
    fh = plan.forward(np.asarray(f, dtype=float), axis=0)
    shape = (plan.k.size,) + (1,) * (f.ndim - 1)
    return plan.backward(1j * plan.k.reshape(shape) * fh, axis=0)


def advect_v_sl(f, e, dt: float, grid: PhaseGrid) -> np.ndarray:
    """Semi-Lagrangian velocity transport: interpolate at v_x - E_i dt per column.

    Cubic splines with zero extension outside the truncated domain.  In 2D
    velocity only the x-velocity axis is shifted (the field is along x).
    """
    f = np.asarray(f, dtype=float)
    e = np.asarray(e, dtype=float)
    vg = grid.velocity
    v = vg.nodes
    disp = e * dt
    if np.max(np.abs(disp)) >= 2.0 * vg.v_max:
        raise DisplacementTooLarge("|E dt| exceeds the velocity domain width")
    out = np.empty_like(f)
    for i in range(f.shape[0]):
        if disp[i] == 0.0:
            out[i] = f[i]
            continue
        q = v - disp[i]
        inside = (q >= v[0]) & (q <= v[-1])
        cs = CubicSpline(v, f[i], axis=0, extrapolate=False)
        vals = cs(q)
        vals[~inside] = 0.0  # zero extension; rows for 2D velocity slabs
        out[i] = vals
    return out


def rk2_midpoint_distribution(f, e, dt: float, grid: PhaseGrid, nu: float = 0.0,
                              collision=None, include_transport: bool = False) -> np.ndarray:
    """First (half) stage of the explicit midpoint rule, f^(2) = f^n + dt/2 F^(1)."""
    return np.asarray(f, dtype=float) + 0.5 * dt * _vlasov_rhs(
        f, e, grid, nu, collision, include_transport
    )


def _vlasov_rhs(f, e, grid, nu, collision, include_transport):
    e = np.asarray(e, dtype=float)
    out = -e[:, None] * upwind_dv(f, e, grid)
    if include_transport:
        out -= grid.velocity.nodes[None, :] * spectral_dx(f, grid)
    if nu != 0.0:
        q = collision if collision is not None else q2_apply
        out += nu * q(f, grid.velocity)
    return out


def rk2_vlasov_stage(f, e_n, e_mid, dt: float, grid: PhaseGrid, nu: float = 0.0,
                     collision=None, include_transport: bool = False,
                     f_mid=None) -> np.ndarray:
    """Explicit midpoint step of the (possibly reduced) Vlasov equation.

    F = -v df/dx (if include_transport) - E df/dv + nu Q(f), with E^(1) = e_n
    and E^(2) = e_mid.  Inside the split scheme only the E df/dv term is
    advanced here; e_mid must be the average of E^n and the Ampere-updated
    E^{n+1}.  A precomputed midpoint stage can be passed as f_mid.
    """
    f = np.asarray(f, dtype=float)
    if f_mid is None:
        f_mid = rk2_midpoint_distribution(f, e_n, dt, grid, nu, collision, include_transport)
    out = f + dt * _vlasov_rhs(f_mid, e_mid, grid, nu, collision, include_transport)
    if not np.all(np.isfinite(out)):
        raise NonFiniteState("non-finite state after RK2 velocity stage")
    return out


def velocity_rk2_ampere(f, e, dt: float, grid: PhaseGrid):
    """Energy-exact velocity/field substep: RK2 on E df/dv with the averaged field.

    Returns (f', E') where E' comes from the Ampere update on the midpoint
    stage and the final stage uses E_mid = (E + E')/2, so the discrete
    kinetic-electric exchange cancels exactly.
    """
    f_mid = rk2_midpoint_distribution(f, e, dt, grid)
    e_new = ampere_update(e, f_mid, dt, grid)
    e_mid = 0.5 * (np.asarray(e, dtype=float) + e_new)
    f_new = rk2_vlasov_stage(f, e, e_mid, dt, grid, f_mid=f_mid)
    return f_new, e_new
