"""Shared closed-form states and independent oracles for the test suite.

The oracles here never call the code paths they check: continuum moments come
from scipy quadrature of the closed forms, the collision operator from the
hand-differentiated drift-diffusion formula, extremal eigenvalues from power
iteration.
"""

import numpy as np
import pytest
from scipy.integrate import quad

from vpfp.mesh import VelocityGrid


def gauss(rho, u, T):
    """Closed-form 1D Maxwellian as a callable."""
    return lambda v: rho / np.sqrt(2.0 * np.pi * T) * np.exp(-((v - u) ** 2) / (2.0 * T))


def mixture(components):
    """Sum of Maxwellians; components = [(rho, u, T), ...]."""
    parts = [gauss(*c) for c in components]
    return lambda v: sum(p(v) for p in parts)


HOM_MIX = ((0.9, 0.0, 0.2), (0.05, 4.0, 1.0), (0.05, -4.0, 1.0))
FIG6_MIX = ((0.1, 4.0, 1.0), (0.9, 0.0, 0.2))


def quad_moments(components, vmax=np.inf):
    """Continuum (n, u, T) of a Maxwellian mixture by adaptive quadrature."""
    f = mixture(components)
    lim = dict(limit=400)
    n = quad(f, -vmax, vmax, **lim)[0] if np.isfinite(vmax) else \
        quad(f, -np.inf, np.inf, **lim)[0]
    lo, hi = (-vmax, vmax) if np.isfinite(vmax) else (-np.inf, np.inf)
    u = quad(lambda v: v * f(v), lo, hi, **lim)[0] / n
    T = quad(lambda v: (v - u) ** 2 * f(v), lo, hi, **lim)[0] / n
    return n, u, T


def analytic_fokker_planck(v, components):
    """Continuum Q(f) = d/dv((v - u_f) f + T_f df/dv) for a Maxwellian mixture.

    Uses the exact mixture moments and the hand-differentiated Gaussian
    derivatives; independent of the discrete operators.
    """
    n = sum(c[0] for c in components)
    u = sum(c[0] * c[1] for c in components) / n
    second = sum(c[0] * (c[2] + c[1] ** 2) for c in components) / n
    T = second - u**2
    out = np.zeros_like(np.asarray(v, dtype=float))
    for rho, m, th in components:
        g = gauss(rho, m, th)(v)
        gp = -(v - m) / th * g
        gpp = ((v - m) ** 2 / th**2 - 1.0 / th) * g
        out += g + (v - u) * gp + T * gpp
    return out


def power_iteration_extreme(a, iters=2000):
    """Largest-|eigenvalue| estimate for a real matrix; deterministic start."""
    n = a.shape[0]
    x = np.ones(n) + 1e-3 * np.sin(np.arange(n))
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(iters):
        y = a @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        lam = x @ y
        x = y / norm
    return abs(lam)


@pytest.fixture(scope="session")
def hom_grid():
    return VelocityGrid(12.0, 256, 1)


@pytest.fixture(scope="session")
def hom_state(hom_grid):
    return mixture(HOM_MIX)(hom_grid.nodes)


def loglog_slope(x, y):
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])
