"""Explicit stabilized Runge-Kutta-Chebyshev integrators.

RKC1 and RKC2 trade order for a real stability interval that grows like
s^2 with the stage count s, which makes them cheap integrators for the
diffusion-dominated collision operator.  The module provides the Chebyshev
machinery, coefficient tables, the stage recursions, stability functions,
an analytic spectral-radius bound, the stage-count selector, and the
adaptive step-size controller with its embedded local-error estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadStageCount, DegenerateDensity, NonFiniteState, StepUnderflow
from .mesh import VelocityGrid

DEFAULT_ETA = {"rkc1": 0.05, "rkc2": 0.15}


def cheb_eval(s: int, x):
    """Chebyshev polynomial of the first kind with first two derivatives.

    Returns (T_s(x), T_s'(x), T_s''(x)) via the three-term recurrence; works
    elementwise on arrays and on complex input.
    """
    x = np.asarray(x)
    one = np.ones_like(x)
    zero = np.zeros_like(x)
    if s == 0:
        return one, zero, zero
    T0, T1 = one, x
    d0, d1 = zero, one
    dd0, dd1 = zero, zero
    for _ in range(2, s + 1):
        T2 = 2.0 * x * T1 - T0
        d2 = 2.0 * T1 + 2.0 * x * d1 - d0
        dd2 = 4.0 * d1 + 2.0 * x * dd1 - dd0
        T0, T1, d0, d1, dd0, dd1 = T1, T2, d1, d2, dd1, dd2
    return T1, d1, dd1


def _cheb_table(s: int, x: float):
    """T_l(x), T_l'(x), T_l''(x) for l = 0..s at a scalar point."""
    T = np.empty(s + 1)
    d = np.empty(s + 1)
    dd = np.empty(s + 1)
    T[0], d[0], dd[0] = 1.0, 0.0, 0.0
    if s >= 1:
        T[1], d[1], dd[1] = x, 1.0, 0.0
    for j in range(2, s + 1):
        T[j] = 2.0 * x * T[j - 1] - T[j - 2]
        d[j] = 2.0 * T[j - 1] + 2.0 * x * d[j - 1] - d[j - 2]
        dd[j] = 4.0 * d[j - 1] + 2.0 * x * dd[j - 1] - dd[j - 2]
    return T, d, dd


@dataclass(frozen=True, eq=False)
class RkcCoeffs:
    """Per-(method, s, eta) coefficient tables.

    Stage arrays are indexed by stage number; entries below the first valid
    stage are zero.  boundary = (1 + w0)/w1 (RKC1) or (1 + w0)/w2 (RKC2) is
    the length of the real stability interval; c_eta = boundary/s**2 is the
    per-stage-squared constant used by the stage selector.
    """

    method: str
    s: int
    eta: float
    w0: float
    w1: float
    w2: float | None
    mu: np.ndarray
    nu: np.ndarray
    kappa: np.ndarray
    a: np.ndarray | None
    b: np.ndarray | None
    boundary: float
    c_eta: float


def rkc1_coeffs(s: int, eta: float = 0.05) -> RkcCoeffs:
    """First-order RKC coefficients: mu_1 = w1/w0, then the Chebyshev recursion weights."""
    if s < 2:
        raise BadStageCount(f"RKC1 needs s >= 2, got {s}")
    w0 = 1.0 + eta / s**2
    T, d, _ = _cheb_table(s, w0)
    w1 = T[s] / d[s]
    mu = np.zeros(s + 1)
    nu = np.zeros(s + 1)
    kappa = np.zeros(s + 1)
    mu[1] = w1 / w0
    for ell in range(2, s + 1):
        mu[ell] = 2.0 * w1 * T[ell - 1] / T[ell]
        nu[ell] = 2.0 * w0 * T[ell - 1] / T[ell]
        kappa[ell] = 1.0 - nu[ell]
    boundary = (1.0 + w0) / w1
    return RkcCoeffs("rkc1", s, eta, w0, w1, None, mu, nu, kappa, None, None,
                     boundary, boundary / s**2)


def rkc2_coeffs(s: int, eta: float = 0.15) -> RkcCoeffs:
    """Second-order RKC coefficients.

    b_l = T_l''(w0)/T_l'(w0)^2 with b_0 = b_1 = b_2, a_l = 1 - b_l T_l(w0),
    w2 = T_s'(w0)/T_s''(w0), and first-stage increment mu_1 = b_1 w2 so that
    the stage polynomials are exactly a_l + b_l T_l(w0 + w2 z).
    """
    if s < 2:
        raise BadStageCount(f"RKC2 needs s >= 2, got {s}")
    w0 = 1.0 + eta / s**2
    T, d, dd = _cheb_table(s, w0)
    w1 = T[s] / d[s]
    w2 = d[s] / dd[s]
    b = np.empty(s + 1)
    for ell in range(2, s + 1):
        b[ell] = dd[ell] / d[ell] ** 2
    b[0] = b[1] = b[2]
    a = 1.0 - b * T
    mu = np.zeros(s + 1)
    nu = np.zeros(s + 1)
    kappa = np.zeros(s + 1)
    mu[1] = b[1] * w2
    for ell in range(2, s + 1):
        mu[ell] = 2.0 * b[ell] * w2 / b[ell - 1]
        nu[ell] = 2.0 * b[ell] * w0 / b[ell - 1]
        kappa[ell] = -b[ell] / b[ell - 2]
    boundary = (1.0 + w0) / w2
    return RkcCoeffs("rkc2", s, eta, w0, w1, w2, mu, nu, kappa, a, b,
                     boundary, boundary / s**2)


_COEFF_CACHE: dict[tuple, RkcCoeffs] = {}


def get_coeffs(method: str, s: int, eta: float | None = None) -> RkcCoeffs:
    """Cached coefficient lookup; eta defaults to 0.05 (RKC1) / 0.15 (RKC2)."""
    if method not in DEFAULT_ETA:
        raise BadStageCount(f"unknown stabilized method {method!r}")
    if eta is None:
        eta = DEFAULT_ETA[method]
    key = (method, s, eta)
    if key not in _COEFF_CACHE:
        _COEFF_CACHE[key] = rkc1_coeffs(s, eta) if method == "rkc1" else rkc2_coeffs(s, eta)
    return _COEFF_CACHE[key]


def stability_function(method: str, s: int, eta: float, z):
    """Amplification factor of one step on y' = lambda y, z = lambda dt.

    RKC1: T_s(w0 + w1 z)/T_s(w0); RKC2: a_s + b_s T_s(w0 + w2 z).
    Accepts real or complex z, scalar or array.
    """
    c = get_coeffs(method, s, eta)
    if method == "rkc1":
        num, _, _ = cheb_eval(s, c.w0 + c.w1 * np.asarray(z))
        den, _, _ = cheb_eval(s, np.asarray(c.w0))
        return num / den
    num, _, _ = cheb_eval(s, c.w0 + c.w2 * np.asarray(z))
    return c.a[s] + c.b[s] * num


def rkc_step(coeffs: RkcCoeffs, f, dt: float, rhs, rhs0=None):
    """One RKC step; returns (f_new, n_rhs_evals).

    Implements the stage recursions verbatim; exactly s right-hand-side
    evaluations (s - 1 when rhs0 = rhs(f) is supplied).  Raises
    NonFiniteState when the result is not finite.
    """
    s = coeffs.s
    mu, nu, kappa = coeffs.mu, coeffs.nu, coeffs.kappa
    nev = 0
    if rhs0 is None:
        rhs0 = rhs(f)
        nev += 1
    # stage combinations in increment form (coefficients of each stage sum to
    # one, so the update is written as deviations; a zero rhs then reproduces
    # f bitwise and roundoff does not touch the constant mode)
    if coeffs.method == "rkc1":
        km2 = f
        km1 = f + mu[1] * dt * rhs0
        for ell in range(2, s + 1):
            k = km1 + kappa[ell] * (km2 - km1) + mu[ell] * dt * rhs(km1)
            nev += 1
            km2, km1 = km1, k
    else:
        a = coeffs.a
        km2 = f
        km1 = f + mu[1] * dt * rhs0
        for ell in range(2, s + 1):
            k = (
                f
                + kappa[ell] * (km2 - f)
                + nu[ell] * (km1 - f)
                + mu[ell] * dt * (rhs(km1) - a[ell - 1] * rhs0)
            )
            nev += 1
            km2, km1 = km1, k
    if not np.all(np.isfinite(km1)):
        raise NonFiniteState(f"non-finite state after RKC step (dt={dt}, s={s})")
    return km1, nev


def spectral_bound(grid: VelocityGrid, nu: float, T: float,
                   advection_scale: float = 0.0, order: int = 2,
                   safety: float = 1.05) -> float:
    """Analytic bound on |Re lambda| of the discrete collision operator.

    Diffusion part: 4 nu T/dv^2 per velocity axis for the three-point stencil,
    (14/3) nu T/dv^2 for the fourth-order five-point stencil; an optional
    advection_scale/dv term accounts for extra drift.  Multiplied by a 1.05
    safety factor.  Zero when nu = 0 (collisionless).
    """
    if nu == 0.0:
        return 0.0
    if T <= 0.0:
        raise DegenerateDensity("spectral bound needs T > 0")
    diff_const = 4.0 if order == 2 else 14.0 / 3.0
    lam = grid.dims * diff_const * nu * T / grid.dv**2 + abs(advection_scale) / grid.dv
    return safety * lam


def stage_select(dt: float, lam: float, c_eta: float) -> int:
    """Stage count s = round(sqrt((dt lam + 1.5)/c_eta) + 0.5), floored at 2."""
    s = int(math.floor(math.sqrt((dt * lam + 1.5) / c_eta) + 0.5 + 0.5))
    return max(2, s)


def select_stages(method: str, dt: float, lam: float, eta: float | None = None,
                  s_max: int = 200) -> int:
    """Fixed-point iteration of stage_select with the stage-dependent c_eta."""
    if not math.isfinite(lam):
        raise NonFiniteState("non-finite spectral bound in stage selection")
    s = 2
    for _ in range(8):
        c = get_coeffs(method, s, eta)
        s_new = min(s_max, stage_select(dt, lam, c.c_eta))
        if s_new == s:
            break
        s = s_new
    return s


@dataclass
class StepController:
    """Adaptive step-size state: tolerance, clamps and counters.

    The error measure is the RMS over grid nodes of est/(tol (1 + |f|));
    a step is accepted when it is <= 1 and the next step is scaled by
    safety * err^(-1/(p+1)) clamped to [shrink, growth].
    """

    tol: float
    dt0: float
    dt_min: float = 1e-12
    dt_max: float = math.inf
    safety: float = 0.8
    shrink: float = 0.1
    growth: float = 10.0
    accepted: int = 0
    rejected: int = 0
    n_rhs: int = 0
    underflow_limit: int = 10
    _consecutive_small: int = field(default=0, repr=False)

    def error_norm(self, est, f) -> float:
        scale = self.tol * (1.0 + np.abs(f))
        return float(np.sqrt(np.mean((est / scale) ** 2)))

    def factor(self, err: float, order: int) -> float:
        if err == 0.0:
            return self.growth
        return min(self.growth, max(self.shrink, self.safety * err ** (-1.0 / (order + 1.0))))

    def propose(self, dt: float, err: float, order: int) -> float:
        dt_new = dt * self.factor(err, order)
        if dt_new < self.dt_min:
            self._consecutive_small += 1
            if self._consecutive_small >= self.underflow_limit:
                raise StepUnderflow(
                    f"proposed dt {dt_new} below dt_min {self.dt_min} "
                    f"{self._consecutive_small} times in a row"
                )
            dt_new = self.dt_min
        else:
            self._consecutive_small = 0
        return min(dt_new, self.dt_max)


@dataclass
class StepRecord:
    """Per-attempt diagnostics of the adaptive loop."""

    t: float
    dt: float
    stages: int
    err: float
    accepted: bool
    n_rhs: int
    wall_time: float = 0.0


def rkc2_error_estimate(f_old, f_new, q_old, q_new, dt: float):
    """Embedded local-error estimate (1/15)[12(f^n - f^{n+1}) + 6 dt (Q^n + Q^{n+1})]."""
    return (12.0 * (f_old - f_new) + 6.0 * dt * (q_old + q_new)) / 15.0


def rk2_step(f, dt: float, rhs, rhs0=None):
    """Explicit midpoint step with its Euler-difference error estimate.

    Returns (f_new, est, k1, n_evals); est = dt (k2 - k1) is the gap to the
    embedded Euler solution.
    """
    nev = 0
    if rhs0 is None:
        rhs0 = rhs(f)
        nev += 1
    k2 = rhs(f + 0.5 * dt * rhs0)
    nev += 1
    f_new = f + dt * k2
    return f_new, dt * (k2 - rhs0), rhs0, nev


def adaptive_advance(controller: StepController, method: str, f0, rhs, t_end: float,
                     lam: float = 0.0, eta: float | None = None):
    """Advance y' = rhs(y) from t = 0 to t_end with adaptive steps.

    method is 'rkc1', 'rkc2' (stage count re-selected each step from lam via
    stage_select, embedded estimate, exponent 1/3) or 'rk2' (explicit midpoint
    with Euler-difference estimate, exponent 1/2).  Rejected steps repeat from
    the pre-step state.  Returns (f_final, records).
    """
    f = np.asarray(f0, dtype=float)
    t = 0.0
    dt = min(controller.dt0, controller.dt_max)
    records: list[StepRecord] = []
    q0 = None  # rhs at the current state, reused across rejections
    est_order = 2 if method == "rkc2" else 1
    tiny = 1e-12 * max(1.0, abs(t_end))

    while t < t_end - tiny:
        dt = min(dt, t_end - t)
        if q0 is None:
            q0 = rhs(f)
            controller.n_rhs += 1
        stages = 2
        try:
            if method == "rk2":
                f_try, est, _, nev = rk2_step(f, dt, rhs, rhs0=q0)
                q_new = None
            else:
                coeffs = get_coeffs(method, select_stages(method, dt, lam, eta), eta)
                stages = coeffs.s
                f_try, nev = rkc_step(coeffs, f, dt, rhs, rhs0=q0)
                q_new = rhs(f_try)
                nev += 1
                est = rkc2_error_estimate(f, f_try, q0, q_new, dt)
            with np.errstate(over="ignore", invalid="ignore"):
                err = controller.error_norm(est, f)
        except (NonFiniteState, DegenerateDensity):
            # the trial state went unphysical: reject and retry smaller
            err = math.inf
            nev = 1 if method == "rk2" else stages - 1
            f_try, q_new = None, None
        if not math.isfinite(err):
            err = math.inf
        controller.n_rhs += nev
        if err <= 1.0:
            f = f_try
            t += dt
            q0 = q_new  # None for rk2: recomputed at the new state next step
            controller.accepted += 1
            records.append(StepRecord(t, dt, stages, err, True, controller.n_rhs))
        else:
            controller.rejected += 1
            records.append(StepRecord(t, dt, stages, err, False, controller.n_rhs))
        dt = controller.propose(dt, err, est_order)
    return f, records
