"""Time-loop orchestration: splittings, adaptive control, scenario catalog.

Three inhomogeneous splittings are provided.  sl-rkc folds the velocity
transport into the collision drift (u <- u + E/nu) and re-solves Poisson each
step; sl-rk2-rkc advances the E df/dv term with the energy-exact RK2/Ampere
substep and solves Poisson only once at t = 0; strang-2dv is the symmetric
three-operator composition used for the 2D-velocity runs.  Spatial transport
half-steps wrap every composition.

The adaptive controller estimates the local error on the collision substep
only; a rejected step restores the pre-step (f, E, t) bitwise.  Runs are
deterministic: identical scenarios produce identical diagnostics.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import quad

from . import diagnostics as diag
from .collisions import q2_apply, q2d_apply, q4_apply, staggered_moments
from .errors import DegenerateDensity, NonFiniteState, UnknownScenario
from .mesh import DistState, FieldState, PhaseGrid, build_phase_grid, sample_on_grid
from .rkc import (StepController, StepRecord, get_coeffs, rk2_step, rkc2_error_estimate,
                  rkc_step, select_stages, spectral_bound)
from .transport import advect_x, advect_v_sl, poisson_field, velocity_rk2_ampere

SPLITTINGS = ("homogeneous", "sl-rkc", "sl-rk2-rkc", "strang-2dv")
INTEGRATORS = ("rkc1", "rkc2", "rk2")

# explicit midpoint + third-order upwind velocity derivative is linearly
# stable up to |E| dt/dv ~ 0.874; sub-cycle with a margin below that
VELOCITY_CFL_SAFE = 0.8


@dataclass
class Scenario:
    """Full description of one run; built-in names carry the paper's test parameters."""

    name: str
    dims: int
    v_max: float
    n_v: int
    init: str
    length: float = 0.0
    n_x: int = 0
    nu: float = 0.0
    init_params: dict = field(default_factory=dict)
    splitting: str = "homogeneous"
    integrator: str = "rkc2"
    order: int = 2
    dt: float | None = None
    tol: float | None = None
    dt0: float | None = None
    t_end: float = 0.0
    cadence: float = 1.0
    eta: float | None = None
    stages: int | None = None

    @property
    def adaptive(self) -> bool:
        return self.dt is None

    def validate(self) -> None:
        if self.splitting not in SPLITTINGS:
            raise ValueError(f"unknown splitting {self.splitting!r}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.init not in INITIALIZERS:
            raise ValueError(f"unknown initializer {self.init!r}")
        expected = {"homogeneous": 0, "sl-rkc": 1, "sl-rk2-rkc": 1, "strang-2dv": 2}
        if self.dims != expected[self.splitting]:
            raise ValueError(f"splitting {self.splitting!r} needs dims={expected[self.splitting]}")
        if self.order not in (2, 4):
            raise ValueError("collision order must be 2 or 4")
        if self.order == 4 and self.dims == 2:
            raise ValueError("fourth-order collisions are not available in 2D velocity")
        if self.dims >= 1 and self.integrator == "rk2" and self.splitting != "strang-2dv":
            raise ValueError("rk2 collision integrator is only used in strang-2dv")
        if self.dt is not None and (self.tol is not None or self.dt0 is not None):
            raise ValueError("give either a fixed dt or (tol, dt0), not both")
        if self.dt is None:
            if self.tol is None or self.dt0 is None:
                raise ValueError("adaptive runs need tol and dt0")
            if self.nu == 0.0:
                raise ValueError("adaptive stepping needs nu > 0 (the estimator lives "
                                 "on the collision substep)")
            if self.splitting == "strang-2dv":
                raise ValueError("strang-2dv runs use a fixed dt")
        if self.t_end < 0 or self.cadence <= 0:
            raise ValueError("t_end must be >= 0 and cadence > 0")

    def build_grid(self) -> PhaseGrid:
        return build_phase_grid(self.length, self.n_x, self.v_max, self.n_v, self.dims)

    def initializer(self):
        return INITIALIZERS[self.init](self)


# ---------------------------------------------------------------------------
# initial conditions (closed forms from the test catalog)

def _gauss1(rho, u, T):
    return lambda v: rho / np.sqrt(2.0 * np.pi * T) * np.exp(-((v - u) ** 2) / (2.0 * T))


def _gauss2(rho, ux, uy, T):
    return lambda vx, vy: rho / (2.0 * np.pi * T) * np.exp(
        -((vx - ux) ** 2 + (vy - uy) ** 2) / (2.0 * T))


def _init_hom_mix(sc: Scenario):
    p = {"alpha": 0.9, "t_cold": 0.2, **sc.init_params}
    a, tc = p["alpha"], p["t_cold"]
    parts = [_gauss1(a, 0.0, tc), _gauss1((1 - a) / 2, 4.0, 1.0), _gauss1((1 - a) / 2, -4.0, 1.0)]
    return lambda v: sum(g(v) for g in parts)


def _init_landau(sc: Scenario):
    p = {"eps": 1e-3, "k": 0.5, **sc.init_params}
    maxw = _gauss1(1.0, 0.0, 1.0)
    return lambda x, v: maxw(v) * (1.0 + p["eps"] * np.cos(p["k"] * x))


def _init_bump_two_beam(sc: Scenario):
    p = {"alpha": 0.9, "t_cold": 0.2, "beta": 0.5, "k": 0.5, "gamma": 10, **sc.init_params}
    a, g = p["alpha"], p["gamma"]
    rho_h = quad(lambda v: v**g * np.exp(-v**2 / 2) / np.sqrt(2 * np.pi),
                 -sc.v_max, sc.v_max, limit=200)[0]
    f_c = _gauss1(1.0, 0.0, p["t_cold"])

    def f_h(v):
        return v**g * np.exp(-(v**2) / 2.0) / (rho_h * np.sqrt(2.0 * np.pi))

    return lambda x, v: (a * f_c(v) + (1 - a) * f_h(v)) * (1.0 + p["beta"] * np.cos(p["k"] * x))


def _init_valentini(sc: Scenario):
    p = {"n1": 0.97, "n2": 0.03, "u": 4.0, "eps": 0.00056, **sc.init_params}
    k = p.get("k", 2.0 * np.pi / sc.length)
    parts = [_gauss1(p["n1"], 0.0, 1.0),
             _gauss1(p["n2"] / 2, p["u"], 0.2),
             _gauss1(p["n2"] / 2, -p["u"], 0.2)]
    return lambda x, v: sum(g(v) for g in parts) * (1.0 + p["eps"] * np.cos(k * x))


def _init_landau_2dv(sc: Scenario):
    p = {"eps": 1e-4, "k": 0.3, **sc.init_params}
    maxw = _gauss2(1.0, 0.0, 0.0, 1.0)
    return lambda x, vx, vy: maxw(vx, vy) * (1.0 + p["eps"] * np.cos(p["k"] * x))


def _init_beams_2dv(sc: Scenario):
    p = {"alpha": 0.5, "eps": 0.01, "k": 0.5, **sc.init_params}
    a = p["alpha"]
    beams = [_gauss2(1.0, sx * 3.0, sy * 3.0, 0.5) for sx in (1, -1) for sy in (1, -1)]
    core = _gauss2(1.0, 0.0, 0.0, 1.0)

    def f0(x, vx, vy):
        f = a * core(vx, vy)
        for b in beams:
            f = f + (1 - a) / 4.0 * b(vx, vy)
        return f * (1.0 + p["eps"] * np.cos(p["k"] * x))

    return f0


INITIALIZERS = {
    "hom-mix": _init_hom_mix,
    "landau": _init_landau,
    "bump-two-beam": _init_bump_two_beam,
    "valentini": _init_valentini,
    "landau-2dv": _init_landau_2dv,
    "beams-2dv": _init_beams_2dv,
}


def _catalog() -> dict[str, Scenario]:
    two_pi = 2.0 * np.pi
    return {
        "hom-relax": Scenario(
            name="hom-relax", dims=0, v_max=12.0, n_v=256, nu=0.1, init="hom-mix",
            splitting="homogeneous", integrator="rkc2", tol=1e-6, dt0=1e-3,
            t_end=1000.0, cadence=1.0),
        "landau-1d": Scenario(
            name="landau-1d", dims=1, length=2.0 * two_pi, n_x=128, v_max=12.0, n_v=256,
            nu=0.0, init="landau", splitting="sl-rk2-rkc", integrator="rkc2",
            dt=0.1, t_end=60.0, cadence=0.1),
        "bump-2beam": Scenario(
            name="bump-2beam", dims=1, length=2.0 * two_pi, n_x=128, v_max=14.0, n_v=256,
            nu=0.1, init="bump-two-beam", splitting="sl-rk2-rkc", integrator="rkc2",
            tol=1e-6, dt0=1e-3, t_end=200.0, cadence=1.0),
        "bump-valentini": Scenario(
            name="bump-valentini", dims=1, length=22.0, n_x=128, v_max=14.0, n_v=256,
            nu=0.0, init="valentini", splitting="sl-rk2-rkc", integrator="rkc2",
            dt=1.0, t_end=220.0, cadence=1.0),
        "landau-2dv": Scenario(
            name="landau-2dv", dims=2, length=two_pi / 0.3, n_x=32, v_max=7.0, n_v=64,
            nu=0.0, init="landau-2dv", splitting="strang-2dv", integrator="rkc2",
            dt=0.3, t_end=40.0, cadence=0.3),
        "beams-2dv": Scenario(
            name="beams-2dv", dims=2, length=2.0 * two_pi, n_x=32, v_max=18.0, n_v=96,
            nu=0.1, init="beams-2dv", splitting="strang-2dv", integrator="rkc2",
            dt=0.5, t_end=50.0, cadence=0.5),
    }


def scenario_names() -> tuple[str, ...]:
    return tuple(_catalog())


def make_scenario(name: str, **overrides) -> Scenario:
    """Look up a named scenario and apply field overrides."""
    cat = _catalog()
    if name not in cat:
        raise UnknownScenario(f"unknown scenario {name!r}; known: {', '.join(cat)}")
    sc = cat[name]
    if overrides.pop("adaptive_reset", False) or (
            ("dt" in overrides and overrides["dt"] is not None) and sc.dt is None):
        sc = replace(sc, tol=None, dt0=None)
    if ("tol" in overrides or "dt0" in overrides) and sc.dt is not None:
        sc = replace(sc, dt=None)
        overrides.setdefault("tol", 1e-6)
        overrides.setdefault("dt0", 1e-3)
    sc = replace(sc, **overrides)
    sc.validate()
    return sc


# ---------------------------------------------------------------------------
# stepping machinery

@dataclass
class RunResult:
    scenario: Scenario
    records: list
    series: diag.DiagSeries
    state: DistState
    fieldstate: FieldState | None
    accepted: int
    rejected: int
    n_rhs: int
    wall_time: float


class _Stepper:
    """One split time step plus the collision-substep error estimate."""

    def __init__(self, sc: Scenario, grid: PhaseGrid):
        self.sc = sc
        self.grid = grid
        self.vgrid = grid.velocity
        if sc.dims == 2:
            self.qfun = q2d_apply
        else:
            self.qfun = q2_apply if sc.order == 2 else q4_apply
        self.last_stages = 0
        # homogeneous runs reuse rhs values across attempts/steps (the
        # estimator's Q^{n+1} doubles as the next step's Q^n); keyed by
        # array identity, two slots (pre-step state and trial state)
        self._rhs_cache: list = []

    def _cached_rhs(self, state, rhs):
        for key, val in self._rhs_cache:
            if key is state:
                return val, 0
        val = rhs(state)
        self._remember(state, val)
        return val, 1

    def _remember(self, state, val):
        self._rhs_cache.append((state, val))
        if len(self._rhs_cache) > 2:
            self._rhs_cache.pop(0)

    def lam(self, f) -> float:
        """Analytic spectral bound from the current (conserved) temperature."""
        fv = f if self.sc.dims == 0 else f.mean(axis=0)
        T = float(np.max(staggered_moments(fv, self.vgrid).T))
        return spectral_bound(self.vgrid, self.sc.nu, T, order=self.sc.order)

    def _collide(self, f, dt, drift, want_estimate):
        sc = self.sc
        if sc.dims == 2 and np.ndim(drift) == 0:
            drift = (drift, drift)

        def rhs(g):
            return sc.nu * self.qfun(g, self.vgrid, drift)

        reuse = sc.splitting == "homogeneous"
        if sc.integrator == "rk2":
            self.last_stages = 2
            if reuse:
                q0, nev0 = self._cached_rhs(f, rhs)
            else:
                q0, nev0 = rhs(f), 1
            f1, est, _, nev = rk2_step(f, dt, rhs, rhs0=q0)
            if not np.all(np.isfinite(f1)):
                raise NonFiniteState("collision RK2 step went non-finite")
            return f1, (est if want_estimate else None), nev + nev0
        s = sc.stages or select_stages(sc.integrator, dt, self.lam(f), sc.eta)
        self.last_stages = s
        coeffs = get_coeffs(sc.integrator, s, sc.eta)
        if reuse:
            q0, nev0 = self._cached_rhs(f, rhs)
        else:
            q0, nev0 = rhs(f), 1
        f1, nev = rkc_step(coeffs, f, dt, rhs, rhs0=q0)
        nev += nev0
        if not want_estimate:
            return f1, None, nev
        q1 = rhs(f1)
        if reuse:
            self._remember(f1, q1)
        return f1, rkc2_error_estimate(f, f1, q0, q1, dt), nev + 1

    def step(self, f, e, dt, want_estimate=False):
        """Returns (f', E', est, n_rhs).  est is None when no estimator ran."""
        sc, grid = self.sc, self.grid
        self.last_stages = 0
        if sc.splitting == "homogeneous":
            if sc.nu == 0.0:
                return f, e, None, 0
            f1, est, nev = self._collide(f, dt, 0.0, want_estimate)
            return f1, e, est, nev

        if sc.splitting == "sl-rkc":
            f1 = advect_x(f, 0.5 * dt, grid)
            e1 = poisson_field(f1, grid)
            est, nev = None, 0
            if sc.nu > 0.0:
                f1, est, nev = self._collide(f1, dt, e1 / sc.nu, want_estimate)
            else:
                f1 = advect_v_sl(f1, e1, dt, grid)
            f1 = advect_x(f1, 0.5 * dt, grid)
            return f1, e1, est, nev

        if sc.splitting == "sl-rk2-rkc":
            f1 = advect_x(f, 0.5 * dt, grid)
            # sub-cycle the velocity/field stage when |E| dt/dv exceeds the
            # RK2+upwind stability constant; each sub-step keeps the exact
            # kinetic-electric energy exchange, so the identity is preserved
            sigma = float(np.abs(e).max()) * dt / grid.velocity.dv
            m = max(1, math.ceil(sigma / VELOCITY_CFL_SAFE))
            e1 = e
            for _ in range(m):
                f1, e1 = velocity_rk2_ampere(f1, e1, dt / m, grid)
            est, nev = None, 0
            if sc.nu > 0.0:
                f1, est, nev = self._collide(f1, dt, 0.0, want_estimate)
            f1 = advect_x(f1, 0.5 * dt, grid)
            return f1, e1, est, nev

        # strang-2dv: x | (Poisson + v) | collision | (Poisson + v) | x
        f1 = advect_x(f, 0.5 * dt, grid)
        est, nev = None, 0
        if sc.nu > 0.0:
            e1 = poisson_field(f1, grid)
            f1 = advect_v_sl(f1, e1, 0.5 * dt, grid)
            f1, est, nev = self._collide(f1, dt, 0.0, want_estimate)
            e1 = poisson_field(f1, grid)
            f1 = advect_v_sl(f1, e1, 0.5 * dt, grid)
        else:
            e1 = poisson_field(f1, grid)
            f1 = advect_v_sl(f1, e1, dt, grid)
        f1 = advect_x(f1, 0.5 * dt, grid)
        return f1, e1, est, nev


def run(sc: Scenario, initial: tuple[DistState, FieldState | None] | None = None) -> RunResult:
    """Advance a scenario from t = 0 to t_end and collect diagnostics.

    initial, when given, is a (DistState, FieldState) pair (e.g. a reloaded
    snapshot); the field is used as-is, Poisson is not re-solved.
    """
    sc.validate()
    t_start = time.perf_counter()
    grid = sc.build_grid()
    if initial is None:
        f = sample_on_grid(grid, sc.initializer()).values
        e = None if grid.homogeneous else poisson_field(f, grid)
    else:
        f = np.array(initial[0].values, dtype=float)
        e = None
        if not grid.homogeneous:
            e = (np.array(initial[1].e, dtype=float) if initial[1] is not None
                 else poisson_field(f, grid))

    m_ref = diag.reference_maxwellian(f, grid)
    series = diag.DiagSeries(vdims=grid.velocity.dims)
    records: list[StepRecord] = []
    stepper = _Stepper(sc, grid)
    controller = StepController(tol=sc.tol, dt0=sc.dt0) if sc.adaptive else None

    def emit(t, dt_last, stages, nrhs):
        e_diag = e
        if sc.splitting == "sl-rkc" and not grid.homogeneous:
            e_diag = poisson_field(f, grid)
        inv = diag.invariants(f, e_diag, grid)
        series.append(t, inv, diag.entropy(f, m_ref, grid),
                      diag.l2_distance(f, m_ref, grid), dt_last, stages, nrhs)

    t = 0.0
    n_rhs_total = 0
    emit(0.0, 0.0, 0, 0)
    tiny = 1e-12 * max(1.0, sc.t_end)
    next_mark = sc.cadence

    if not sc.adaptive:
        while t < sc.t_end - tiny:
            dt = min(sc.dt, sc.t_end - t)
            try:
                f, e, _, nev = stepper.step(f, e, dt)
            except NonFiniteState as exc:
                raise NonFiniteState(f"{exc} at t={t:.6g}") from exc
            except DegenerateDensity as exc:
                if t == 0.0:
                    raise
                # moments went unphysical mid-run: the step blew up
                raise NonFiniteState(
                    f"unphysical state ({exc}) at t={t:.6g}") from exc
            if not np.all(np.isfinite(f)):
                raise NonFiniteState(f"non-finite state at t={t:.6g}")
            n_rhs_total += nev
            t += dt
            records.append(StepRecord(t, dt, stepper.last_stages, 0.0, True, n_rhs_total))
            if t >= next_mark - tiny or t >= sc.t_end - tiny:
                emit(t, dt, stepper.last_stages, n_rhs_total)
                next_mark = (math.floor(t / sc.cadence) + 1) * sc.cadence
        wall = time.perf_counter() - t_start
        return RunResult(sc, records, series, DistState(f, grid, t),
                         None if e is None else FieldState(e, t),
                         len(records), 0, n_rhs_total, wall)

    dt = controller.dt0
    while t < sc.t_end - tiny:
        dt_try = min(dt, sc.t_end - t)
        t_att = time.perf_counter()
        try:
            f_try, e_try, est, nev = stepper.step(f, e, dt_try, want_estimate=True)
            with np.errstate(over="ignore", invalid="ignore"):
                err = controller.error_norm(est, f_try) if est is not None else 0.0
        except (NonFiniteState, DegenerateDensity):
            # instability inside the attempt: treat as a rejected step
            f_try, e_try, err, nev = None, None, math.inf, 0
        if not math.isfinite(err):
            err = math.inf
        controller.n_rhs += nev
        n_rhs_total = controller.n_rhs
        wall_att = time.perf_counter() - t_att
        if err <= 1.0:
            f, e = f_try, e_try
            t += dt_try
            controller.accepted += 1
            records.append(StepRecord(t, dt_try, stepper.last_stages, err, True,
                                      n_rhs_total, wall_att))
            if t >= next_mark - tiny or t >= sc.t_end - tiny:
                emit(t, dt_try, stepper.last_stages, n_rhs_total)
                next_mark = (math.floor(t / sc.cadence) + 1) * sc.cadence
        else:
            controller.rejected += 1
            records.append(StepRecord(t, dt_try, stepper.last_stages, err, False,
                                      n_rhs_total, wall_att))
        dt = controller.propose(dt_try, err, 2 if sc.integrator == "rkc2" else 1)

    wall = time.perf_counter() - t_start
    return RunResult(sc, records, series, DistState(f, grid, t),
                     None if e is None else FieldState(e, t),
                     controller.accepted, controller.rejected, controller.n_rhs, wall)
