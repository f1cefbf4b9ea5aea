"""Invariant tracking, entropy and damping-rate monitors, and all file output.

Deviations are reported raw, D(t) = Q(t) - Q(0); nothing is normalized
silently.  All text output uses 17 significant digits so that write/read
round trips are bit-exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .collisions import discrete_maxwellian, staggered_moments
from .errors import DegenerateDensity, IoFailure, TooFewPeaks
from .mesh import DistState, FieldState, PhaseGrid, build_phase_grid

FMT = "%.17g"


@dataclass
class Invariants:
    mass: float
    momentum: np.ndarray  # scalar-like for 1dv, 2-vector for 2dv
    kinetic: float
    electric: float
    total: float


def invariants(f, e, grid: PhaseGrid) -> Invariants:
    """Mass, momentum, kinetic/electric/total energy with uniform node weights.

    Homogeneous mode drops the dx weight and the electric contribution.
    """
    f = np.asarray(f, dtype=float)
    w = grid.cell_volume
    v = grid.velocity.nodes
    if grid.velocity.dims == 1:
        vaxes = (-1,)
        vx = v if grid.homogeneous else v[None, :]
        v2 = vx**2
        mom = np.asarray((f * vx).sum() * w)
    else:
        vaxes = (-2, -1)
        vx = v[None, :, None]
        vy = v[None, None, :]
        v2 = vx**2 + vy**2
        mom = np.array([(f * vx).sum() * w, (f * vy).sum() * w])
    mass = float(f.sum() * w)
    kinetic = float((f * v2).sum() * w / 2.0)
    if grid.homogeneous or e is None:
        electric = 0.0
    else:
        electric = 0.5 * grid.spatial.dx * float(np.sum(np.asarray(e) ** 2))
    return Invariants(mass, mom, kinetic, electric, kinetic + electric)


def entropy(f, m_ref, grid: PhaseGrid) -> float:
    """Quadratic entropy dv^dims sum f^2 / M (dx-weighted sum in x)."""
    m_ref = np.asarray(m_ref, dtype=float)
    if np.any(m_ref <= 0.0):
        raise DegenerateDensity("entropy reference Maxwellian must be positive")
    f = np.asarray(f, dtype=float)
    return float((f**2 / m_ref).sum() * grid.cell_volume)


def l2_distance(f, m_ref, grid: PhaseGrid) -> float:
    """Phase-space L2 distance ||f - M||."""
    diff = np.asarray(f, dtype=float) - np.asarray(m_ref, dtype=float)
    return math.sqrt(float((diff**2).sum() * grid.cell_volume))


def reference_maxwellian(f, grid: PhaseGrid) -> np.ndarray:
    """Moment-matched Maxwellian of f, broadcast over x for inhomogeneous grids.

    Inhomogeneous runs use the staggered moments of the x-averaged
    distribution, fixed at t = 0 for the whole run.
    """
    f = np.asarray(f, dtype=float)
    fv = f if grid.homogeneous else f.mean(axis=0)
    m = staggered_moments(fv, grid.velocity)
    return discrete_maxwellian(m.n, m.u, m.T, grid.velocity)


def fit_damping(t, elec, window=None, kind: str = "field") -> float:
    """Exponential rate of the electric-energy envelope via its local maxima.

    Fits log(peak) against peak time by least squares; returns the
    field-amplitude rate (half the energy rate) unless kind='energy'.
    Requires at least 4 maxima inside the window.
    """
    t = np.asarray(t, dtype=float)
    elec = np.asarray(elec, dtype=float)
    if window is not None:
        mask = (t >= window[0]) & (t <= window[1])
        t, elec = t[mask], elec[mask]
    if t.size < 3:
        raise TooFewPeaks("window holds too few samples")
    inner = (elec[1:-1] > elec[:-2]) & (elec[1:-1] >= elec[2:])
    idx = np.flatnonzero(inner) + 1
    idx = idx[elec[idx] > 0.0]
    if idx.size < 4:
        raise TooFewPeaks(f"found {idx.size} electric-energy maxima, need >= 4")
    slope = np.polyfit(t[idx], np.log(elec[idx]), 1)[0]
    if kind == "energy":
        return float(slope)
    return float(slope / 2.0)


SERIES_COLUMNS_1D = ("t", "mass", "momentum_x", "e_kin", "e_elec", "e_tot",
                     "entropy", "l2_maxwellian", "dt", "stages", "nrhs")
SERIES_COLUMNS_2D = ("t", "mass", "momentum_x", "momentum_y", "e_kin", "e_elec",
                     "e_tot", "entropy", "l2_maxwellian", "dt", "stages", "nrhs")


@dataclass
class DiagSeries:
    """Diagnostic time series; one row per emission."""

    vdims: int = 1
    rows: list = field(default_factory=list)

    @property
    def columns(self) -> tuple[str, ...]:
        return SERIES_COLUMNS_2D if self.vdims == 2 else SERIES_COLUMNS_1D

    def append(self, t, inv: Invariants, ent, l2m, dt, stages, nrhs):
        mom = np.atleast_1d(inv.momentum)
        row = [t, inv.mass, *mom[: self.vdims], inv.kinetic, inv.electric,
               inv.total, ent, l2m, dt, stages, nrhs]
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def __len__(self) -> int:
        return len(self.rows)


def write_series(path, series: DiagSeries, plotspec: bool = False) -> None:
    """CSV with the fixed documented header; values at 17 significant digits."""
    try:
        with open(path, "w") as fh:
            fh.write(",".join(series.columns) + "\n")
            for row in series.rows:
                fh.write(",".join(FMT % x for x in row) + "\n")
        if plotspec:
            with open(str(path) + ".plotspec", "w") as fh:
                fh.write("x: t\n")
                for name in series.columns[1:]:
                    fh.write(f"y: {name}\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_series(path) -> dict[str, np.ndarray]:
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            data = [line.strip().split(",") for line in fh if line.strip()]
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    cols = np.array(data, dtype=float).reshape(len(data), len(header))
    return {name: cols[:, i] for i, name in enumerate(header)}


def write_snapshot(path, state: DistState, fieldstate: FieldState | None = None) -> None:
    """Plain-text snapshot: grid descriptor header, then values in storage order.

    An optional trailing 'E' section stores the electric field so that
    restarts can reload it without re-solving Poisson.
    """
    grid = state.grid
    dims = 0 if grid.homogeneous else grid.velocity.dims
    n_x = 0 if grid.homogeneous else grid.spatial.n_x
    length = 0.0 if grid.homogeneous else grid.spatial.length
    try:
        with open(path, "w") as fh:
            fh.write("%d %d %d " % (dims, n_x, grid.velocity.n_v))
            fh.write(FMT % length + " " + FMT % grid.velocity.v_max + " " + FMT % state.t + "\n")
            flat = state.values.ravel()
            per_line = grid.velocity.n_nodes
            for start in range(0, flat.size, per_line):
                fh.write(" ".join(FMT % x for x in flat[start:start + per_line]) + "\n")
            if fieldstate is not None:
                fh.write("E\n")
                fh.write(" ".join(FMT % x for x in np.asarray(fieldstate.e)) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_snapshot(path):
    """Inverse of write_snapshot; returns (DistState, FieldState | None)."""
    try:
        with open(path) as fh:
            head = fh.readline().split()
            tokens: list[str] = []
            e_tokens: list[str] | None = None
            for line in fh:
                parts = line.split()
                if parts and parts[0] == "E":
                    e_tokens = []
                    continue
                if e_tokens is None:
                    tokens.extend(parts)
                else:
                    e_tokens.extend(parts)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    dims, n_x, n_v = int(head[0]), int(head[1]), int(head[2])
    length, v_max, t = float(head[3]), float(head[4]), float(head[5])
    grid = build_phase_grid(length if dims else 1.0, n_x if dims else 4, v_max, n_v, dims)
    vals = np.array(tokens, dtype=float).reshape(grid.shape)
    state = DistState(vals, grid, t)
    fieldstate = None
    if e_tokens is not None:
        fieldstate = FieldState(np.array(e_tokens, dtype=float), t)
    return state, fieldstate


def write_matrix(path, a: np.ndarray) -> None:
    """Frozen-operator export: first line 'N rows cols', then matrix rows."""
    a = np.asarray(a, dtype=float)
    try:
        with open(path, "w") as fh:
            fh.write("N %d %d\n" % a.shape)
            for row in a:
                fh.write(" ".join(FMT % x for x in row) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_matrix(path) -> np.ndarray:
    try:
        with open(path) as fh:
            head = fh.readline().split()
            rows, cols = int(head[1]), int(head[2])
            data = np.loadtxt(fh)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return data.reshape(rows, cols)
