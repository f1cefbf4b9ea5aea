import numpy as np
import pytest

from vpfp.errors import BadCount, NonFiniteSample, NonPositiveExtent
from vpfp.mesh import (DistState, VelocityGrid, build_phase_grid, maxwellian_1d,
                       sample_on_grid)
from vpfp.collisions import staggered_moments

from conftest import HOM_MIX, mixture


def test_grid_spacings_match_reference_setup():
    grid = build_phase_grid(2 * np.pi / 0.5, 128, 12.0, 256, 1)
    assert grid.spatial.dx == pytest.approx(4 * np.pi / 128, rel=1e-15)
    assert grid.velocity.dv == pytest.approx(0.09375, abs=0.0)
    assert grid.shape == (128, 257)


def test_velocity_only_grid():
    grid = build_phase_grid(None, None, 12.0, 256, 0)
    assert grid.homogeneous
    v = grid.velocity.nodes
    assert v.size == 257
    assert v[0] == -12.0
    assert v[-1] == pytest.approx(12.0, abs=1e-13)


def test_node_sequence_uniform_and_increasing():
    g = VelocityGrid(7.3, 96, 1)
    v = g.nodes
    assert np.all(np.diff(v) > 0)
    assert np.max(np.abs(np.diff(v) - g.dv)) <= 4 * np.spacing(g.v_max)
    # index -> coordinate round trip within one ulp of the defining arithmetic
    j = np.arange(97)
    assert np.max(np.abs(v - (-7.3 + g.dv * j))) <= np.spacing(7.3)


def test_degenerate_inputs_rejected():
    with pytest.raises(NonPositiveExtent):
        build_phase_grid(1.0, 128, 0.0, 256, 1)
    with pytest.raises(NonPositiveExtent):
        build_phase_grid(-1.0, 128, 12.0, 256, 1)
    with pytest.raises(BadCount):
        build_phase_grid(1.0, 2, 12.0, 256, 1)
    with pytest.raises(BadCount):
        build_phase_grid(1.0, 128, 12.0, 4, 1)
    with pytest.raises(BadCount):
        build_phase_grid(1.0, 128, 12.0, 256, 3)


def test_sample_homogeneous_mixture_temperature():
    grid = build_phase_grid(None, None, 12.0, 256, 0)
    state = sample_on_grid(grid, mixture(HOM_MIX))
    m = staggered_moments(state.values, grid.velocity)
    assert state.t == 0.0
    assert abs(m.T - 1.8822) < 5e-4
    assert abs(m.n - 1.0) < 1e-12


def test_sample_constant_zero_and_symmetry():
    grid = build_phase_grid(None, None, 6.0, 64, 0)
    zero = sample_on_grid(grid, lambda v: np.zeros_like(v))
    assert not zero.values.any()
    maxw = sample_on_grid(grid, maxwellian_1d(1.0, 0.0, 1.0))
    assert np.all(maxw.values > 0)
    assert np.allclose(maxw.values, maxw.values[::-1], rtol=0, atol=0)


def test_sample_nonfinite_rejected():
    grid = build_phase_grid(None, None, 6.0, 64, 0)
    with pytest.raises(NonFiniteSample):
        sample_on_grid(grid, lambda v: np.where(v == 0.0, np.inf, 1.0))


def test_sample_2d_shape_and_positivity():
    grid = build_phase_grid(4.0, 8, 5.0, 16, 2)
    state = sample_on_grid(grid, lambda x, vx, vy: np.exp(-(vx**2 + vy**2)) + 0 * x)
    assert state.values.shape == (8, 17, 17)
    assert np.all(state.values > 0)


def test_periodic_wrap_identity():
    grid = build_phase_grid(4 * np.pi, 32, 6.0, 32, 1)
    f = np.cos(grid.spatial.nodes)[:, None] * np.exp(-grid.velocity.nodes**2)[None, :]
    rolled = np.roll(f, grid.spatial.n_x, axis=0)
    assert np.array_equal(rolled, f)
    assert np.array_equal(grid.spatial.wrap(np.arange(64)), np.arange(64) % 32)


def test_diststate_shape_checked():
    grid = build_phase_grid(None, None, 6.0, 64, 0)
    with pytest.raises(BadCount):
        DistState(np.zeros(64), grid)
