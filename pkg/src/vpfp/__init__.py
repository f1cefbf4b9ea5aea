"""Vlasov-Poisson/Ampere-Fokker-Planck kinetic solver.

Conservative Fokker-Planck velocity discretizations (second and fourth
order, 1D and 2D velocity), explicit stabilized Runge-Kutta-Chebyshev time
integration with adaptive step/stage control, spectral transport and field
solves, and an energy-conserving Ampere-coupled splitting.
"""

from .collisions import (assemble_frozen_operator, breve_moments, discrete_maxwellian,
                         gershgorin_interval, interface_maxwellian, q2_apply, q2_l2form,
                         q2d_apply, q4_apply, staggered_moments)
from .diagnostics import (DiagSeries, entropy, fit_damping, invariants, l2_distance,
                          read_matrix, read_series, read_snapshot, reference_maxwellian,
                          write_matrix, write_series, write_snapshot)
from .driver import RunResult, Scenario, make_scenario, run, scenario_names
from .mesh import (DistState, FieldState, PhaseGrid, SpatialGrid, VelocityGrid,
                   build_phase_grid, sample_on_grid)
from .rkc import (RkcCoeffs, StepController, StepRecord, adaptive_advance, cheb_eval,
                  get_coeffs, rkc1_coeffs, rkc2_coeffs, rkc_step, select_stages,
                  spectral_bound, stability_function, stage_select)
from .transport import (advect_v_sl, advect_x, ampere_update, poisson_field,
                        rk2_vlasov_stage, upwind_dv, velocity_rk2_ampere)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
