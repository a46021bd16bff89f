"""Movable-antenna wireless-powered MEC optimizer."""

from .channel import (WdChannel, channel_response, channel_response_batch,
                      field_response_vector, propagation_difference,
                      sample_wd_channel)
from .harvest import EhParams, eh_constants, harvested_power, received_rf_power
from .rates import (Allocation, SystemParams, combining_gain, edge_feasible,
                    local_energy, local_rate, offload_rate, scr)
from .pso import PsoConfig, PsoResult, min_distance_feasible
from .subsolvers import (ScaState, TimeEnergySolution, mrc_combiner,
                         project_psd_trace, recover_beams, sca_beamforming,
                         solve_time_energy)
from .ao import (SchemeConfig, Solution, solve_dynamic, solve_exhaustive_small,
                 solve_fpa, solve_semidynamic, solve_static, upa_layout)
from .harness import (Scenario, SweepSpec, build_scenario, dbm_to_watts,
                      default_params, run_scheme, run_sweep, validate,
                      validate_solution, watts_to_dbm)

__version__ = "0.1.0"
