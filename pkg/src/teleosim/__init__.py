"""Deterministic teleoperation simulator with an operator-sized autonomy region.

The vehicle is driven by an autonomous path follower whenever it is inside a
disc the operator positions and resizes live; a closed-form barrier filter
keeps it there, and hands authority back to the operator at the boundary.  A
simple haptic-shared-control mode (stick mapping drives the vehicle directly)
is included as the comparison baseline, together with an experiment harness,
scripted operators, metrics and a live session server.
"""

from .barrier import (BarrierEval, CbfParams, ControllerFault,
                      FilterDiagnostics, TimeVaryingBarrier,
                      baseline_assist_filter, barrier_eval, barrier_value,
                      discrete_rate, nominal_rate, rate_budget, region_filter,
                      smoothing_margin)
from .device import (DeviceParams, DeviceState, guidance_torque, map_inputs,
                     set_grip, set_tilt_direct, simple_hsc_command, step_device)
from .dynamics import (AcceptableRegion, IntegratorConfig, PlantDescriptor,
                       VehicleState, filter_radius, shrink_limit,
                       single_integrator, step_goal, step_plant)
from .episodes import (EpisodeLog, MODE_PROPOSED, MODE_SIMPLE, ReplayOperator,
                       run_episode, save_input_log)
from .metrics import (Comparison, MetricsReport, VerificationReport, aggregate,
                      compare, compute_metrics, compute_required_time,
                      compute_rmse, cross_track, render_comparison, verify)
from .scenario import (ConfigError, Directive, Observation, OperatorFrame,
                       OperatorScript, ObstacleSpec, ObstacleState, Path,
                       SCRIPTS, Scenario, ScenarioConfig, ScriptRunner,
                       area_of, collision_check, default_scenario,
                       initial_obstacle, scripted_operator, step_obstacle)

__version__ = "0.1.0"
