"""Multirotor design, simulation and wrench-set analysis."""
from .airframe import (AirframeModel, AllocationMatrix, EndEffectorSpec, RotorSpec,
                       build_allocation_matrix, hover_feasible, rotor_axis, rotor_position,
                       validate_airframe)
from .analysis import (Polytope, ResponseMetrics, acceleration_set, cross_section,
                       lateral_force_radius, omni_radius, response_metrics, wrench_set)
from .control import (AttitudeStrategy, ControllerConfig, ForceSelection, PidGains,
                      TrajectoryWaypoint, allocate, attitude_control, attitude_strategy,
                      hybrid_force_position, position_control, trajectory_step)
from .dynamics import (AxisAlignedBox, ContactParams, Environment, Plane, RigidState, Wrench,
                       body_wrench, contact_wrench, end_effector_pose, state_derivative, step)
from .scenario import (ScenarioSpec, SignalLog, export_csv, export_polytope, load_airframe,
                       load_scenario, parse_airframe, parse_scenario, render_plots,
                       run_scenario)

__version__ = "0.1.0"
