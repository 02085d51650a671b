"""Hover control for generically tilted multirotors.

Library layout:

- :mod:`mrhover.quat`: unit-quaternion algebra;
- :mod:`mrhover.platform`: rotor geometry, force/moment input matrices,
  zero-moment allocation analysis;
- :mod:`mrhover.dynamics`: rigid-body equations of motion and RK4 stepping;
- :mod:`mrhover.controller`: the zero-moment-direction hover controller;
- :mod:`mrhover.analysis`: continuous closed-loop interconnection for
  verification studies;
- :mod:`mrhover.simkit`: multi-rate simulation engine with sensor and
  actuator degradation, trace recording;
- :mod:`mrhover.plots`, :mod:`mrhover.cli`: figure rendering and the batch
  command-line interface.
"""

from .controller import ControllerState, ControlOutput, Gains, controller_step, initial_state
from .dynamics import GRAVITY, RigidBodyState, Wrench, rk4_step, state_derivative, wrench
from .errors import (AllocationError, ControllerFault, IntegrationDiverged,
                     InvalidPlatform, ThrustSingularity)
from .platform import (Allocation, AllocationDiagnostics, PlatformModel, RotorSpec,
                       allocation_matrices, check_decoupling, coplanar_quadrotor,
                       default_hexarotor, load_platform, moment_pseudoinverse,
                       nullspace_basis, solve_allocation, star_hexarotor,
                       zero_moment_direction)
from .simkit import (ActuatorModel, DegradedSensor, MotorBank, Scenario, SensorModel,
                     SimTrace, run_scenario, summarize)

__version__ = "0.1.0"

__all__ = [
    "ActuatorModel", "Allocation", "AllocationDiagnostics", "AllocationError",
    "ControlOutput", "ControllerFault", "ControllerState", "DegradedSensor",
    "GRAVITY", "Gains", "IntegrationDiverged", "InvalidPlatform", "MotorBank",
    "PlatformModel", "RigidBodyState", "RotorSpec", "Scenario", "SensorModel",
    "SimTrace", "ThrustSingularity", "Wrench", "allocation_matrices",
    "check_decoupling", "controller_step", "coplanar_quadrotor",
    "default_hexarotor", "initial_state", "load_platform", "moment_pseudoinverse",
    "nullspace_basis", "rk4_step", "run_scenario", "solve_allocation",
    "star_hexarotor", "state_derivative", "summarize", "wrench",
    "zero_moment_direction",
]
