"""Continuous-time closed loop for verification studies.

The flight engine in :mod:`mrhover.simkit` runs the controller at a fixed
rate with Euler-integrated internal states, which is what flies. For
checking the mathematical properties of the scheme (exactness of the rate
feedforward, decay laws of the error coordinates) the relevant object is
instead the idealized continuous interconnection of plant and controller,
where the command is evaluated instantaneously and all states integrate
together. This module packs plant state and controller state into one
18-vector

    y = [p(3), q(4), v(3), omega(3), q_d(4), f(1)]

and exposes its vector field, an RK4 stepper and a trajectory sampler.
"""

from __future__ import annotations

import numpy as np

from . import quat
from .controller import (ControllerState, Gains, attitude_moment,
                         desired_angular_acceleration, desired_angular_velocity,
                         force_mismatch, mismatch_steering, reference_force,
                         rotor_command, thrust_rate)
from .dynamics import GRAVITY, RigidBodyState
from .platform import Allocation, PlatformModel

_E3 = np.array([0.0, 0.0, 1.0])


def pack(state: RigidBodyState, ctrl: ControllerState) -> np.ndarray:
    """Pack plant + controller states into one flat vector."""
    return np.concatenate([state.p, state.q, state.v, state.omega, ctrl.q_d, [ctrl.f]])


def unpack(y: np.ndarray) -> tuple[RigidBodyState, ControllerState]:
    """Inverse of :func:`pack`."""
    return RigidBodyState.unpack(y[0:13]), ControllerState(q_d=y[13:17], f=float(y[17]))


def loop_field(model: PlatformModel, allocation: Allocation, gains: Gains,
               y: np.ndarray, p_r: np.ndarray, q_r: np.ndarray | None = None,
               g: float = GRAVITY) -> np.ndarray:
    """Vector field of the continuous closed loop at packed state y."""
    p, q, v, w, q_d, f = y[0:3], y[3:7], y[7:10], y[10:13], y[13:17], y[17]
    d_star = allocation.d_star
    e_p = p - p_r
    e_v = v
    f_r = reference_force(e_p, e_v, gains, model.mass, g)
    f_delta = force_mismatch(q_d, d_star, f, f_r)
    nu = mismatch_steering(e_p, e_v, f_delta, gains, model.mass)
    omega_d = desired_angular_velocity(q_d, d_star, f, nu, q_r, gains.k_q)
    omega_dd = desired_angular_acceleration(q, q_d, d_star, f, e_p, e_v, f_delta,
                                            gains, model.mass, q_r)
    tau_r = attitude_moment(q, q_d, w, omega_d, omega_dd, model.inertia, gains)
    u = rotor_command(allocation, tau_r, f)

    f_c = model.F @ u
    tau_c = model.M @ u
    dv = -g * _E3 + (quat.to_rotation(q) @ f_c) / model.mass
    dw = model.inertia_inv @ (-np.cross(w, model.inertia @ w) + tau_c)
    return np.concatenate([
        v,
        quat.qdot_body(q, w),
        dv,
        dw,
        quat.qdot_body(q_d, omega_d),
        [thrust_rate(q_d, d_star, nu)],
    ])


def loop_step(model: PlatformModel, allocation: Allocation, gains: Gains,
              y: np.ndarray, p_r: np.ndarray, dt: float,
              q_r: np.ndarray | None = None, g: float = GRAVITY) -> np.ndarray:
    """RK4 step of the coupled loop; dt may be negative for backward micro-steps."""
    k1 = loop_field(model, allocation, gains, y, p_r, q_r, g)
    k2 = loop_field(model, allocation, gains, y + 0.5 * dt * k1, p_r, q_r, g)
    k3 = loop_field(model, allocation, gains, y + 0.5 * dt * k2, p_r, q_r, g)
    k4 = loop_field(model, allocation, gains, y + dt * k3, p_r, q_r, g)
    y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    y[3:7] = quat.normalize(y[3:7])
    y[13:17] = quat.normalize(y[13:17])
    return y


def simulate_loop(model: PlatformModel, allocation: Allocation, gains: Gains,
                  initial: RigidBodyState, ctrl: ControllerState, p_r: np.ndarray,
                  duration: float, dt: float = 1e-3, sample_every: int = 10,
                  q_r: np.ndarray | None = None,
                  g: float = GRAVITY) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the continuous loop, returning sample times and packed states.

    Samples every ``sample_every`` steps starting at t = 0; the final state is
    included whether or not it lands on the sampling grid.
    """
    y = pack(initial, ctrl)
    n = int(round(duration / dt))
    times = [0.0]
    samples = [y.copy()]
    for k in range(n):
        y = loop_step(model, allocation, gains, y, p_r, dt, q_r, g)
        if (k + 1) % sample_every == 0 or k == n - 1:
            times.append((k + 1) * dt)
            samples.append(y.copy())
    return np.array(times), np.array(samples)
