"""Rigid-body equations of motion and fixed-step integration.

State: position p and velocity v in the world frame, unit quaternion q
(body to world), angular velocity omega in the body frame. With rotor
input vector u the dynamics are

    p_dot = v
    q_dot = (1/2) q (x) (0, omega)
    m v_dot = -m g e3 + R(q) F u
    J omega_dot = -omega x J omega + M u

Propeller gyroscopic effects and airframe drag are neglected. The stepper
is classic RK4 with the input held constant over the step and the
quaternion renormalized afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quat
from .errors import IntegrationDiverged
from .platform import PlatformModel

GRAVITY = 9.81

_E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class RigidBodyState:
    """Pose and twist: p, v in world frame, q body-to-world, omega in body frame."""

    p: np.ndarray
    q: np.ndarray
    v: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float))

    @staticmethod
    def at_rest(p=(0.0, 0.0, 0.0), q=None) -> "RigidBodyState":
        q = quat.identity() if q is None else np.asarray(q, dtype=float)
        return RigidBodyState(np.asarray(p, dtype=float), q, np.zeros(3), np.zeros(3))

    def pack(self) -> np.ndarray:
        return np.concatenate([self.p, self.q, self.v, self.omega])

    @staticmethod
    def unpack(y: np.ndarray) -> "RigidBodyState":
        return RigidBodyState(y[0:3], y[3:7], y[7:10], y[10:13])


@dataclass(frozen=True)
class Wrench:
    """Body-frame control force and moment produced by a rotor input."""

    force: np.ndarray
    moment: np.ndarray


def wrench(model: PlatformModel, u: np.ndarray) -> Wrench:
    """Map a rotor input vector to the body-frame wrench (F u, M u)."""
    u = np.asarray(u, dtype=float)
    if u.shape != (model.n_rotors,):
        raise ValueError(f"input has shape {u.shape}, expected ({model.n_rotors},)")
    return Wrench(model.F @ u, model.M @ u)


def state_derivative(model: PlatformModel, state: RigidBodyState, u: np.ndarray,
                     g: float = GRAVITY) -> np.ndarray:
    """Time derivative of the packed state [p, q, v, omega] under input u."""
    f_c = model.F @ u
    tau_c = model.M @ u
    dv = -g * _E3 + (quat.to_rotation(state.q) @ f_c) / model.mass
    domega = model.inertia_inv @ (-np.cross(state.omega, model.inertia @ state.omega) + tau_c)
    return np.concatenate([state.v, quat.qdot_body(state.q, state.omega), dv, domega])


def _rhs(model: PlatformModel, y: np.ndarray, u: np.ndarray, g: float) -> np.ndarray:
    q, v, w = y[3:7], y[7:10], y[10:13]
    f_c = model.F @ u
    tau_c = model.M @ u
    eta, eps = q[0], q[1:]
    s = quat.skew(eps)
    R = np.eye(3) + 2.0 * eta * s + 2.0 * (s @ s)
    dv = -g * _E3 + (R @ f_c) / model.mass
    domega = model.inertia_inv @ (-np.cross(w, model.inertia @ w) + tau_c)
    return np.concatenate([v, quat.qdot_body(q, w), dv, domega])


def rk4_step(model: PlatformModel, state: RigidBodyState, u: np.ndarray, dt: float,
             g: float = GRAVITY) -> RigidBodyState:
    """One RK4 step of length dt holding u constant; renormalizes q.

    Raises
    ------
    IntegrationDiverged
        If the stepped state contains non-finite values.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    u = np.asarray(u, dtype=float)
    y = state.pack()
    k1 = _rhs(model, y, u, g)
    k2 = _rhs(model, y + 0.5 * dt * k1, u, g)
    k3 = _rhs(model, y + 0.5 * dt * k2, u, g)
    k4 = _rhs(model, y + dt * k3, u, g)
    y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(y)):
        raise IntegrationDiverged("state became non-finite during integration")
    y[3:7] = quat.normalize(y[3:7])
    return RigidBodyState.unpack(y)
