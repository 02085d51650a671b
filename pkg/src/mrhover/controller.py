"""Hover controller built around the platform's zero-moment direction.

The controller steers a generically tilted multirotor to a constant
reference position with some constant (otherwise free) attitude. It keeps
two internal dynamic states: a desired attitude quaternion q_d and a scalar
thrust magnitude f, and commands the rotor input

    u = m_pinv tau_r + u_bar f

so that, by construction of the allocation artifacts, the realized wrench
splits cleanly into force d_star * f and moment tau_r.

Per step, with position error e_p = p - p_r and velocity error e_v = v:

    f_r     = m g e3 - k_pp e_p - k_pd e_v           PD + gravity reference force
    f_delta = R(q_d) d_star f - f_r                  realizable-force mismatch
    nu      = (k_pd k_pp / m) e_p
              + (k_pd^2 / m - k_pp) e_v
              - (k_pd / m + k_delta) f_delta         mismatch steering input
    omega_d = (1/f) [d_star]x R(q_d)^T nu            desired body rate
    f_dot   = (R(q_d) d_star) . nu                   thrust state rate

which makes f_delta decay like exp(-k_delta t) once the attitude loop has
locked on. The attitude loop tracks q_d with a quaternion PD plus exact
feedforward:

    tau_r = -k_ap eps_delta - k_ad (omega - omega_d)
            + omega x J omega + J omega_dd

where q_delta = q_d^-1 (x) q and omega_dd is the closed-form time
derivative of omega_d along closed-loop solutions (see
:func:`desired_angular_acceleration`). Internal states advance by explicit
Euler at the control rate, with q_d renormalized.

Optionally a reference attitude q_r is tracked with lower priority than
the position goal by spinning q_d about d_star:

    omega_d' = -k_q d_star d_star^T eps'_delta,   q'_delta = q_r^-1 (x) q_d

The projection onto d_star keeps this term out of the translational
dynamics entirely.

Quaternion signs are never canonicalized here: eps_delta feedback must stay
continuous in time, so q_d keeps whatever sign continuity its initialization
and integration produce.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quat
from .dynamics import GRAVITY, RigidBodyState
from .errors import ControllerFault, ThrustSingularity
from .platform import Allocation, PlatformModel

_E3 = np.array([0.0, 0.0, 1.0])

# Fraction of hover thrust below which the control law is considered singular.
F_MIN_FRACTION = 0.05


@dataclass(frozen=True)
class Gains:
    """Controller gains; all positive (k_q may be zero to disable attitude tracking).

    k_pp, k_pd : position PD [N/m, N s/m]
    k_delta    : force-mismatch decay rate [1/s]
    k_ap, k_ad : attitude PD [N m, N m s]
    k_q        : reference-attitude tracking gain [1/s], 0 disables
    """

    k_pp: float
    k_pd: float
    k_delta: float
    k_ap: float
    k_ad: float
    k_q: float = 0.0

    def __post_init__(self):
        for name in ("k_pp", "k_pd", "k_delta", "k_ap", "k_ad"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.k_q < 0.0:
            raise ValueError("k_q must be nonnegative")


@dataclass(frozen=True)
class ControllerState:
    """Internal dynamic states: desired attitude q_d and thrust magnitude f [N]."""

    q_d: np.ndarray
    f: float


def initial_state(measured_q: np.ndarray, mass: float, g: float = GRAVITY) -> ControllerState:
    """Standard initialization: q_d from the first attitude fix, f at hover thrust."""
    return ControllerState(q_d=np.asarray(measured_q, dtype=float).copy(), f=mass * g)


@dataclass(frozen=True)
class ControlOutput:
    """Rotor command plus every intermediate quantity, for logging and analysis."""

    u: np.ndarray
    e_p: np.ndarray
    e_v: np.ndarray
    f_r: np.ndarray
    f_delta: np.ndarray
    nu: np.ndarray
    omega_d: np.ndarray
    omega_dd: np.ndarray
    tau_r: np.ndarray
    q_delta: np.ndarray
    omega_delta: np.ndarray


def reference_force(e_p: np.ndarray, e_v: np.ndarray, gains: Gains, mass: float,
                    g: float = GRAVITY) -> np.ndarray:
    """PD + gravity compensation force: m g e3 - k_pp e_p - k_pd e_v."""
    return mass * g * _E3 - gains.k_pp * e_p - gains.k_pd * e_v


def force_mismatch(q_d: np.ndarray, d_star: np.ndarray, f: float,
                   f_r: np.ndarray) -> np.ndarray:
    """Gap between the force the controller will realize and the reference force."""
    return quat.to_rotation(q_d) @ d_star * f - f_r


def mismatch_steering(e_p: np.ndarray, e_v: np.ndarray, f_delta: np.ndarray,
                      gains: Gains, mass: float) -> np.ndarray:
    """Steering input nu driving (omega_d, f_dot) to collapse the force mismatch."""
    k_pp, k_pd, k_delta = gains.k_pp, gains.k_pd, gains.k_delta
    return ((k_pd * k_pp / mass) * e_p
            + (k_pd ** 2 / mass - k_pp) * e_v
            - (k_pd / mass + k_delta) * f_delta)


def _check_thrust(f: float, f_min: float) -> None:
    if abs(f) <= f_min or f == 0.0:
        raise ThrustSingularity(f"thrust state f = {f:.6g} at or below guard {f_min:.6g}")


def attitude_error(q_r: np.ndarray, q_d: np.ndarray) -> np.ndarray:
    """Quaternion offset q_r^-1 (x) q_d between a reference and the desired attitude."""
    return quat.product(quat.inverse(q_r), q_d)


def desired_angular_velocity(q_d: np.ndarray, d_star: np.ndarray, f: float,
                             nu: np.ndarray, q_r: np.ndarray | None = None,
                             k_q: float = 0.0, f_min: float = 0.0) -> np.ndarray:
    """Desired body rate (1/f) [d_star]x R(q_d)^T nu, plus optional q_r tracking.

    Raises
    ------
    ThrustSingularity
        If |f| is at or below f_min (the expression divides by f).
    """
    _check_thrust(f, f_min)
    R_d = quat.to_rotation(q_d)
    omega_d = np.cross(d_star, R_d.T @ nu) / f
    if q_r is not None and k_q > 0.0:
        eps_off = attitude_error(q_r, q_d)[1:]
        omega_d = omega_d - k_q * (d_star @ eps_off) * d_star
    return omega_d


def thrust_rate(q_d: np.ndarray, d_star: np.ndarray, nu: np.ndarray) -> float:
    """Thrust state rate f_dot = (R(q_d) d_star) . nu."""
    return float((quat.to_rotation(q_d) @ d_star) @ nu)


def desired_angular_acceleration(q: np.ndarray, q_d: np.ndarray, d_star: np.ndarray,
                                 f: float, e_p: np.ndarray, e_v: np.ndarray,
                                 f_delta: np.ndarray, gains: Gains, mass: float,
                                 q_r: np.ndarray | None = None,
                                 f_min: float = 0.0) -> np.ndarray:
    """Closed-form time derivative of the desired body rate along solutions.

    Feedforward term for the attitude loop. Differentiating omega_d along the
    closed loop (where the realized force is exactly d_star f) and collecting
    terms gives

        omega_dd = (1/f) [d_star]x R(q_d)^T
                   (k1 R(q) d_star f + k2 e_p + k3 e_v + k4 f_delta)

    with kappa = -(2/f) d_star . (R(q_d)^T nu) and

        k1 = -(k_pp + k_delta k_pd) / m
        k2 = (k_pp / m) (k_pp - k_pd^2 / m) + kappa k_pd k_pp / m
        k3 = 2 k_pd k_pp / m - k_pd^3 / m^2 + kappa (k_pd^2 / m - k_pp)
        k4 = k_pd^2 / m^2 - k_pp / m + k_delta k_pd / m + k_delta^2
             - kappa (k_pd / m + k_delta)

    The k1 channel exploits that [d_star]x R(q_d)^T annihilates R(q_d) d_star,
    so the true-attitude force direction R(q) d_star enters alone. When a
    reference attitude is tracked two extra terms appear: the rate of the
    projection-spin term itself and the cross coupling it induces through
    R(q_d):

        + (k_q s / f) [d_star]x [d_star]x R(q_d)^T nu
        - k_q d_star (d_star . deps'),  deps' = (1/2)(eta' I + [eps']x) omega_d

    with s = d_star . eps'. Validated against central finite differences of
    omega_d along simulated trajectories.
    """
    _check_thrust(f, f_min)
    m = mass
    k_pp, k_pd, k_delta = gains.k_pp, gains.k_pd, gains.k_delta
    nu = mismatch_steering(e_p, e_v, f_delta, gains, m)
    R_d = quat.to_rotation(q_d)
    rdt_nu = R_d.T @ nu
    kappa = -(2.0 / f) * (d_star @ rdt_nu)
    k1 = -(k_pp + k_delta * k_pd) / m
    k2 = (k_pp / m) * (k_pp - k_pd ** 2 / m) + kappa * k_pd * k_pp / m
    k3 = 2.0 * k_pd * k_pp / m - k_pd ** 3 / m ** 2 + kappa * (k_pd ** 2 / m - k_pp)
    k4 = (k_pd ** 2 / m ** 2 - k_pp / m + k_delta * k_pd / m + k_delta ** 2
          - kappa * (k_pd / m + k_delta))
    bracket = k1 * (quat.to_rotation(q) @ d_star) * f + k2 * e_p + k3 * e_v + k4 * f_delta
    omega_dd = np.cross(d_star, R_d.T @ bracket) / f
    if q_r is not None and gains.k_q > 0.0:
        k_q = gains.k_q
        q_off = attitude_error(q_r, q_d)
        s = d_star @ q_off[1:]
        omega_dd = omega_dd + (k_q * s / f) * np.cross(d_star, np.cross(d_star, rdt_nu))
        omega_d = np.cross(d_star, rdt_nu) / f - k_q * s * d_star
        deps = 0.5 * (q_off[0] * omega_d + np.cross(q_off[1:], omega_d))
        omega_dd = omega_dd - k_q * (d_star @ deps) * d_star
    return omega_dd


def attitude_moment(q: np.ndarray, q_d: np.ndarray, omega: np.ndarray,
                    omega_d: np.ndarray, omega_dd: np.ndarray, inertia: np.ndarray,
                    gains: Gains) -> np.ndarray:
    """Reference moment: quaternion PD toward q_d plus gyroscopic and rate feedforward."""
    q_delta = quat.product(quat.inverse(q_d), q)
    omega_delta = omega - omega_d
    return (-gains.k_ap * q_delta[1:] - gains.k_ad * omega_delta
            + np.cross(omega, inertia @ omega) + inertia @ omega_dd)


def rotor_command(allocation: Allocation, tau_r: np.ndarray, f: float) -> np.ndarray:
    """Rotor input u = m_pinv tau_r + u_bar f, realizing force d_star f and moment tau_r."""
    return allocation.m_pinv @ tau_r + allocation.u_bar * f


def controller_step(model: PlatformModel, allocation: Allocation, gains: Gains,
                    measured: RigidBodyState, p_r: np.ndarray, state: ControllerState,
                    dt: float, q_r: np.ndarray | None = None,
                    f_min: float | None = None,
                    g: float = GRAVITY) -> tuple[ControlOutput, ControllerState]:
    """One control update: compute the rotor command and advance (q_d, f) by dt.

    ``measured`` is whatever the sensor pipeline delivers (true state in ideal
    simulations). ``f_min`` defaults to 5 percent of hover thrust; crossing it
    raises rather than clamping, since the control law is undefined there.

    Raises
    ------
    ThrustSingularity
        If |f| is at or below the guard.
    ControllerFault
        If any intermediate quantity is non-finite.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if f_min is None:
        f_min = F_MIN_FRACTION * model.mass * g
    d_star = allocation.d_star
    q_d, f = state.q_d, state.f
    _check_thrust(f, f_min)

    e_p = measured.p - np.asarray(p_r, dtype=float)
    e_v = measured.v
    f_r = reference_force(e_p, e_v, gains, model.mass, g)
    f_delta = force_mismatch(q_d, d_star, f, f_r)
    nu = mismatch_steering(e_p, e_v, f_delta, gains, model.mass)
    omega_d = desired_angular_velocity(q_d, d_star, f, nu, q_r, gains.k_q, f_min)
    f_dot = thrust_rate(q_d, d_star, nu)
    omega_dd = desired_angular_acceleration(
        measured.q, q_d, d_star, f, e_p, e_v, f_delta, gains, model.mass, q_r, f_min)
    tau_r = attitude_moment(measured.q, q_d, measured.omega, omega_d, omega_dd,
                            model.inertia, gains)
    u = rotor_command(allocation, tau_r, f)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(tau_r)) and np.isfinite(f_dot)):
        raise ControllerFault("non-finite controller output")

    q_d_next = quat.normalize(q_d + dt * quat.qdot_body(q_d, omega_d))
    f_next = f + dt * f_dot
    output = ControlOutput(
        u=u, e_p=e_p, e_v=e_v, f_r=f_r, f_delta=f_delta, nu=nu,
        omega_d=omega_d, omega_dd=omega_dd, tau_r=tau_r,
        q_delta=quat.product(quat.inverse(q_d), measured.q),
        omega_delta=measured.omega - omega_d,
    )
    return output, ControllerState(q_d=q_d_next, f=f_next)
