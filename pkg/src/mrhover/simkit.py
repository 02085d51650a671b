"""Closed-loop experiment engine with sensor and actuator degradation.

Runs the controller at a fixed rate against RK4 physics, optionally through
a measurement pipeline (additive Gaussian noise, transport delay, low-rate
sample-and-hold) and an ESC/motor model (speed clamp, finite-resolution
quantization, first-order lag, speed-proportional noise). Every run is a
pure function of its configuration and seed, so traces are reproducible
byte for byte.

Trace CSV schema (one header row, n = rotor count):

    t,px,py,pz,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz,epx,epy,epz,
    roll_d,pitch_d,yaw_d,fdx,fdy,fdz,f,u1..un,s1..sn

where roll_d/pitch_d/yaw_d are roll-pitch-yaw angles of the attitude
tracking error q_d^-1 (x) q (reporting only; all internal math is
quaternion based), fd* is the force mismatch seen by the controller, f the
controller thrust state, u* the commanded rotor inputs and s* the rotor
speeds (actual motor speeds in realistic mode, the speeds implied by the
command in ideal mode).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import quat
from .controller import ControllerState, ControlOutput, Gains, controller_step, initial_state
from .dynamics import GRAVITY, RigidBodyState, rk4_step
from .errors import ControllerFault, IntegrationDiverged, ThrustSingularity
from .platform import Allocation, PlatformModel


@dataclass(frozen=True)
class SensorModel:
    """Measurement degradation parameters.

    Standard deviations: position [m], velocity [m/s], attitude (applied as a
    small random rotation, per-axis rotation-vector std, dimensionless/rad),
    angular rate [rad/s]. ``delay`` is a transport delay [s] applied to all
    channels; ``rate`` the sensor sampling rate [Hz], held between samples.
    """

    std_p: float = 6.4e-4
    std_v: float = 1.4e-3
    std_q: float = 1.2e-3
    std_omega: float = 2.7e-3
    delay: float = 0.012
    rate: float = 100.0

    def __post_init__(self):
        if min(self.std_p, self.std_v, self.std_q, self.std_omega) < 0.0:
            raise ValueError("noise standard deviations must be nonnegative")
        if self.delay < 0.0 or self.rate <= 0.0:
            raise ValueError("delay must be nonnegative and rate positive")


@dataclass(frozen=True)
class ActuatorModel:
    """ESC + motor model parameters.

    Feasible speed range [Hz] quantized to 2**quant_bits uniform levels
    (default range gives a step of 0.12 Hz at 10 bits), first-order response
    with time constant ``motor_time_constant`` [s], and output noise with
    standard deviation ``speed_noise_coeff`` times the current speed.
    """

    speed_min: float = 0.0
    speed_max: float = 122.88
    quant_bits: int = 10
    motor_time_constant: float = 0.005
    speed_noise_coeff: float = 0.002

    def __post_init__(self):
        if self.speed_max <= self.speed_min or self.speed_min < 0.0:
            raise ValueError("need speed_max > speed_min >= 0")
        if self.quant_bits < 1 or self.motor_time_constant <= 0.0 or self.speed_noise_coeff < 0.0:
            raise ValueError("bad actuator parameters")

    @property
    def quant_step(self) -> float:
        return (self.speed_max - self.speed_min) / 2 ** self.quant_bits


class DegradedSensor:
    """Stateful measurement pipeline: history buffer, delay, hold, noise.

    ``push`` must be called with the true state at every physics step;
    ``measure`` additionally returns the current measurement. Each sensor
    tick (at ``rate``) produces one sample: the true state ``delay`` seconds
    ago (linear interpolation over the history, held at the initial state
    before t = delay) plus fresh noise. Between ticks the last sample is
    held.
    """

    def __init__(self, model: SensorModel, rng: np.random.Generator):
        self.model = model
        self.rng = rng
        self._times: list[float] = []
        self._states: list[np.ndarray] = []
        self._idx = 0
        self._next_tick = 0
        self._held: RigidBodyState | None = None

    def push(self, t: float, state: RigidBodyState) -> None:
        self._times.append(t)
        self._states.append(state.pack())

    def _delayed(self, t: float) -> np.ndarray:
        ts = self._times
        if t <= ts[0]:
            return self._states[0].copy()
        i = self._idx
        while i + 1 < len(ts) and ts[i + 1] < t:
            i += 1
        self._idx = i
        if i + 1 >= len(ts):
            return self._states[-1].copy()
        t0, t1 = ts[i], ts[i + 1]
        a = (t - t0) / (t1 - t0)
        y = (1.0 - a) * self._states[i] + a * self._states[i + 1]
        y[3:7] = quat.normalize(y[3:7])
        return y

    def _make_sample(self, t_tick: float) -> RigidBodyState:
        m = self.model
        y = self._delayed(t_tick - m.delay)
        y[0:3] += m.std_p * self.rng.standard_normal(3)
        y[7:10] += m.std_v * self.rng.standard_normal(3)
        rotvec = m.std_q * self.rng.standard_normal(3)
        angle = float(np.linalg.norm(rotvec))
        if angle > 0.0:
            dq = quat.from_axis_angle(angle, rotvec / angle)
            y[3:7] = quat.normalize(quat.product(y[3:7], dq))
        y[10:13] += m.std_omega * self.rng.standard_normal(3)
        return RigidBodyState.unpack(y)

    def measure(self, state: RigidBodyState, t: float) -> RigidBodyState:
        """Push the true state at time t and return the degraded measurement."""
        self.push(t, state)
        tick = int(np.floor(t * self.model.rate + 1e-9))
        while self._next_tick <= tick:
            self._held = self._make_sample(self._next_tick / self.model.rate)
            self._next_tick += 1
        return self._held


def degrade_measurement(true_state: RigidBodyState, sensor: DegradedSensor,
                        t: float) -> RigidBodyState:
    """Functional alias for :meth:`DegradedSensor.measure`."""
    return sensor.measure(true_state, t)


class MotorBank:
    """ESC + motor dynamics for all rotors of one vehicle.

    Commanded inputs are signed squared speeds; the desired speed is their
    signed square root, clamped to the feasible range (a rotor cannot
    reverse, so negative demands saturate at speed_min), quantized, then
    tracked by a zero-order-hold discretized first-order lag. The reported
    speed adds proportional noise; the effective input returned to the
    physics is s * |s|.
    """

    def __init__(self, model: ActuatorModel, n_rotors: int, rng: np.random.Generator,
                 initial_speeds: np.ndarray | None = None):
        self.model = model
        self.rng = rng
        self.speeds = (np.zeros(n_rotors) if initial_speeds is None
                       else np.asarray(initial_speeds, dtype=float).copy())

    def quantize(self, u_cmd: np.ndarray) -> np.ndarray:
        """Desired rotor speeds after clamp and finite-resolution quantization."""
        m = self.model
        desired = np.sign(u_cmd) * np.sqrt(np.abs(u_cmd))
        desired = np.clip(desired, m.speed_min, m.speed_max)
        return m.speed_min + np.round((desired - m.speed_min) / m.quant_step) * m.quant_step

    def step(self, u_cmd: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
        """Advance motors by dt under command u_cmd; returns (speeds, u_effective)."""
        target = self.quantize(np.asarray(u_cmd, dtype=float))
        alpha = 1.0 - np.exp(-dt / self.model.motor_time_constant)
        self.speeds = self.speeds + alpha * (target - self.speeds)
        out = self.speeds
        if self.model.speed_noise_coeff > 0.0:
            out = out + self.model.speed_noise_coeff * np.abs(out) \
                * self.rng.standard_normal(out.size)
        return out, out * np.abs(out)


def actuate(u_commanded: np.ndarray, motors: MotorBank, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Functional alias for :meth:`MotorBank.step`."""
    return motors.step(u_commanded, dt)


def quat_to_rpy(q: np.ndarray) -> np.ndarray:
    """Roll-pitch-yaw (ZYX convention) of a unit quaternion, radians."""
    w, x, y, z = q
    roll = np.arctan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    pitch = np.arcsin(np.clip(2.0 * (w * y - z * x), -1.0, 1.0))
    yaw = np.arctan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))
    return np.array([roll, pitch, yaw])


def rpy_to_quat(rpy: np.ndarray) -> np.ndarray:
    """Unit quaternion for roll-pitch-yaw angles (ZYX convention), radians."""
    e1 = np.array([1.0, 0.0, 0.0])
    e2 = np.array([0.0, 1.0, 0.0])
    e3 = np.array([0.0, 0.0, 1.0])
    return quat.product(quat.from_axis_angle(rpy[2], e3),
                        quat.product(quat.from_axis_angle(rpy[1], e2),
                                     quat.from_axis_angle(rpy[0], e1)))


@dataclass
class SimTrace:
    """Time-indexed record of one run; arrays share the leading time axis."""

    t: np.ndarray
    p: np.ndarray
    q: np.ndarray
    v: np.ndarray
    omega: np.ndarray
    e_p: np.ndarray
    rpy_delta: np.ndarray
    f_delta: np.ndarray
    f: np.ndarray
    u_cmd: np.ndarray
    rotor_speeds: np.ndarray
    tau_r: np.ndarray | None = None
    error: str | None = None

    @property
    def n_rotors(self) -> int:
        return self.u_cmd.shape[1]

    def columns(self) -> list[str]:
        n = self.n_rotors
        return (["t", "px", "py", "pz", "qw", "qx", "qy", "qz",
                 "vx", "vy", "vz", "wx", "wy", "wz", "epx", "epy", "epz",
                 "roll_d", "pitch_d", "yaw_d", "fdx", "fdy", "fdz", "f"]
                + [f"u{i+1}" for i in range(n)] + [f"s{i+1}" for i in range(n)])

    def as_matrix(self) -> np.ndarray:
        return np.column_stack([
            self.t, self.p, self.q, self.v, self.omega, self.e_p,
            self.rpy_delta, self.f_delta, self.f, self.u_cmd, self.rotor_speeds,
        ]) if len(self.t) else np.empty((0, len(self.columns())))

    def to_csv(self, path: str | Path) -> None:
        rows = self.as_matrix()
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(self.columns()) + "\n")
            for row in rows:
                # repr of builtin float: shortest exact round-trip form
                fh.write(",".join(repr(float(x)) for x in row) + "\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "SimTrace":
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            body = fh.read()
        n = (len(header) - 24) // 2
        if n < 1 or len(header) != 24 + 2 * n:
            raise ValueError(f"unexpected column count {len(header)}")
        if body.strip():
            data = np.loadtxt(body.splitlines(), delimiter=",", ndmin=2)
        else:
            data = np.empty((0, len(header)))
        return cls(
            t=data[:, 0], p=data[:, 1:4], q=data[:, 4:8], v=data[:, 8:11],
            omega=data[:, 11:14], e_p=data[:, 14:17], rpy_delta=data[:, 17:20],
            f_delta=data[:, 20:23], f=data[:, 23],
            u_cmd=data[:, 24:24 + n], rotor_speeds=data[:, 24 + n:24 + 2 * n],
        )


@dataclass(frozen=True)
class Scenario:
    """One closed-loop experiment.

    ``mode`` selects between the exact loop ("ideal": true-state feedback,
    commands applied directly) and the degraded one ("realistic": sensor and
    actuator models active, defaults applied when not given). The physics
    step defaults to 0.2 ms ideal / 1 ms realistic and must divide the
    control period.
    """

    p_r: np.ndarray
    initial: RigidBodyState
    duration: float
    q_r: np.ndarray | None = None
    mode: str = "ideal"
    sensor: SensorModel | None = None
    actuator: ActuatorModel | None = None
    seed: int = 0
    dt_physics: float | None = None
    control_rate: float = 500.0
    record_every: int = 1

    def __post_init__(self):
        object.__setattr__(self, "p_r", np.asarray(self.p_r, dtype=float))
        if self.mode not in ("ideal", "realistic"):
            raise ValueError(f"mode must be 'ideal' or 'realistic', got {self.mode!r}")
        if self.duration < 0.0:
            raise ValueError("duration must be nonnegative")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    def resolved_dt_physics(self) -> float:
        return self.dt_physics if self.dt_physics is not None else \
            (1e-3 if self.mode == "realistic" else 2e-4)


def run_scenario(model: PlatformModel, allocation: Allocation, gains: Gains,
                 scenario: Scenario, g: float = GRAVITY) -> SimTrace:
    """Run one closed-loop experiment and record its trace.

    Controller faults and integration blowups do not raise; they stop the run
    and come back as the ``error`` tag on the (partial) trace.
    """
    dt_ctrl = 1.0 / scenario.control_rate
    dt_phys = scenario.resolved_dt_physics()
    steps_per_ctrl = int(round(dt_ctrl / dt_phys))
    if abs(steps_per_ctrl * dt_phys - dt_ctrl) > 1e-12:
        raise ValueError("physics step must divide the control period")

    realistic = scenario.mode == "realistic"
    rng = np.random.default_rng(scenario.seed)
    sensor = DegradedSensor(scenario.sensor or SensorModel(), rng) if realistic else None
    act_model = (scenario.actuator or ActuatorModel()) if realistic else None
    motors: MotorBank | None = None

    state = scenario.initial
    t = 0.0
    meas = sensor.measure(state, t) if sensor else state
    ctrl = initial_state(meas.q, model.mass, g)

    rec: dict[str, list] = {k: [] for k in
                            ("t", "p", "q", "v", "omega", "e_p", "rpy_delta",
                             "f_delta", "f", "u_cmd", "speeds", "tau_r")}
    error: str | None = None
    n_ctrl = int(round(scenario.duration * scenario.control_rate))
    for k in range(n_ctrl):
        if k > 0:
            meas = sensor.measure(state, t) if sensor else state
        try:
            out, ctrl_next = controller_step(model, allocation, gains, meas,
                                             scenario.p_r, ctrl, dt_ctrl,
                                             scenario.q_r, g=g)
        except (ThrustSingularity, ControllerFault) as exc:
            error = f"{type(exc).__name__}: {exc}"
            break
        if realistic and motors is None:
            # motors start already tracking the first command (no spin-up transient)
            motors = MotorBank(act_model, model.n_rotors, rng)
            motors.speeds = motors.quantize(out.u)
        if k % scenario.record_every == 0:
            _record(rec, t, state, out, ctrl, scenario.p_r, motors)
        try:
            for _ in range(steps_per_ctrl):
                if motors is not None:
                    _, u_eff = motors.step(out.u, dt_phys)
                else:
                    u_eff = out.u
                state = rk4_step(model, state, u_eff, dt_phys, g)
                t += dt_phys
                if sensor:
                    sensor.push(t, state)
        except IntegrationDiverged as exc:
            error = f"IntegrationDiverged: {exc}"
            break
        ctrl = ctrl_next

    n = model.n_rotors
    empty = lambda *shape: np.empty((0, *shape))
    return SimTrace(
        t=np.array(rec["t"]),
        p=np.array(rec["p"]) if rec["p"] else empty(3),
        q=np.array(rec["q"]) if rec["q"] else empty(4),
        v=np.array(rec["v"]) if rec["v"] else empty(3),
        omega=np.array(rec["omega"]) if rec["omega"] else empty(3),
        e_p=np.array(rec["e_p"]) if rec["e_p"] else empty(3),
        rpy_delta=np.array(rec["rpy_delta"]) if rec["rpy_delta"] else empty(3),
        f_delta=np.array(rec["f_delta"]) if rec["f_delta"] else empty(3),
        f=np.array(rec["f"]),
        u_cmd=np.array(rec["u_cmd"]) if rec["u_cmd"] else empty(n),
        rotor_speeds=np.array(rec["speeds"]) if rec["speeds"] else empty(n),
        tau_r=np.array(rec["tau_r"]) if rec["tau_r"] else empty(3),
        error=error,
    )


def _record(rec: dict, t: float, state: RigidBodyState, out: ControlOutput,
            ctrl: ControllerState, p_r: np.ndarray, motors: MotorBank | None) -> None:
    rec["t"].append(t)
    rec["p"].append(state.p.copy())
    rec["q"].append(state.q.copy())
    rec["v"].append(state.v.copy())
    rec["omega"].append(state.omega.copy())
    rec["e_p"].append(state.p - p_r)
    q_delta_true = quat.product(quat.inverse(ctrl.q_d), state.q)
    rec["rpy_delta"].append(quat_to_rpy(quat.normalize(q_delta_true)))
    rec["f_delta"].append(out.f_delta.copy())
    rec["f"].append(ctrl.f)
    rec["u_cmd"].append(out.u.copy())
    if motors is not None:
        rec["speeds"].append(motors.speeds.copy())
    else:
        rec["speeds"].append(np.sign(out.u) * np.sqrt(np.abs(out.u)))
    rec["tau_r"].append(out.tau_r.copy())


def summarize(trace: SimTrace, mass: float, g: float = GRAVITY,
              q_r: np.ndarray | None = None, d_star: np.ndarray | None = None,
              settle_threshold: float = 0.02) -> dict:
    """Summary metrics computed from trace columns only.

    Returns settling time (first time after which |e_p| stays below the
    threshold; None if it never settles, 0.0 if it always was), the relative
    thrust offset |f - m g| / (m g) averaged over the last tenth of the run,
    the peak rotor speed, and, when a reference attitude and zero-moment
    direction are given, the final |d_star . eps'| attitude offset around
    d_star (q_d is reconstructed from the recorded true attitude and the
    attitude-error angles).
    """
    out: dict = {"settling_time": None, "steady_f_rel": None,
                 "max_rotor_speed": None, "final_orientation_offset": None,
                 "error": trace.error}
    if len(trace.t) == 0:
        return out
    ep_norm = np.linalg.norm(trace.e_p, axis=1)
    above = np.where(ep_norm >= settle_threshold)[0]
    if len(above) == 0:
        out["settling_time"] = 0.0
    elif above[-1] + 1 < len(trace.t):
        out["settling_time"] = float(trace.t[above[-1] + 1])
    tail = max(1, len(trace.t) // 10)
    out["steady_f_rel"] = float(np.mean(np.abs(trace.f[-tail:] - mass * g)) / (mass * g))
    out["max_rotor_speed"] = float(np.abs(trace.rotor_speeds).max())
    if q_r is not None and d_star is not None:
        q_delta = rpy_to_quat(trace.rpy_delta[-1])
        q_d = quat.product(trace.q[-1], quat.inverse(q_delta))
        eps_off = quat.product(quat.inverse(q_r), quat.normalize(q_d))[1:]
        out["final_orientation_offset"] = float(abs(d_star @ eps_off))
    return out
