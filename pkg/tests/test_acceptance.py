"""End-to-end acceptance suite.

Each test prints one live pass/fail line (visible even under output capture)
and enforces its stated tolerance and runtime budget.
"""

import time

import numpy as np
import pytest

from mrhover import analysis, controller as ctl, platform as pf, quat
from mrhover.controller import Gains
from mrhover.dynamics import GRAVITY, RigidBodyState
from mrhover.simkit import (ActuatorModel, DegradedSensor, MotorBank, Scenario,
                            SensorModel, run_scenario, rpy_to_quat)

from conftest import E1, E3

TILT20 = quat.from_axis_angle(np.radians(20.0), np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0))
YAW45 = quat.from_axis_angle(np.pi / 4, E3)
GAINS = Gains(k_pp=4.0, k_pd=4.0, k_delta=2.0, k_ap=2.0, k_ad=0.2)
GAINS_EXT = Gains(k_pp=4.0, k_pd=4.0, k_delta=2.0, k_ap=2.0, k_ad=0.2, k_q=2.0)

_cache: dict = {}


@pytest.fixture
def report(capsys):
    def _report(num, desc, ok, detail=""):
        with capsys.disabled():
            print(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {desc}{detail}")
        assert ok, f"criterion {num}: {desc}{detail}"
    return _report


def hover_scenario(duration=15.0, q_r=None, seed=0, mode="ideal", **kw):
    return Scenario(
        p_r=np.zeros(3),
        initial=RigidBodyState.at_rest(p=(1.0, 0.0, 0.0), q=TILT20),
        duration=duration, q_r=q_r, mode=mode, seed=seed, record_every=2, **kw)


def ideal_hover_run(model, allocation):
    if "ideal" not in _cache:
        _cache["ideal"] = run_scenario(model, allocation, GAINS, hover_scenario())
    return _cache["ideal"]


def position_metrics(trace):
    ep = np.linalg.norm(trace.e_p, axis=1)
    late = trace.t >= 8.0
    above = np.where(ep >= 0.01)[0]
    settle = trace.t[above[-1] + 1] if len(above) and above[-1] + 1 < len(trace.t) else 0.0
    return np.array([ep[late].max(), ep[-1], settle])


def test_criterion_1_allocation_algebra(report):
    t0 = time.perf_counter()
    results = []
    for model in (pf.default_hexarotor(), pf.coplanar_quadrotor()):
        a = model.allocation()
        results.append(np.abs(model.F @ a.m_pinv).max() < 1e-9)
        results.append(np.abs(model.M @ a.m_pinv - np.eye(3)).max() < 1e-9)
        results.append(np.linalg.norm(model.M @ a.u_bar) < 1e-10)
        results.append(abs(np.linalg.norm(model.F @ a.u_bar) - 1.0) < 1e-12)
    elapsed = time.perf_counter() - t0
    ok = all(results) and elapsed < 1.0
    report(1, "allocation algebra on hexarotor and quadrotor",
           ok, f" ({elapsed:.2f} s)")


def test_criterion_2_rate_feedforward_identity(report, hexarotor, hex_allocation):
    t0 = time.perf_counter()
    worst = {}
    for label, gains, q_r in (("plain", GAINS, None), ("extension", GAINS_EXT, YAW45)):
        state = RigidBodyState.at_rest(p=(1.0, 0.0, 0.0), q=TILT20)
        cs = ctl.initial_state(state.q, hexarotor.mass)
        p_r = np.zeros(3)
        _, samples = analysis.simulate_loop(hexarotor, hex_allocation, gains, state,
                                            cs, p_r, duration=5.0, dt=1e-3,
                                            sample_every=10, q_r=q_r)
        h = 1e-5
        w = 0.0
        for y in samples:
            yp = analysis.loop_step(hexarotor, hex_allocation, gains, y.copy(), p_r, +h, q_r)
            ym = analysis.loop_step(hexarotor, hex_allocation, gains, y.copy(), p_r, -h, q_r)
            fd = (_omega_d(hexarotor, hex_allocation, gains, yp, p_r, q_r)
                  - _omega_d(hexarotor, hex_allocation, gains, ym, p_r, q_r)) / (2.0 * h)
            st, c = analysis.unpack(y)
            f_r = ctl.reference_force(st.p - p_r, st.v, gains, hexarotor.mass)
            f_delta = ctl.force_mismatch(c.q_d, hex_allocation.d_star, c.f, f_r)
            omega_dd = ctl.desired_angular_acceleration(
                st.q, c.q_d, hex_allocation.d_star, c.f, st.p - p_r, st.v, f_delta,
                gains, hexarotor.mass, q_r)
            w = max(w, np.linalg.norm(omega_dd - fd) / (np.linalg.norm(fd) + 1e-9))
        worst[label] = w
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-4 and elapsed < 30.0
    report(2, "rate feedforward equals d/dt of desired rate along solutions", ok,
           f" (max rel {worst['plain']:.2e} plain, {worst['extension']:.2e} ext,"
           f" {elapsed:.1f} s)")


def _omega_d(model, allocation, gains, y, p_r, q_r):
    st, c = analysis.unpack(y)
    f_r = ctl.reference_force(st.p - p_r, st.v, gains, model.mass)
    f_delta = ctl.force_mismatch(c.q_d, allocation.d_star, c.f, f_r)
    nu = ctl.mismatch_steering(st.p - p_r, st.v, f_delta, gains, model.mass)
    return ctl.desired_angular_velocity(c.q_d, allocation.d_star, c.f, nu, q_r, gains.k_q)


def _f_delta(model, allocation, gains, y, p_r):
    st, c = analysis.unpack(y)
    f_r = ctl.reference_force(st.p - p_r, st.v, gains, model.mass)
    return ctl.force_mismatch(c.q_d, allocation.d_star, c.f, f_r)


def test_criterion_3_mismatch_decay_law(report, hexarotor, hex_allocation):
    t0 = time.perf_counter()
    worst = 0.0
    p_r = np.zeros(3)
    for k_delta in (0.5, 1.0, 2.0):
        gains = Gains(k_pp=4.0, k_pd=4.0, k_delta=k_delta, k_ap=2.0, k_ad=0.2)
        state = RigidBodyState.at_rest(p=(1.0, 0.0, 0.0))
        cs = ctl.initial_state(state.q, hexarotor.mass)
        y = analysis.pack(state, cs)
        y[10:13] = _omega_d(hexarotor, hex_allocation, gains, y, p_r, None)
        _, samples = analysis.simulate_loop(hexarotor, hex_allocation, gains,
                                            *analysis.unpack(y), p_r,
                                            duration=2.0, dt=1e-3, sample_every=25)
        h = 1e-5
        for y in samples:
            yp = analysis.loop_step(hexarotor, hex_allocation, gains, y.copy(), p_r, +h)
            ym = analysis.loop_step(hexarotor, hex_allocation, gains, y.copy(), p_r, -h)
            fd = (_f_delta(hexarotor, hex_allocation, gains, yp, p_r)
                  - _f_delta(hexarotor, hex_allocation, gains, ym, p_r)) / (2.0 * h)
            f_delta = _f_delta(hexarotor, hex_allocation, gains, y, p_r)
            resid = np.linalg.norm(fd + k_delta * f_delta) / (np.linalg.norm(f_delta) + 1e-9)
            worst = max(worst, resid)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-3 and elapsed < 10.0
    report(3, "force mismatch decays at its design rate on the attitude-matched set",
           ok, f" (max resid {worst:.2e}, k in {{0.5,1,2}}, {elapsed:.1f} s)")


def _fd5(fn, h):
    return (8.0 * (fn(h) - fn(-h)) - (fn(2.0 * h) - fn(-2.0 * h))) / (12.0 * h)


def test_criterion_4_lyapunov_derivative_laws(report, hexarotor):
    t0 = time.perf_counter()
    J, J_inv = hexarotor.inertia, hexarotor.inertia_inv
    k_ap, k_ad = GAINS.k_ap, GAINS.k_ad
    m, k_pp, k_pd = hexarotor.mass, GAINS.k_pp, GAINS.k_pd

    def rk4(rhs, x, h, renorm=None):
        k1 = rhs(x); k2 = rhs(x + 0.5 * h * k1)
        k3 = rhs(x + 0.5 * h * k2); k4 = rhs(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        return renorm(x) if renorm else x

    def run_law(rhs, value, instant_rate, x0, n, renorm=None):
        # pointwise fourth-order differences, masked away from rate zeros,
        # plus the integrated form of the same law over the full window
        x = x0.copy()
        fds, preds, vals, rates = [], [], [value(x)], [instant_rate(x)]
        for k in range(n):
            if k % 20 == 0:
                fds.append(_fd5(lambda s: value(rk4(rhs, x.copy(), s, renorm)), 1e-5))
                preds.append(instant_rate(x))
            x = rk4(rhs, x, 1e-3, renorm)
            vals.append(value(x))
            rates.append(instant_rate(x))
        fds, preds = np.array(fds), np.array(preds)
        mask = np.abs(preds) >= 1e-2 * np.abs(preds).max()
        rel_point = (np.abs(fds[mask] - preds[mask]) / np.abs(preds[mask])).max()
        # composite Simpson on the dense grid; both sides O(V(0))
        r = np.array(rates)
        integral = (1e-3 / 3.0) * (r[0] + r[-1] + 4.0 * r[1:-1:2].sum() + 2.0 * r[2:-1:2].sum())
        rel_int = abs((vals[-1] - vals[0]) - integral) / abs(vals[0] - vals[-1])
        return rel_point, rel_int

    def att_rhs(x):
        return np.concatenate([quat.qdot_body(x[:4], x[4:]),
                               J_inv @ (-k_ap * x[:4][1:] - k_ad * x[4:])])

    def att_renorm(x):
        return np.concatenate([quat.normalize(x[:4]), x[4:]])

    axis = np.array([1.0, -2.0, 0.5]); axis /= np.linalg.norm(axis)
    x0 = np.concatenate([quat.from_axis_angle(0.5, axis), [0.3, -0.2, 0.4]])
    rel_a, rel_a_int = run_law(
        att_rhs,
        lambda x: 2.0 * k_ap * (1.0 - x[0]) + 0.5 * x[4:] @ J @ x[4:],
        lambda x: -k_ad * float(x[4:] @ x[4:]),
        x0, 2000, att_renorm)

    def tr_rhs(x):
        return np.concatenate([x[3:], (-k_pp * x[:3] - k_pd * x[3:]) / m])

    x0 = np.concatenate([[1.0, 0.5, -0.3], np.zeros(3)])
    rel_p, rel_p_int = run_law(
        tr_rhs,
        lambda x: 0.5 * m * x[3:] @ x[3:] + 0.5 * k_pp * x[:3] @ x[:3],
        lambda x: -k_pd * float(x[3:] @ x[3:]),
        x0, 3000)

    elapsed = time.perf_counter() - t0
    ok = max(rel_a, rel_p, rel_a_int, rel_p_int) < 1e-6 and elapsed < 10.0
    report(4, "attitude and translational energy dissipation laws", ok,
           f" (pointwise {max(rel_a, rel_p):.2e}, integral {max(rel_a_int, rel_p_int):.2e},"
           f" {elapsed:.1f} s)")


def test_criterion_5_hover_convergence_ideal(report, hexarotor, hex_allocation):
    t0 = time.perf_counter()
    trace = ideal_hover_run(hexarotor, hex_allocation)
    elapsed = time.perf_counter() - t0
    late = trace.t >= 8.0
    ep = np.linalg.norm(trace.e_p, axis=1)
    wn = np.linalg.norm(trace.omega, axis=1)
    mg = hexarotor.mass * GRAVITY
    f_rel_end = abs(trace.f[-1] - mg) / mg
    from mrhover.simkit import summarize
    settle = summarize(trace, hexarotor.mass)["settling_time"]
    ok = (trace.error is None and ep[late].max() < 0.01 and wn[late].max() < 0.01
          and f_rel_end < 1e-3 and settle is not None and settle < 8.0
          and elapsed < 30.0)
    report(5, "ideal hover from 1 m / 20 deg offset", ok,
           f" (settle {settle:.2f} s, |e_p| {ep[late].max():.1e}, |w| {wn[late].max():.1e},"
           f" |f-mg|/mg {f_rel_end:.1e} at 15 s, {elapsed:.1f} s)")


def test_criterion_6_hover_convergence_realistic(report, hexarotor, hex_allocation):
    t0 = time.perf_counter()
    trace = run_scenario(hexarotor, hex_allocation, GAINS,
                         hover_scenario(duration=20.0, mode="realistic", seed=12345))
    elapsed = time.perf_counter() - t0
    sel = trace.t >= 10.0
    rms = float(np.sqrt(np.mean(np.sum(trace.e_p[sel] ** 2, axis=1))))
    ok = trace.error is None and rms < 0.05 and elapsed < 60.0
    report(6, "realistic hover (noise, delay, multi-rate, ESC model)", ok,
           f" (RMS e_p [10,20] = {rms:.4f} m, no fault, {elapsed:.1f} s)")


def test_criterion_7_restricted_orientation_tracking(report, hexarotor, hex_allocation):
    baseline = ideal_hover_run(hexarotor, hex_allocation)
    ext = run_scenario(hexarotor, hex_allocation, GAINS_EXT,
                       hover_scenario(q_r=YAW45))
    # alignment error around d_star from the recorded columns
    d = hex_allocation.d_star
    s = np.empty(len(ext.t))
    for i in range(len(ext.t)):
        q_delta = rpy_to_quat(ext.rpy_delta[i])
        q_d = quat.product(ext.q[i], quat.inverse(q_delta))
        s[i] = abs(d @ quat.product(quat.inverse(YAW45), quat.normalize(q_d))[1:])
    late = ext.t >= 8.0
    s_late = s[late]
    monotone = bool(np.all(np.diff(s_late) <= 1e-9 + 1e-6 * s_late[:-1]))
    ep = np.linalg.norm(ext.e_p, axis=1)
    wn = np.linalg.norm(ext.omega, axis=1)
    position_ok = ep[late].max() < 0.01 and wn[late].max() < 0.01
    # with the tracking gain zeroed the extension must change nothing
    disabled = run_scenario(hexarotor, hex_allocation, GAINS,
                            hover_scenario(q_r=YAW45))
    drift = np.abs(position_metrics(disabled) - position_metrics(baseline)).max()
    ok = monotone and s[-1] < 1e-3 and position_ok and drift < 1e-6
    report(7, "restricted attitude tracking around the zero-moment direction", ok,
           f" (final offset {s[-1]:.1e}, monotone after 8 s: {monotone},"
           f" disabled-gain drift {drift:.1e})")


def test_criterion_8_degradation_calibration(report):
    sensor_model = SensorModel(delay=0.0, rate=1000.0)
    sensor = DegradedSensor(sensor_model, np.random.default_rng(2718))
    ref = RigidBodyState.at_rest()
    n = 100_000
    dp = np.empty((n, 3)); dv = np.empty((n, 3)); dw = np.empty((n, 3)); dq = np.empty((n, 3))
    for k in range(n):
        meas = sensor.measure(ref, k / 1000.0)
        dp[k] = meas.p
        dv[k] = meas.v
        dw[k] = meas.omega
        dq[k] = 2.0 * quat.product(quat.inverse(ref.q), meas.q)[1:]
    noise_ok = True
    rels = []
    for sample, target in ((dp, sensor_model.std_p), (dv, sensor_model.std_v),
                           (dw, sensor_model.std_omega), (dq, sensor_model.std_q)):
        rel = np.abs(sample.std(axis=0, ddof=1) - target) / target
        rels.append(rel.max())
        noise_ok = noise_ok and rel.max() < 0.03

    act = ActuatorModel(speed_noise_coeff=0.0)
    bank = MotorBank(act, 1, np.random.default_rng(0))
    target = bank.quantize(np.array([1600.0]))[0]
    dt = 1e-3
    level = (1.0 - np.exp(-1.0)) * target
    t_cross = None
    for k in range(1, 12):
        if bank.step(np.array([1600.0]), dt)[0][0] >= level - 1e-12:
            t_cross = k * dt
            break
    motor_ok = t_cross is not None and abs(t_cross - 0.005) <= dt + 1e-12
    ok = noise_ok and motor_ok
    report(8, "sensor noise stds and motor step response calibrated", ok,
           f" (worst std rel err {max(rels):.3f}, 63.2% at {t_cross} s)")


def test_criterion_9_determinism(report, hexarotor, hex_allocation, tmp_path):
    scen = hover_scenario(duration=20.0, mode="realistic", seed=12345)
    a = run_scenario(hexarotor, hex_allocation, GAINS, scen)
    b = run_scenario(hexarotor, hex_allocation, GAINS, scen)
    fa, fb = tmp_path / "a.csv", tmp_path / "b.csv"
    a.to_csv(fa)
    b.to_csv(fb)
    ok = fa.read_bytes() == fb.read_bytes()
    report(9, "same seed reproduces the realistic trace byte for byte", ok,
           f" ({fa.stat().st_size} bytes each)")
