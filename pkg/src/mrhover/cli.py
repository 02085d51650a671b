"""Batch command-line interface.

Subcommands:

- ``validate <platform.json>``: allocation analysis report for a platform
  definition; exit 0 when the decoupling condition holds, 1 when it does
  not, 2 on unreadable input.
- ``run <scenario.json> [...] [--out CSV] [--seed S] [--jobs N]``: run
  scenarios, write trace CSVs, print summary metrics; exit 1 if any run
  aborted (partial trace written), 2 on unreadable input.
- ``report <trace.csv> [--out-dir DIR]``: render the standard figures from
  an existing trace CSV, written alongside it by default.

Configs are JSON; angles are degrees in files, radians internally. See the
README for the schemas.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import quat
from .controller import Gains
from .dynamics import RigidBodyState
from .errors import AllocationError, InvalidPlatform
from .platform import (PlatformModel, check_decoupling, load_platform,
                       moment_pseudoinverse, platform_from_dict, zero_moment_direction)
from .simkit import ActuatorModel, Scenario, SensorModel, run_scenario, summarize

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_BADINPUT = 2


def _fmt_vec(v: np.ndarray) -> str:
    return "[" + ", ".join(f"{x: .6e}" for x in v) + "]"


def cmd_validate(args) -> int:
    try:
        model = load_platform(args.platform)
    except (InvalidPlatform, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BADINPUT
    diag = check_decoupling(model.F, model.M)
    print(f"platform: {model.n_rotors} rotors, mass {model.mass:.3f} kg")
    print(f"rank(F) = {diag.rank_f}")
    print(f"rank(M) = {diag.rank_m}")
    print(f"rank(M Fbar) = {diag.rank_m_fbar}")
    print(f"rank(F Mbar) = {diag.rank_f_mbar}")
    if not diag.decoupled:
        print("verdict: NOT decoupled (rank(M Fbar) != 3); controller prerequisites fail")
        return EXIT_FAILED
    u_bar, d_star = zero_moment_direction(model.F, model.M)
    _, m_pinv = moment_pseudoinverse(model.F, model.M)
    print(f"d_star = {_fmt_vec(d_star)}")
    print(f"u_bar  = {_fmt_vec(u_bar)}")
    print(f"|M u_bar|        = {np.linalg.norm(model.M @ u_bar):.3e}")
    print(f"||F u_bar| - 1|  = {abs(np.linalg.norm(model.F @ u_bar) - 1.0):.3e}")
    print(f"|F m_pinv|_max   = {np.abs(model.F @ m_pinv).max():.3e}")
    print(f"|M m_pinv - I|_max = {np.abs(model.M @ m_pinv - np.eye(3)).max():.3e}")
    print("verdict: decoupled (zero-moment hover controllable)")
    return EXIT_OK


def _axis_angle_from_config(entry: dict) -> np.ndarray:
    axis = np.asarray(entry["axis"], dtype=float)
    axis = axis / np.linalg.norm(axis)
    return quat.from_axis_angle(np.radians(float(entry["angle_deg"])), axis)


def parse_scenario(data: dict, base_dir: Path) -> tuple[PlatformModel, Gains, Scenario, str | None]:
    """Build (model, gains, scenario, output) from a parsed scenario config."""
    plat = data["platform"]
    if isinstance(plat, str):
        model = load_platform((base_dir / plat) if not Path(plat).is_absolute() else plat)
    else:
        model = platform_from_dict(plat)
    g = data["gains"]
    gains = Gains(k_pp=float(g["k_pp"]), k_pd=float(g["k_pd"]),
                  k_delta=float(g["k_delta"]), k_ap=float(g["k_ap"]),
                  k_ad=float(g["k_ad"]), k_q=float(g.get("k_q", 0.0)))
    init = data.get("initial", {})
    q0 = _axis_angle_from_config(init["attitude"]) if "attitude" in init else quat.identity()
    initial = RigidBodyState(
        p=np.asarray(init.get("position", [0.0, 0.0, 0.0]), dtype=float),
        q=q0,
        v=np.asarray(init.get("velocity", [0.0, 0.0, 0.0]), dtype=float),
        omega=np.asarray(init.get("omega", [0.0, 0.0, 0.0]), dtype=float),
    )
    q_r = _axis_angle_from_config(data["q_r"]) if "q_r" in data else None
    sensor = SensorModel(**data["sensor"]) if "sensor" in data else None
    actuator = ActuatorModel(**data["actuator"]) if "actuator" in data else None
    scenario = Scenario(
        p_r=np.asarray(data["p_r"], dtype=float),
        initial=initial,
        duration=float(data["duration"]),
        q_r=q_r,
        mode=data.get("mode", "ideal"),
        sensor=sensor,
        actuator=actuator,
        seed=int(data.get("seed", 0)),
        dt_physics=float(data["dt_physics"]) if "dt_physics" in data else None,
        control_rate=float(data.get("control_rate", 500.0)),
        record_every=int(data.get("record_every", 1)),
    )
    return model, gains, scenario, data.get("output")


def load_scenario(path: str | Path) -> tuple[PlatformModel, Gains, Scenario, str | None]:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return parse_scenario(data, path.parent)


def _run_one(path: Path, out_override: str | None, seed_override: int | None) -> int:
    try:
        model, gains, scenario, output = load_scenario(path)
    except (KeyError, TypeError, ValueError, InvalidPlatform, OSError, json.JSONDecodeError) as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return EXIT_BADINPUT
    try:
        allocation = model.allocation()
    except AllocationError as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return EXIT_FAILED
    if seed_override is not None:
        scenario = Scenario(**{**scenario.__dict__, "seed": seed_override})
    out_path = Path(out_override) if out_override else (
        (path.parent / output) if output else path.with_suffix(".trace.csv"))
    trace = run_scenario(model, allocation, gains, scenario)
    trace.to_csv(out_path)
    summary = summarize(trace, model.mass, q_r=scenario.q_r, d_star=allocation.d_star)
    print(f"scenario: {path}")
    print(f"trace: {out_path} ({len(trace.t)} records)")
    st = summary["settling_time"]
    print(f"settling time (|e_p| < 0.02 m): {'not settled' if st is None else f'{st:.3f} s'}")
    if summary["steady_f_rel"] is not None:
        print(f"steady-state |f - mg|/mg: {summary['steady_f_rel']:.3e}")
        print(f"max rotor speed: {summary['max_rotor_speed']:.3f}")
    if summary["final_orientation_offset"] is not None:
        print(f"final |d_star . eps'|: {summary['final_orientation_offset']:.3e}")
    if trace.error is not None:
        print(f"PARTIAL TRACE: {trace.error}")
        return EXIT_FAILED
    return EXIT_OK


def cmd_run(args) -> int:
    if args.out and len(args.scenario) > 1:
        print("error: --out is only valid with a single scenario", file=sys.stderr)
        return EXIT_BADINPUT
    paths = [Path(p) for p in args.scenario]
    if args.jobs > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(lambda p: _run_one(p, None, args.seed), paths))
        return max(codes)
    codes = [_run_one(p, args.out, args.seed) for p in paths]
    return max(codes)


def cmd_report(args) -> int:
    from .plots import render_trace_figures
    from .simkit import SimTrace

    path = Path(args.trace)
    try:
        trace = SimTrace.from_csv(path)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BADINPUT
    out_dir = Path(args.out_dir) if args.out_dir else path.parent
    written = render_trace_figures(trace, out_dir, path.stem)
    for w in written:
        print(f"wrote {w}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrhover",
                                     description="Tilted-multirotor hover control toolbox")
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="allocation analysis of a platform file")
    p_val.add_argument("platform", help="platform definition JSON")
    p_val.set_defaults(func=cmd_validate)

    p_run = sub.add_parser("run", help="run scenario(s), write trace CSV(s)")
    p_run.add_argument("scenario", nargs="+", help="scenario JSON file(s)")
    p_run.add_argument("--out", default=None, help="trace CSV path (single scenario only)")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel workers for multiple scenarios")
    p_run.set_defaults(func=cmd_run)

    p_rep = sub.add_parser("report", help="render figures from a trace CSV")
    p_rep.add_argument("trace", help="trace CSV produced by 'run'")
    p_rep.add_argument("--out-dir", default=None, help="figure directory (default: next to the CSV)")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
