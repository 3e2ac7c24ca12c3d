"""Command-line interface: runs, diagrams, self-test, design inspection.

Commands
--------
run       execute a builtin or config-file scenario and write artifacts
diagram   render the characteristics space-time picture (CSV + SVG)
selftest  run the fast invariant table
catalog   list builtin scenarios
filter    print a channel-filter frequency-response table

Exit codes: 0 success, 1 selftest failure, 2 invalid configuration,
3 physics abort (e.g. the critical current is reached), 4 I/O failure.

Every flag has a config-file equivalent; flags win, and the effective
config is what lands in provenance.txt. No command writes outside its
--output-dir.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import svg
from .characteristics import spacetime_diagram
from .core import Waveform, WavePacketSpec, default_line
from .ddc import FilterSpec, down_convert, filter_response, instantaneous_shift
from .errors import DopplerlineError, ValidationError
from .experiments import (
    builtin_catalog,
    builtin_config,
    config_hash,
    run_scenario,
    scenario_from_config,
)
from .line_model import compose_doppler, doppler_ratio, exact_front_shift, \
    shift_from_current
from .solver import SolverConfig, run as solve_line
from .synth import synth_wave_packet
from .units import si

_SCHEMAS = """\
CSV schemas (comma-separated, one header line):
  ports.csv     t_s,left_out_v,right_out_v,left_in_v,right_in_v
                port-mode records, decimated to at most 20 GS/s
  iq_fd*.csv    t_s,i,q  baseband quadratures; the LO is in the file name
  map.csv       header row: t_s (run) or delta_t_s (merged sweep) followed
                by the f_d axis; one row per time/delay, |IQ| per column
  finst.csv     t_s,delta_f_measured_hz,delta_f_oracle_hz
  summary.csv   run_id,label,<one column per derived scalar>
  crossval.csv  axis_value_s,delta_f_parabola_hz,delta_f_phase_hz,
                delta_f_oracle_hz
  diagram.csv   t_s,x_m,cp_current_a  (long-format grid)
  rays.csv      entry_time_s,t_s,x_m,omega_ratio
  response.csv  f_hz,gain  (filter command)
"""

_RAW = argparse.RawDescriptionHelpFormatter


# --------------------------------------------------------------------------
# config loading and overrides


def _load_config(args) -> dict:
    if args.scenario and args.config:
        raise ValidationError("give a builtin scenario name or --config, "
                              "not both")
    if args.config:
        text = Path(args.config).read_text()
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as err:
            raise ValidationError(f"config is not valid JSON: {err}") from err
        if not isinstance(cfg, dict):
            raise ValidationError("config must be a JSON object")
        return cfg
    if args.scenario:
        return builtin_config(args.scenario)
    raise ValidationError("need a builtin scenario name or --config FILE "
                          "(see: dopplerline catalog)")


def _apply_run_overrides(cfg: dict, args) -> None:
    """Fold physics-affecting flags into the config so provenance echoes
    what actually ran. Execution-level flags (jobs, output dir, plots)
    stay outside: they must not change the config hash."""
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.cfl is not None:
        cfg["cfl"] = args.cfl
    if args.duration is not None:
        cfg["duration"] = args.duration
    for value, key in ((args.cp_amplitude, "cp"), (args.wp_amplitude, "wp")):
        if value is None:
            continue
        block = cfg.get(key)
        if not isinstance(block, dict):
            raise ValidationError(f"scenario has no {key} block to override")
        block["amplitude"] = value
        sweep = cfg.get("sweep")
        if sweep and sweep.get("parameter") == f"{key}.amplitude":
            del cfg["sweep"]  # the flag pins the parameter the sweep varied


def _output_root(args, cfg: dict) -> Path:
    return Path(args.output_dir or cfg.get("output_dir") or "results")


# --------------------------------------------------------------------------
# run


def cmd_run(args) -> int:
    cfg = _load_config(args)
    _apply_run_overrides(cfg, args)
    out_root = _output_root(args, cfg)
    if args.jobs is not None:
        jobs = args.jobs
    else:
        jobs = int(cfg.get("jobs") or os.cpu_count() or 1)
    emit_plots = bool(cfg.get("plots", True)) and not args.no_plots

    scenario = scenario_from_config(cfg)
    result = run_scenario(scenario, output_dir=out_root, jobs=jobs)
    base = out_root / scenario.name
    if emit_plots:
        _emit_plots(result, base)

    print(f"{scenario.name}: {len(result.runs)} runs -> {base} "
          f"(config {result.config_hash})")
    for r in result.runs:
        notes = []
        for key in ("delta_f_parabola", "delta_f_phase", "delta_f_oracle"):
            if key in r.derived:
                tag = key.removeprefix("delta_f_")
                notes.append(f"{tag} {r.derived[key] / 1e6:+.3f} MHz")
        if "finst_rms" in r.derived:
            notes.append(f"inst rms {r.derived['finst_rms'] / 1e6:.3f} MHz")
        if "max_env_diff" in r.derived:
            notes.append(f"env diff {100 * r.derived['max_env_diff']:.2f}%")
        if "condition" in r.derived:
            notes.append(r.derived["condition"])
        line = " ".join(notes) or ("baseline" if r.spec.is_ref else "done")
        print(f"  {r.spec.run_id}: {line}")
    if "fit" in result.derived:
        fit = result.derived["fit"]
        print(f"  fit: i_star_hat = {fit.i_star_hat * 1e3:.4f} mA "
              f"({result.derived['fit_sense']}, "
              f"c4_hat = {fit.c4_hat:+.4f})")
    if "delay_map" in result.derived:
        m = result.derived["delay_map"]
        print(f"  delay map: {m.t_axis.size} delays x {m.f_d_axis.size} "
              "frequencies")
    return 0


def _emit_plots(result, base: Path) -> None:
    """SVG figures rendered next to the CSV artifacts they visualize."""
    name = result.scenario.name
    for r in result.runs:
        rdir = base / r.spec.run_id
        if r.finst is not None:
            svg.line_plot(
                rdir / "finst.svg",
                [
                    (r.finst.times() * 1e9, r.finst.samples / 1e6,
                     "measured"),
                    (r.finst_oracle.times() * 1e9,
                     r.finst_oracle.samples / 1e6, "characteristics",
                     "dashed"),
                ],
                title=f"{name} {r.spec.run_id}",
                x_label="time (ns)",
                y_label="instantaneous shift (MHz)",
            )
        if r.mag_map is not None:
            svg.heat_map(
                rdir / "map.svg",
                r.mag_map.t_axis * 1e9,
                r.mag_map.f_d_axis / 1e9,
                r.mag_map.values,
                title=f"{name} {r.spec.run_id}",
                x_label="time (ns)",
                y_label="demodulation frequency (GHz)",
            )
    if "delay_map" in result.derived:
        m = result.derived["delay_map"]
        svg.heat_map(
            base / "map.svg",
            m.t_axis * 1e9,
            m.f_d_axis / 1e9,
            m.values,
            title=f"{name} delay sweep",
            x_label="packet-to-pulse delay (ns)",
            y_label="demodulation frequency (GHz)",
        )
    if "fit" in result.derived:
        _emit_fit_plot(result, base)


def _emit_fit_plot(result, base: Path) -> None:
    fit = result.derived["fit"]
    sense = result.derived["fit_sense"]
    pts_i, pts_df = [], []
    for r in result.runs:
        if r.spec.is_ref or "i_cp" not in r.derived:
            continue
        df = r.derived.get("delta_f_parabola", r.derived.get("delta_f_phase"))
        if df is not None:
            pts_i.append(r.derived["i_cp"] * 1e3)
            pts_df.append(df / 1e6)
    if not pts_i:
        return
    omega_in = result.scenario.runs[-1].wp.omega_in
    ii = np.linspace(0.0, 1.02 * max(pts_i), 200)
    x = (ii * 1e-3 / fit.i_star_hat) ** 2
    mag = (omega_in / 4.0) * (x + fit.c4_hat * x * x) / (2e6 * math.pi)
    model = mag if sense == "blueshift" else -mag
    svg.line_plot(
        base / "fit.svg",
        [
            (np.asarray(pts_i), np.asarray(pts_df), "measured", "dots"),
            (ii, model, f"fit, i* = {fit.i_star_hat * 1e3:.3f} mA"),
        ],
        title=f"{result.scenario.name} amplitude sweep",
        x_label="pulse amplitude (mA)",
        y_label="carrier shift (MHz)",
    )


# --------------------------------------------------------------------------
# diagram


def cmd_diagram(args) -> int:
    cfg = _load_config(args)
    out_root = _output_root(args, cfg)
    scenario = scenario_from_config(cfg)
    if args.run is not None:
        if not 0 <= args.run < len(scenario.runs):
            raise ValidationError(
                f"--run must be in [0, {len(scenario.runs) - 1}]"
            )
        spec = scenario.runs[args.run]
    else:
        # middle of a sweep is where packet and pulse actually meet
        candidates = [r for r in scenario.runs if not r.is_ref]
        spec = (candidates or scenario.runs)[len(candidates) // 2]
    n = args.resolution
    diag = spacetime_diagram(scenario.line, spec.wp, spec.cp,
                             resolution=(n, n), n_rays=args.rays)
    base = out_root / f"{scenario.name}-diagram"
    base.mkdir(parents=True, exist_ok=True)

    tt, xx = np.meshgrid(diag.times, diag.positions, indexing="ij")
    np.savetxt(
        base / "diagram.csv",
        np.column_stack([tt.ravel(), xx.ravel(), diag.cp_current.ravel()]),
        delimiter=",", header="t_s,x_m,cp_current_a", comments="",
        fmt="%.9e",
    )
    blocks = [
        np.column_stack([
            np.full(ray.times.size, ray.entry_time),
            ray.times,
            ray.positions,
            np.full(ray.times.size, ray.omega_ratio),
        ])
        for ray in diag.rays
    ]
    np.savetxt(
        base / "rays.csv", np.vstack(blocks), delimiter=",",
        header="entry_time_s,t_s,x_m,omega_ratio", comments="", fmt="%.9e",
    )
    overlays = [
        (ray.positions * 1e3, ray.times * 1e9,
         f"entry {ray.entry_time * 1e9:.3g} ns")
        for ray in diag.rays
    ]
    svg.heat_map(
        base / "diagram.svg",
        diag.positions * 1e3,
        diag.times * 1e9,
        diag.cp_current * 1e3,
        overlays=overlays,
        title=f"{scenario.name}: pulse field (mA) and packet worldlines",
        x_label="position (mm)",
        y_label="time (ns)",
    )
    with open(base / "provenance.txt", "w") as fh:
        fh.write(f"scenario = {scenario.name}\n")
        fh.write(f"config_hash = {config_hash(cfg)}\n")
        fh.write(f"resolution = {n}\n")
        fh.write(f"rays = {args.rays}\n")
        fh.write("config = ")
        json.dump(cfg, fh, sort_keys=True)
        fh.write("\n")
    print(f"{scenario.name}: diagram -> {base}")
    for ray in diag.rays:
        print(f"  ray entry {ray.entry_time * 1e9:8.3f} ns: "
              f"omega ratio {ray.omega_ratio:.6f}")
    return 0


# --------------------------------------------------------------------------
# selftest

_DEFAULT_TOL = {
    "doppler": 1e-12,  # algebraic identities of the interface ratio
    "compose": 1e-2,   # composed crossings vs quadratic law, i <= 0.1 i*
    "magic": 1e-8,     # quiet-line transit error at the magic step
    "ddc": 1e-3,       # round-trip recovery of a +10 MHz tone offset
}


def _parse_tolerances(pairs) -> dict:
    tol = dict(_DEFAULT_TOL)
    for item in pairs:
        name, sep, value = item.partition("=")
        if not sep or name not in tol:
            raise ValidationError(
                f"tolerance must be name=value with name in "
                f"{sorted(tol)}, got {item!r}"
            )
        try:
            tol[name] = float(value)
        except ValueError as err:
            raise ValidationError(f"bad tolerance value in {item!r}") from err
    return tol


def _check_doppler() -> float:
    """Equal media and a static front are identities; a crossing followed
    by its mirror restores the carrier exactly."""
    worst = 0.0
    v1, v2 = 6.0e6, 4.8e6
    for v in (-6.0e6, -2.0e6, 1.5e6, 0.0):
        worst = max(worst, abs(doppler_ratio(v, v1, v1) - 1.0))
        om = compose_doppler(1.0, [(v, v1, v2), (v, v2, v1)])
        worst = max(worst, abs(om - 1.0))
    worst = max(worst, abs(doppler_ratio(0.0, v1, v2) - 1.0))
    return worst


def _check_compose() -> float:
    """Interface ratio with exact bias velocities vs the quadratic law."""
    line = default_line()
    omega_in = 2.0 * math.pi * 4.0e9
    worst = 0.0
    for i in np.linspace(0.05e-3, 0.1 * line.i_star, 8):
        quad = shift_from_current(omega_in, float(i), line)
        for sense, expected in (("rising", quad), ("falling", -quad)):
            exact = exact_front_shift(omega_in, float(i), line, sense=sense)
            worst = max(worst, abs(exact - expected) / abs(expected))
    return worst


def _check_magic() -> float:
    """A quiet line at the magic step transports the packet exactly."""
    line = default_line(tau_p=10e-9, n_cells=1600)
    wp = WavePacketSpec(omega_in=2.0 * math.pi * 4.0e9, tau_wp=4e-9,
                        amplitude=1e-9, delay=1e-9)
    cfg = SolverConfig(line=line, duration=3.0 * line.tau_p, cfl=1.0,
                       backend="numpy")
    wave = synth_wave_packet(wp, cfg.sample_rate, line)
    cfg = dataclasses.replace(cfg, left_drive=wave)
    ports = solve_line(cfg).ports
    lag = int(round(line.tau_p * ports.left_in.sample_rate))
    x = ports.left_in.samples
    y = ports.right_out.samples
    err = y[lag:] - x[: y.size - lag]
    return float(np.max(np.abs(err)) / np.max(np.abs(x)))


def _check_ddc() -> float:
    """A +10 MHz offset tone must come back at +10 MHz through the chain,
    by the instantaneous estimator and by the raw phase slope."""
    f0, off, rate = 4.0e9, 10.0e6, 20.0e9
    t = np.arange(int(rate * 1e-6)) / rate
    wave = Waveform(rate, 0.0, np.cos(2.0 * math.pi * (f0 + off) * t))
    iq = down_convert(wave, f0, filter_spec=FilterSpec(cutoff=42e6, taps=63),
                      target_rate=0.5e9)
    shift = instantaneous_shift(iq)
    s = shift.samples
    k = max(1, s.size // 4)
    err_inst = abs(float(np.median(s[k:-k])) - off) / off
    ph = np.unwrap(np.angle(iq.iq))
    a, b = iq.n // 4, 3 * iq.n // 4
    slope = np.polyfit(iq.times()[a:b], ph[a:b], 1)[0] / (2.0 * math.pi)
    err_phase = abs(slope - off) / off
    return max(err_inst, err_phase)


_CHECKS = (
    ("doppler-identity", _check_doppler, "doppler"),
    ("compose-quadratic", _check_compose, "compose"),
    ("magic-step", _check_magic, "magic"),
    ("ddc-roundtrip", _check_ddc, "ddc"),
)


def cmd_selftest(args) -> int:
    tol = _parse_tolerances(args.tolerance)
    rows, failed = [], []
    for name, fn, key in _CHECKS:
        value = fn()
        ok = value <= tol[key]
        rows.append((name, value, tol[key], ok))
        if not ok:
            failed.append(name)
    width = max(len(name) for name, *_ in rows)
    print(f"{'check':<{width}}  {'value':>10}  {'tolerance':>10}  status")
    for name, value, t, ok in rows:
        print(f"{name:<{width}}  {value:10.3e}  {t:10.3e}  "
              f"{'pass' if ok else 'FAIL'}")
    if failed:
        print(f"selftest: FAIL ({', '.join(failed)})", file=sys.stderr)
        return 1
    print("selftest: all checks passed")
    return 0


# --------------------------------------------------------------------------
# catalog and filter


def cmd_catalog(args) -> int:
    for sc in builtin_catalog():
        print(f"{sc.name:<6} {len(sc.runs):3d} runs  {sc.comment}")
    return 0


def cmd_filter(args) -> int:
    if args.points < 2:
        raise ValidationError("need at least 2 table points")
    spec = FilterSpec(cutoff=si(args.cutoff, "frequency"), taps=args.taps,
                      window=args.window)
    rate = si(args.rate, "frequency")
    freqs = np.linspace(0.0, 0.5 * rate, args.points)
    f, h = filter_response(spec, rate, freqs)
    gain = np.abs(h)
    print(f"# cutoff {spec.cutoff:.6g} Hz, taps {spec.taps}, "
          f"window {spec.window}, rate {rate:.6g} S/s")
    print(f"{'f_hz':>14}  {'gain':>10}  {'gain_db':>8}")
    for fv, g in zip(f, gain):
        db = 20.0 * math.log10(max(g, 1e-12))
        print(f"{fv:14.6e}  {g:10.3e}  {db:8.2f}")
    if args.output_dir:
        base = Path(args.output_dir)
        base.mkdir(parents=True, exist_ok=True)
        np.savetxt(base / "response.csv", np.column_stack([f, gain]),
                   delimiter=",", header="f_hz,gain", comments="",
                   fmt="%.9e")
        print(f"wrote {base / 'response.csv'}")
    return 0


# --------------------------------------------------------------------------
# parser and entry point


def _add_scenario_args(p) -> None:
    p.add_argument("scenario", nargs="?",
                   help="builtin scenario name (see: dopplerline catalog)")
    p.add_argument("--config", help="scenario config file (JSON)")
    p.add_argument("--output-dir", default=None,
                   help="artifact root (config key output_dir; "
                        "default results)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dopplerline",
        description=("Doppler frequency conversion lab: run scenarios, "
                     "trace characteristics, inspect the measurement chain."),
        epilog=_SCHEMAS,
        formatter_class=_RAW,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser(
        "run", help="execute a scenario and write artifacts",
        epilog=_SCHEMAS, formatter_class=_RAW,
    )
    _add_scenario_args(run)
    run.add_argument("--jobs", type=int, default=None,
                     help="parallel runs (config key jobs; default logical "
                          "cores); outputs do not depend on it")
    run.add_argument("--seed", type=int, default=None,
                     help="noise seed override (config key seed)")
    run.add_argument("--cp-amplitude", default=None, metavar="CURRENT",
                     help="control-pulse amplitude override, e.g. 1.62mA; "
                          "replaces a sweep over cp.amplitude")
    run.add_argument("--wp-amplitude", default=None, metavar="CURRENT",
                     help="wave-packet amplitude override")
    run.add_argument("--cfl", type=float, default=None,
                     help="Courant factor override (config key cfl)")
    run.add_argument("--duration", default=None,
                     help="record duration override (config key duration)")
    run.add_argument("--no-plots", action="store_true",
                     help="skip SVG emission (config key plots: false)")
    run.set_defaults(func=cmd_run)

    dia = sub.add_parser(
        "diagram",
        help="render the space-time pulse field and packet worldlines",
    )
    _add_scenario_args(dia)
    dia.add_argument("--resolution", type=int, default=200,
                     help="grid cells per axis (default 200)")
    dia.add_argument("--rays", type=int, default=3,
                     help="packet worldlines to trace (default 3)")
    dia.add_argument("--run", type=int, default=None,
                     help="run index to render (default: middle of the "
                          "sweep)")
    dia.set_defaults(func=cmd_diagram)

    st = sub.add_parser("selftest", help="run the fast invariant table")
    st.add_argument("--tolerance", action="append", default=[],
                    metavar="NAME=VALUE",
                    help="override a check tolerance; names: "
                         + ", ".join(sorted(_DEFAULT_TOL)))
    st.set_defaults(func=cmd_selftest)

    cat = sub.add_parser("catalog", help="list builtin scenarios")
    cat.set_defaults(func=cmd_catalog)

    fl = sub.add_parser("filter",
                        help="print a channel-filter response table")
    fl.add_argument("--cutoff", default="42MHz",
                    help="filter cutoff (default 42MHz)")
    fl.add_argument("--taps", type=int, default=255,
                    help="tap count, odd (default 255)")
    fl.add_argument("--window", default="blackman",
                    help="window function (default blackman)")
    fl.add_argument("--rate", default="0.5GHz",
                    help="sample rate the filter runs at (default 0.5GHz)")
    fl.add_argument("--points", type=int, default=25,
                    help="table rows up to Nyquist (default 25)")
    fl.add_argument("--output-dir", default=None,
                    help="also write response.csv here")
    fl.set_defaults(func=cmd_filter)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except DopplerlineError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
