"""Command-line entry point (``leakopt``)."""

import argparse
import dataclasses
import sys

import numpy as np
import yaml

from . import artifacts
from .config import COMMANDS, PRESETS, RunConfig, convert_units, parse_config
from .errors import ConfigError, LeakoptError
from .experiments import SweepPlan, composite_scaling_study, reproduce_fig1, run_sweep, validate_rwa
from .fidelity import evaluate
from .model import basis_state
from .optimizer import multi_start
from .propagation import evolve_state
from .pulses import rectangular_pulse

DEFAULTS = RunConfig(command="optimize")


def _defaults_text():
    d = DEFAULTS.to_dict()
    d.pop("command")
    d["sweep"]["baseline_grid"] = "40 log-spaced points in [1, 300]"
    d["sweep"]["grape_grid"] = "3.0 to 15.0 step 0.25"
    return "config defaults (YAML keys):\n" + yaml.safe_dump(d, sort_keys=False, default_flow_style=None)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file; flags override it")
    common.add_argument("--out", help=f"output base directory (default: {DEFAULTS.output})")
    common.add_argument("--label", help="run directory name under --out (default: the command name)")
    common.add_argument("--preset", choices=sorted(PRESETS), help="device preset for ns/GHz reporting")
    common.add_argument("--n", type=int, help=f"time slices (default: {DEFAULTS.n_slices})")
    common.add_argument("--seed", type=int, help=f"random seed (default: {DEFAULTS.seed})")
    common.add_argument("--restarts", type=int, help=f"multi-start count (default: {DEFAULTS.optimizer.restarts})")
    common.add_argument("--show-config", action="store_true", help="print the resolved config before running")

    parser = argparse.ArgumentParser(
        prog="leakopt",
        description="Pulse optimisation for a qubit with one leakage level (units: delta_omega = 1).",
        epilog=_defaults_text(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    opt = sub.add_parser("optimize", parents=[common], help="multi-start GRAPE at one gate time")
    opt.add_argument("--tg", type=float, required=True, help="gate time in 1/delta_omega")
    opt.add_argument("--penalty", action="store_true", help="optimise the penalized fidelity")
    opt.add_argument("--gamma", type=float, help=f"penalty strength (default: {DEFAULTS.penalty.gamma})")
    opt.add_argument("--t0", type=float, help=f"penalty rise time (default: {DEFAULTS.penalty.t0})")

    sim = sub.add_parser("simulate", parents=[common], help="evaluate a pulse CSV and record populations")
    sim.add_argument("--pulse", required=True, help="pulse CSV (t_start,lambda)")
    sim.add_argument("--initial", choices=("0", "1", "L"), default="0", help="initial basis state (default: 0)")

    sw = sub.add_parser("sweep", parents=[common], help="error versus gate time for several pulse families")
    sw.add_argument("--plan", help="YAML config with a 'sweep' section (alias of --config)")

    sub.add_parser("fig1", parents=[common], help="optimise the reference panels (t_opt, 4.5, 7.0, penalized 10.0) and the t_opt trajectory")

    rwa = sub.add_parser("validate-rwa", parents=[common], help="compare lab-frame and RWA propagation")
    rwa.add_argument("--epsilon", type=float, help=f"qubit half-splitting in delta_omega (default: {DEFAULTS.epsilon})")
    rwa.add_argument("--pulse", help="pulse CSV to check (default: zero pulse and a t_g=50 rectangular pulse)")

    sub.add_parser("composite-study", parents=[common], help="error scaling of the refocusing sequence")
    return parser


def resolve(args):
    """Turn parsed flags (and an optional config file) into a RunConfig."""
    overrides = {"command": args.command}
    if args.out is not None:
        overrides["output"] = args.out
    if args.label is not None:
        overrides["label"] = args.label
    if args.preset is not None:
        overrides["preset"] = args.preset
    if args.n is not None:
        overrides["n_slices"] = args.n
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.restarts is not None:
        overrides["optimizer"] = {"restarts": args.restarts}
    if args.command == "optimize":
        overrides["gate_time"] = args.tg
        penalty = {}
        if args.penalty:
            penalty["enabled"] = True
        if args.gamma is not None:
            penalty["gamma"] = args.gamma
        if args.t0 is not None:
            penalty["t0"] = args.t0
        if penalty:
            overrides["penalty"] = penalty
    if args.command == "simulate":
        overrides["pulse_path"] = args.pulse
        overrides["initial"] = args.initial
    if args.command == "validate-rwa":
        if args.epsilon is not None:
            overrides["epsilon"] = args.epsilon
        if args.pulse is not None:
            overrides["pulse_path"] = args.pulse
    source = args.config
    if args.command == "sweep" and args.plan:
        source = args.plan
    return parse_config(source, **overrides)


def _report_times(cfg, lines):
    if cfg.preset:
        t_opt = cfg.model.t_opt
        lines.append(f"preset={cfg.preset} t_opt={convert_units(t_opt, cfg.preset):.3f}ns")


def run(cfg, out=None):
    out = sys.stdout if out is None else out
    lines = []
    _report_times(cfg, lines)
    params = cfg.model
    directory = cfg.run_dir
    if cfg.command == "optimize":
        penalty = cfg.penalty if cfg.penalty.active else None
        result = multi_start(params, cfg.gate_time, penalty, cfg.optimizer, cfg.n_slices)
        manifest, _ = artifacts.emit_optimization(directory, result)
        lines.append(
            f"t_g={cfg.gate_time:.6g} error_phi2={result.gate_error:.6e} iterations={result.iterations} "
            f"reason={result.converged_reason} start={result.start}"
        )
    elif cfg.command == "simulate":
        pulse = artifacts.read_pulse_csv(cfg.pulse_path)
        report = evaluate(params, pulse, gradient=False)
        traj = evolve_state(params, pulse, basis_state(cfg.initial))
        written = [artifacts.write_trajectory_csv(directory / "trajectory.csv", traj),
                   artifacts.plot_trajectory(directory / "trajectory.png", traj)]
        manifest = artifacts.write_manifest(directory, written)
        lines.append(f"error_phi2={report.gate_error:.6e} error_phi1={report.error_phi1:.6e} pL_final={traj.populations[-1, 2]:.6e}")
    elif cfg.command == "sweep":
        plan = SweepPlan(
            baseline_grid=np.array(cfg.sweep.baseline_grid),
            grape_grid=np.array(cfg.sweep.grape_grid),
            families=tuple(cfg.sweep.families),
            penalty=cfg.penalty if cfg.penalty.active else None,
            optimizer=cfg.optimizer,
            n_slices=cfg.n_slices,
            renormalize_gaussian=cfg.sweep.renormalize_gaussian,
            workers=cfg.sweep.workers,
        )
        records = run_sweep(plan, params)
        manifest, _ = artifacts.emit_sweep(directory, records)
        lines.append(f"records={len(records)} failed={sum(bool(r.note) for r in records)}")
    elif cfg.command == "fig1":
        penalty = dataclasses.replace(cfg.penalty, enabled=True)
        bundle = reproduce_fig1(params, cfg.optimizer, penalty, cfg.n_slices)
        manifest, _ = artifacts.emit_fig1(directory, bundle)
        for panel, res in bundle.results.items():
            lines.append(f"panel={panel} t_g={res.pulse.gate_time:.6g} error_phi2={res.gate_error:.6e}")
        lines.append(" ".join(f"{k}={v:.4g}" for k, v in bundle.milestones.items() if isinstance(v, float)))
    elif cfg.command == "validate-rwa":
        if cfg.pulse_path:
            pulses = {"pulse": artifacts.read_pulse_csv(cfg.pulse_path)}
        else:
            pulses = {
                "zero": rectangular_pulse(2 * np.pi, cfg.n_slices).with_amplitudes(np.zeros(cfg.n_slices)),
                "rectangular-50": rectangular_pulse(50.0, cfg.n_slices),
            }
        report = validate_rwa(pulses, epsilons=(cfg.epsilon,), delta_omega=params.delta_omega)
        rows = [(r.epsilon, r.label, r.infidelity) for r in report.rows]
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / "rwa.csv"
        path.write_text("epsilon,label,infidelity\n" + "".join(f"{e:.17g},{l},{i:.17g}\n" for e, l, i in rows))
        manifest = artifacts.write_manifest(directory, [path])
        lines.extend(f"epsilon={e:g} pulse={l} infidelity={i:.6e}" for e, l, i in rows)
    elif cfg.command == "composite-study":
        study = composite_scaling_study(params)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / "composite.csv"
        path.write_text("rho,composite_error,single_error\n" + "".join(
            f"{r:.17g},{c:.17g},{s:.17g}\n" for r, c, s in zip(study.rho, study.composite_error, study.single_error)))
        manifest = artifacts.write_manifest(directory, [path])
        lines.append(
            f"composite_slope={study.composite_slope:.4f} composite_envelope_slope={study.composite_envelope_slope:.4f} "
            f"single_envelope_slope={study.single_envelope_slope:.4f}"
        )
    else:  # pragma: no cover - argparse restricts commands
        raise ConfigError("command", f"expected one of {COMMANDS}")
    lines.append(f"manifest={manifest}")
    for line in lines:
        print(line, file=out)
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        if args.show_config:
            print(yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None), end="")
        return run(cfg)
    except (LeakoptError, ValueError) as exc:
        message = " ".join(str(exc).split())
        print(f"error={type(exc).__name__} message={message}", file=sys.stderr)
        return 2 if isinstance(exc, ConfigError) else 1


if __name__ == "__main__":
    sys.exit(main())
