"""CSV interchange, run manifests and static plots."""

import csv
import os
from pathlib import Path

import numpy as np

from .errors import LeakoptError
from .pulses import ControlPulse

FLOAT_FMT = "{:.17g}"

PULSE_HEADER = ("t_start", "lambda")
TRAJECTORY_HEADER = ("t", "p0", "p1", "pL")
HISTORY_HEADER = ("iteration", "phi2", "step")
SWEEP_HEADER = ("family", "t_g", "seed", "error_phi2", "error_phi1", "iterations", "wall_time_s")


class IoError(LeakoptError, OSError):
    def __init__(self, path, message):
        self.path = str(path)
        super().__init__(f"{path}: {message}")


def _fmt(x):
    return FLOAT_FMT.format(float(x))


def _write_rows(path, header, rows):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise IoError(path, exc.strerror or str(exc)) from exc
    return path


def _read_rows(path, header):
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            got = tuple(next(reader, ()))
            if got != tuple(header):
                raise IoError(path, f"expected header {','.join(header)}, got {','.join(got)}")
            return [row for row in reader if row]
    except OSError as exc:
        raise IoError(path, exc.strerror or str(exc)) from exc


def write_pulse_csv(path, pulse):
    return _write_rows(path, PULSE_HEADER, ((_fmt(t), _fmt(a)) for t, a in zip(pulse.starts, pulse.amplitudes)))


def read_pulse_csv(path):
    """Read a pulse; the gate time is inferred from the uniform slice spacing."""
    rows = _read_rows(path, PULSE_HEADER)
    if not rows:
        raise IoError(path, "pulse file has no slices")
    starts = np.array([float(r[0]) for r in rows])
    amps = np.array([float(r[1]) for r in rows])
    if len(starts) == 1:
        raise IoError(path, "cannot infer gate time from a single slice; need at least two rows")
    dt = (starts[-1] - starts[0]) / (len(starts) - 1)
    if not np.allclose(np.diff(starts), dt, rtol=1e-9, atol=1e-12):
        raise IoError(path, "slice start times are not uniformly spaced")
    return ControlPulse(dt * len(starts), amps)


def write_trajectory_csv(path, trajectory):
    rows = ((_fmt(t), *map(_fmt, p)) for t, p in zip(trajectory.times, trajectory.populations))
    return _write_rows(path, TRAJECTORY_HEADER, rows)


def read_trajectory_csv(path):
    rows = np.array(_read_rows(path, TRAJECTORY_HEADER), dtype=float)
    return rows[:, 0], rows[:, 1:]


def write_history_csv(path, history):
    rows = ((str(int(i)), _fmt(v), _fmt(s)) for i, v, s in history)
    return _write_rows(path, HISTORY_HEADER, rows)


def write_sweep_csv(path, records):
    rows = (
        (r.family, _fmt(r.t_g), str(r.seed), _fmt(r.error_phi2), _fmt(r.error_phi1), str(r.iterations), _fmt(r.wall_time))
        for r in records
    )
    return _write_rows(path, SWEEP_HEADER, rows)


def read_sweep_csv(path):
    from .experiments import SweepRecord

    return [
        SweepRecord(fam, float(t), int(seed), float(e2), float(e1), int(it), float(wt))
        for fam, t, seed, e2, e1, it, wt in _read_rows(path, SWEEP_HEADER)
    ]


def write_manifest(directory, paths):
    directory = Path(directory)
    lines = [os.path.relpath(p, directory) for p in paths]
    manifest = directory / "manifest.txt"
    try:
        manifest.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(manifest, exc.strerror or str(exc)) from exc
    return manifest


def read_manifest(path):
    path = Path(path)
    return [path.parent / line for line in path.read_text().splitlines() if line]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_pulse(path, pulse, title=""):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.step(pulse.edges, np.append(pulse.amplitudes, pulse.amplitudes[-1]), where="post")
    ax.set_xlabel(r"$t\ [1/\Delta\omega]$")
    ax.set_ylabel(r"$\lambda\ [\Delta\omega]$")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def plot_trajectory(path, trajectory, title=""):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3))
    for k, label in enumerate(("|0>", "|1>", "|L>")):
        ax.plot(trajectory.times, trajectory.populations[:, k], label=label)
    ax.set_xlabel(r"$t\ [1/\Delta\omega]$")
    ax.set_ylabel("population")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def plot_errors(path, records):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for family in dict.fromkeys(r.family for r in records):
        rows = sorted((r for r in records if r.family == family), key=lambda r: r.t_g)
        errs = np.clip([r.error_phi2 for r in rows], 1e-10, 1.0)
        ax.plot([r.t_g for r in rows], errs, marker=".", label=family)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_ylim(1e-10, 1.0)
    ax.set_xlabel(r"$t_g\ [1/\Delta\omega]$")
    ax.set_ylabel(r"$1-\phi_2$")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def emit_fig1(directory, bundle):
    """Five pulse CSVs (panels a-e; b repeats a), one trajectory CSV, plots, manifest."""
    directory = Path(directory)
    written = []
    panels = {"a": "a", "b": "a", "c": "c", "d": "d", "e": "e"}
    for panel, source in panels.items():
        pulse = bundle.results[source].pulse
        written.append(write_pulse_csv(directory / f"fig1{panel}_pulse.csv", pulse))
    written.append(write_trajectory_csv(directory / "fig1b_trajectory.csv", bundle.trajectory))
    for panel in ("a", "c", "d", "e"):
        written.append(plot_pulse(directory / f"fig1{panel}_pulse.png", bundle.results[panel].pulse, f"({panel})"))
    written.append(plot_trajectory(directory / "fig1b_trajectory.png", bundle.trajectory, "(b)"))
    return write_manifest(directory, written), written


def emit_sweep(directory, records, name="sweep"):
    directory = Path(directory)
    written = [write_sweep_csv(directory / f"{name}.csv", records), plot_errors(directory / f"{name}.png", records)]
    return write_manifest(directory, written), written


def emit_optimization(directory, result):
    directory = Path(directory)
    written = [
        write_pulse_csv(directory / "pulse.csv", result.pulse),
        write_history_csv(directory / "history.csv", result.history),
        plot_pulse(directory / "pulse.png", result.pulse),
    ]
    return write_manifest(directory, written), written
