"""Benchmarks: error-vs-duration sweeps, reference pulse panels, scaling studies."""

import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import LeakoptError
from .fidelity import PenaltyConfig, evaluate, phi2
from .model import ModelParams, basis_state
from .optimizer import OptimizerConfig, multi_start
from .propagation import evolve_state, propagate_lab_frame, total_propagator
from .pulses import composite_duration, composite_sequence, gaussian_pulse, rectangular_pulse

GRAPE_FAMILIES = ("grape", "grape-penalized")
_GAUSSIAN = re.compile(r"^gaussian\((?P<alpha>[0-9.eE+-]+)\)$")


def default_baseline_grid():
    return np.geomspace(1.0, 300.0, 40)


def default_grape_grid():
    return np.round(np.arange(3.0, 15.0 + 1e-9, 0.25), 10)


@dataclass
class SweepRecord:
    family: str
    t_g: float
    seed: int
    error_phi2: float
    error_phi1: float
    iterations: int = 0
    wall_time: float = 0.0
    note: str = ""
    pulse: object = field(default=None, repr=False, compare=False)


@dataclass
class SweepPlan:
    """What to run. Baseline families (``rectangular``, ``gaussian(<alpha>)``)
    are evaluated on the union of both grids so they share points with GRAPE."""

    baseline_grid: np.ndarray = field(default_factory=default_baseline_grid)
    grape_grid: np.ndarray = field(default_factory=default_grape_grid)
    families: tuple = ("rectangular", "gaussian(2)", "gaussian(3)", "grape")
    penalty: PenaltyConfig | None = None
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    n_slices: int = 256
    renormalize_gaussian: bool = True
    baseline_max_dt: float = 0.1
    workers: int = 1

    def __post_init__(self):
        self.baseline_grid = np.asarray(self.baseline_grid, dtype=float)
        self.grape_grid = np.asarray(self.grape_grid, dtype=float)
        for name in ("baseline_grid", "grape_grid"):
            grid = getattr(self, name)
            if grid.size == 0 or np.any(np.diff(grid) <= 0):
                raise ValueError(f"{name} must be non-empty and strictly increasing")
        if not self.families:
            raise ValueError("at least one family is required")
        for fam in self.families:
            family_kind(fam)

    def grid_for(self, family):
        if family in GRAPE_FAMILIES:
            return self.grape_grid
        return np.union1d(self.baseline_grid, self.grape_grid)


def family_kind(family):
    if family in GRAPE_FAMILIES or family == "rectangular":
        return family
    m = _GAUSSIAN.match(family)
    if m and float(m["alpha"]) > 0:
        return "gaussian"
    raise ValueError(f"unknown pulse family {family!r}")


def baseline_pulse(family, t_g, n_slices, renormalize=True):
    if family == "rectangular":
        return rectangular_pulse(t_g, n_slices)
    alpha = float(_GAUSSIAN.match(family)["alpha"])
    return gaussian_pulse(t_g, alpha, n_slices, renormalize)


def _evaluate_point(task):
    family, t_g, plan, params = task
    started = time.perf_counter()
    seed = plan.optimizer.seed
    try:
        if family in GRAPE_FAMILIES:
            penalty = plan.penalty if family == "grape-penalized" else None
            if family == "grape-penalized" and penalty is None:
                penalty = PenaltyConfig()
            result = multi_start(params, t_g, penalty, plan.optimizer, plan.n_slices)
            report, iterations, pulse = result.report, result.iterations, result.pulse
        else:
            n = max(plan.n_slices, math.ceil(t_g / plan.baseline_max_dt))
            pulse = baseline_pulse(family, t_g, n, plan.renormalize_gaussian)
            report = evaluate(params, pulse, gradient=False)
            iterations = 0
    except (LeakoptError, ValueError, FloatingPointError) as exc:
        return SweepRecord(family, t_g, seed, 1.0, 1.0, 0, time.perf_counter() - started,
                           note=f"{type(exc).__name__}: {exc}")
    return SweepRecord(
        family=family,
        t_g=float(t_g),
        seed=seed,
        error_phi2=float(np.clip(report.gate_error, 0.0, 1.0)),
        error_phi1=float(np.clip(report.error_phi1, 0.0, 1.0)),
        iterations=iterations,
        wall_time=time.perf_counter() - started,
        pulse=pulse,
    )


def run_sweep(plan, params=ModelParams()):
    """One record per (family, t_g), ordered by family then t_g.

    A failing point becomes a record with error 1 and a note; the sweep keeps
    going. With ``plan.workers > 1`` points run in worker processes, but the
    output order never depends on completion order.
    """
    tasks = [(fam, float(t), plan, params) for fam in plan.families for t in plan.grid_for(fam)]
    if plan.workers > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            return list(pool.map(_evaluate_point, tasks))
    return [_evaluate_point(task) for task in tasks]


def records_for(records, family):
    rows = sorted((r for r in records if r.family == family), key=lambda r: r.t_g)
    return np.array([r.t_g for r in rows]), np.array([r.error_phi2 for r in rows])


def persistent_crossing(t_g, errors, threshold):
    """First grid time from which the error stays below ``threshold``."""
    t_g, errors = np.asarray(t_g), np.asarray(errors)
    above = np.nonzero(errors >= threshold)[0]
    if above.size == 0:
        return float(t_g[0])
    if above[-1] == len(errors) - 1:
        return None
    return float(t_g[above[-1] + 1])


def first_below(t_g, errors, threshold):
    hits = np.nonzero(np.asarray(errors) < threshold)[0]
    return float(np.asarray(t_g)[hits[0]]) if hits.size else None


def rise_time(pulse, fraction=0.5):
    """Time at which |lambda| first reaches ``fraction`` of its maximum."""
    amps = np.abs(pulse.amplitudes)
    idx = int(np.argmax(amps >= fraction * amps.max()))
    return float(pulse.midpoints[idx])


def lobes(pulse, threshold=0.25):
    """Contiguous slice ranges ``(start, stop)`` where |lambda| >= threshold * max."""
    mask = np.abs(pulse.amplitudes) >= threshold * np.abs(pulse.amplitudes).max()
    padded = np.concatenate([[False], mask, [False]]).astype(int)
    edges = np.diff(padded)
    return list(zip(np.nonzero(edges == 1)[0], np.nonzero(edges == -1)[0]))


def peak_profile(pulse, floor=0.02):
    """Signed extrema of successive same-sign excursions above ``floor``."""
    amps = pulse.amplitudes
    sign = np.where(np.abs(amps) > floor, np.sign(amps), 0)
    peaks, current = [], []
    for a, s in zip(amps, sign):
        if current and (s == 0 or s != np.sign(current[0])):
            peaks.append(max(current, key=abs))
            current = []
        if s != 0:
            current.append(a)
    if current:
        peaks.append(max(current, key=abs))
    return peaks


def population_milestones(pulse, trajectory):
    """Populations at the landmarks of a three-lobe pulse.

    Returns p1 during the first wait, the maximum pL during the second wait
    and pL at the end. The three largest-area lobes are taken as the
    rotation pulses.
    """
    found = lobes(pulse)
    if len(found) < 3:
        raise ValueError(f"expected three lobes, found {len(found)}")
    areas = [abs(pulse.amplitudes[a:b].sum()) for a, b in found]
    keep = sorted(sorted(range(len(found)), key=lambda i: -areas[i])[:3])
    (_, end1), (start2, end2), (start3, _) = (found[i] for i in keep)
    pops = trajectory.populations
    # trajectory index k is the state after k slices
    first_wait = pops[end1 : start2 + 1]
    second_wait = pops[end2 : start3 + 1]
    return {
        "p1_first_wait": float(np.median(first_wait[:, 1])),
        "pL_second_wait_max": float(second_wait[:, 2].max()),
        "pL_final": float(pops[-1, 2]),
    }


@dataclass
class Fig1Bundle:
    results: dict
    trajectory: object
    milestones: dict
    penalized_shape: dict


def reproduce_fig1(params=ModelParams(), cfg=OptimizerConfig(), penalty=PenaltyConfig(), n_slices=256):
    """Optimise the panels: (a) t_opt, (c) 4.5, (d) 7.0, (e) 10.0 with penalty.

    Panel (b) is the population trajectory of (a) starting from |0>.
    """
    t_opt = params.t_opt
    results = {
        "a": multi_start(params, t_opt, None, cfg, n_slices),
        "c": multi_start(params, 4.5 / params.delta_omega, None, cfg, n_slices),
        "d": multi_start(params, 7.0 / params.delta_omega, None, cfg, n_slices),
        "e": multi_start(params, 10.0 / params.delta_omega, penalty, cfg, n_slices),
    }
    trajectory = evolve_state(params, results["a"].pulse, basis_state(0))
    try:
        milestones = population_milestones(results["a"].pulse, trajectory)
    except ValueError as exc:
        milestones = {"error": str(exc)}
    pulse_e = results["e"].pulse
    peaks = peak_profile(pulse_e)
    shape = {
        "lambda_0": float(pulse_e.amplitudes[0]),
        "rise_time": rise_time(pulse_e),
        "first_peak": float(peaks[0]) if peaks else float("nan"),
        "second_peak": float(peaks[1]) if len(peaks) > 1 else float("nan"),
    }
    return Fig1Bundle(results, trajectory, milestones, shape)


def penalty_sweep(params=ModelParams(), cfg=PenaltyConfig(), grid=None, optimizer=OptimizerConfig(),
                  n_slices=256, workers=1):
    """GRAPE sweep of the penalized objective; see :func:`shifted_optimum`."""
    if not cfg.active:
        raise ValueError("penalty_sweep needs an active penalty")
    plan = SweepPlan(
        grape_grid=default_grape_grid() if grid is None else grid,
        families=("grape-penalized",),
        penalty=cfg,
        optimizer=optimizer,
        n_slices=n_slices,
        workers=workers,
    )
    return run_sweep(plan, params)


def shifted_optimum(records, threshold=1e-6):
    """Smallest grid duration whose error is below ``threshold``."""
    rows = sorted(records, key=lambda r: r.t_g)
    return first_below([r.t_g for r in rows], [r.error_phi2 for r in rows], threshold)


def loglog_slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def envelope(x, y, bins):
    """Maximum of ``y`` in ``bins`` consecutive chunks of the (sorted) grid."""
    chunks = np.array_split(np.arange(len(x)), bins)
    idx = np.array([c[np.argmax(np.asarray(y)[c])] for c in chunks if c.size])
    return np.asarray(x)[idx], np.asarray(y)[idx]


@dataclass
class CompositeStudy:
    rho: np.ndarray
    composite_error: np.ndarray
    single_error: np.ndarray
    composite_slope: float
    composite_envelope_slope: float
    single_envelope_slope: float
    bins: int

    def ratio_at(self, rho):
        i = int(np.argmin(np.abs(self.rho - rho)))
        return float(self.single_error[i] / self.composite_error[i])


def composite_error(params, rho, theta1=np.pi / 8, max_dt=0.05):
    theta2 = np.pi / 2 - 2 * theta1
    t_g = composite_duration(rho, theta1, theta2, params.delta_omega)
    n = math.ceil(t_g / max_dt)
    pulse = composite_sequence(t_g, theta1, theta2, rho, n, params.delta_omega)
    return 1.0 - phi2(total_propagator(params, pulse))


def single_pulse_error(params, rho):
    """Gate error of one constant pulse of amplitude ``rho`` and area pi/2."""
    t_g = (np.pi / 2) / rho
    # constant amplitude: one slice is exact
    return 1.0 - phi2(total_propagator(params, rectangular_pulse(t_g, 1)))


def composite_scaling_study(params=ModelParams(), rho_grid=None, theta1=np.pi / 8, max_dt=0.05, bins=8):
    """Gate error of the refocusing sequence and of a single pulse versus rho.

    ``composite_slope`` is a straight least-squares fit over the whole grid;
    the envelope slopes fit the per-bin maxima, which removes the oscillation
    caused by the segment durations.
    """
    rho = np.geomspace(0.005, 0.05, 96) if rho_grid is None else np.sort(np.asarray(rho_grid, float))
    if rho.min() < 0.005 * (1 - 1e-9) or rho.max() > 0.05 * (1 + 1e-9):
        raise ValueError("rho grid must lie within [0.005, 0.05] delta_omega")
    rho_rel = rho / params.delta_omega
    comp = np.array([composite_error(params, r * params.delta_omega, theta1, max_dt) for r in rho_rel])
    single = np.array([single_pulse_error(params, r * params.delta_omega) for r in rho_rel])
    bins = min(bins, len(rho))
    return CompositeStudy(
        rho=rho_rel,
        composite_error=comp,
        single_error=single,
        composite_slope=loglog_slope(rho_rel, comp),
        composite_envelope_slope=loglog_slope(*envelope(rho_rel, comp, bins)),
        single_envelope_slope=loglog_slope(*envelope(rho_rel, single, bins)),
        bins=bins,
    )


@dataclass
class RwaRow:
    epsilon: float
    label: str
    infidelity: float


@dataclass
class RwaReport:
    rows: list

    def infidelity(self, label, epsilon):
        for row in self.rows:
            if row.label == label and row.epsilon == epsilon:
                return row.infidelity
        raise KeyError((label, epsilon))

    def decreasing(self, label):
        vals = [r.infidelity for r in sorted(self.rows, key=lambda r: r.epsilon) if r.label == label]
        return all(b < a for a, b in zip(vals, vals[1:]))

    def ratio(self, label, eps_low, eps_high):
        return self.infidelity(label, eps_low) / self.infidelity(label, eps_high)


def frame_infidelity(params, pulse, substeps=None):
    """1 - phi2 between the frame-referred lab propagator and the RWA propagator."""
    u_rwa = total_propagator(params, pulse)
    u_lab = propagate_lab_frame(params, pulse, substeps)
    return 1.0 - phi2(u_lab, u_rwa)


def validate_rwa(pulses, epsilons=(20.0, 30.0, 50.0), delta_omega=1.0, substeps=None):
    """Compare lab-frame and rotating-frame propagation for each (epsilon, pulse).

    ``pulses`` maps a label to a :class:`ControlPulse`; epsilons are in units
    of ``delta_omega``.
    """
    rows = []
    for eps in epsilons:
        params = ModelParams(delta_omega=delta_omega, epsilon=eps * delta_omega)
        for label, pulse in pulses.items():
            rows.append(RwaRow(float(eps), label, frame_infidelity(params, pulse, substeps)))
    return RwaReport(rows)
