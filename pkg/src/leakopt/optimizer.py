"""GRAPE: gradient ascent over piecewise-constant slice amplitudes.

The loop is shared by all update rules; a rule only turns the current
gradient into an ascent direction and proposes the first trial step. The
line search backtracks until the objective increases sufficiently, so the
accepted objective values are monotone.
"""

import time
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import GradientOracleMismatch, LeakoptError, NonFiniteFunctional
from .fidelity import GRADIENT_METHODS, evaluate, verify_gradient
from .pulses import rectangular_pulse

ARMIJO = 1e-4


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 5000
    target_error: float = 1e-9
    gradient_tolerance: float = 1e-10
    initial_step: float = 1.0
    backtracking: float = 0.5
    growth: float = 1.2
    restarts: int = 8
    seed: int = 0
    perturbation_scale: float | None = None  # None -> 0.1 * pi / (2 t_g)
    update_rule: str = "lbfgs"
    memory: int = 10
    gradient_method: str = "exact"
    check_gradient: bool = True
    oracle_tolerance: float = 1e-6
    min_step: float = 1e-14

    def __post_init__(self):
        if self.max_iterations < 0 or self.restarts < 1 or self.memory < 1:
            raise ValueError("max_iterations >= 0, restarts >= 1 and memory >= 1 are required")
        if not (0 < self.backtracking < 1 < self.growth):
            raise ValueError("need 0 < backtracking < 1 < growth")
        if self.initial_step <= 0 or self.target_error < 0 or self.gradient_tolerance < 0:
            raise ValueError("initial_step must be positive; tolerances non-negative")
        if self.update_rule not in UPDATE_RULES:
            raise ValueError(f"unknown update rule {self.update_rule!r}; expected one of {sorted(UPDATE_RULES)}")
        if self.gradient_method not in GRADIENT_METHODS:
            raise ValueError(f"unknown gradient method {self.gradient_method!r}; expected one of {GRADIENT_METHODS}")


@dataclass
class OptimizationResult:
    pulse: object
    report: object
    iterations: int
    converged_reason: str
    history: np.ndarray = field(repr=False)  # rows: iteration, objective, step
    start: int = 0
    wall_time: float = 0.0

    @property
    def gate_error(self):
        return self.report.gate_error


class GradientRule:
    """Steepest ascent with a step that grows after every accepted update."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.step = cfg.initial_step

    def direction(self, grad):
        return grad

    def trial_step(self):
        return self.step

    def accepted(self, step, ds, dg):
        self.step = step * self.cfg.growth

    def reset(self):
        return False


class LbfgsRule:
    """Limited-memory BFGS ascent direction (two-loop recursion)."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.pairs = deque(maxlen=cfg.memory)

    def direction(self, grad):
        if not self.pairs:
            return grad
        q = grad.copy()
        alphas = []
        for s, y, rho in reversed(self.pairs):
            a = rho * np.dot(s, q)
            alphas.append(a)
            q -= a * y
        s, y, _ = self.pairs[-1]
        q *= np.dot(s, y) / np.dot(y, y)
        for (s, y, rho), a in zip(self.pairs, reversed(alphas)):
            b = rho * np.dot(y, q)
            q += s * (a - b)
        if np.dot(q, grad) <= 0:
            self.pairs.clear()
            return grad
        return q

    def trial_step(self):
        return 1.0 if self.pairs else self.cfg.initial_step

    def accepted(self, step, ds, dg):
        # ascent on f is descent on -f: curvature pair uses y = -(g_new - g_old)
        y = -dg
        sy = np.dot(ds, y)
        if sy > 1e-18:
            self.pairs.append((ds, y, 1.0 / sy))

    def reset(self):
        """Drop curvature memory; True if there was any to drop."""
        had_pairs = bool(self.pairs)
        self.pairs.clear()
        return had_pairs


UPDATE_RULES = {"gradient": GradientRule, "lbfgs": LbfgsRule}


def _objective(report):
    return report.phi2_penalized


def grape_optimize(params, initial, penalty=None, cfg=OptimizerConfig(), target=None):
    """Maximise phi2 (or penalized phi2) starting from ``initial``.

    Returns the last accepted, hence best, pulse. Stops when the gate error
    drops below ``cfg.target_error`` (``target_reached``), the gradient
    infinity-norm falls below ``cfg.gradient_tolerance`` (``gradient_small``),
    the line search cannot find an increase (``stalled``) or the iteration
    budget runs out (``max_iterations``).
    """
    started = time.perf_counter()
    method = cfg.gradient_method
    if cfg.check_gradient:
        deviation = verify_gradient(params, initial, penalty, target=target, method=method)
        if not deviation <= cfg.oracle_tolerance:
            raise GradientOracleMismatch(deviation, cfg.oracle_tolerance)

    pulse = initial
    report = evaluate(params, pulse, penalty, target, method)
    value = _objective(report)
    if not np.isfinite(value) or not np.all(np.isfinite(report.gradient)):
        raise NonFiniteFunctional(f"objective is not finite at the initial pulse: {value}")
    rule = UPDATE_RULES[cfg.update_rule](cfg)
    history = [(0, value, 0.0)]
    reason = "max_iterations"
    iteration = 0
    while True:
        grad = report.gradient
        if report.gate_error <= cfg.target_error:
            reason = "target_reached"
            break
        if np.max(np.abs(grad)) <= cfg.gradient_tolerance:
            reason = "gradient_small"
            break
        if iteration >= cfg.max_iterations:
            break
        direction = rule.direction(grad)
        slope = float(np.dot(grad, direction))
        step = rule.trial_step()
        while step >= cfg.min_step:
            trial = pulse.with_amplitudes(pulse.amplitudes + step * direction)
            trial_report = evaluate(params, trial, penalty, target, method)
            trial_value = _objective(trial_report)
            if np.isfinite(trial_value) and trial_value > value + ARMIJO * step * slope:
                break
            step *= cfg.backtracking
        else:
            if rule.reset():
                continue
            reason = "stalled"
            break
        iteration += 1
        rule.accepted(step, trial.amplitudes - pulse.amplitudes, trial_report.gradient - grad)
        pulse, report, value = trial, trial_report, trial_value
        history.append((iteration, value, step))
    return OptimizationResult(
        pulse=pulse,
        report=report,
        iterations=iteration,
        converged_reason=reason,
        history=np.array(history, dtype=float),
        wall_time=time.perf_counter() - started,
    )


def multi_start(params, gate_time, penalty=None, cfg=OptimizerConfig(), n_slices=256, target=None):
    """Best of GRAPE runs from the rectangular guess and seeded perturbations of it.

    Start 0 is the plain rectangular pi/2 pulse; starts 1..restarts-1 add
    uniform noise in ``[-scale, scale]`` drawn from ``default_rng(cfg.seed)``.
    Once a run reaches the target error the remaining starts are skipped.
    """
    base = rectangular_pulse(gate_time, n_slices)
    scale = cfg.perturbation_scale
    if scale is None:
        scale = 0.1 * np.pi / (2 * gate_time)
    rng = np.random.default_rng(cfg.seed)
    best, last_error = None, None
    for start in range(cfg.restarts):
        if start == 0:
            initial = base
        else:
            initial = base.with_amplitudes(base.amplitudes + rng.uniform(-scale, scale, n_slices))
        run_cfg = cfg if start == 0 else replace(cfg, check_gradient=False)
        try:
            result = grape_optimize(params, initial, penalty, run_cfg, target)
        except GradientOracleMismatch:
            raise
        except (LeakoptError, FloatingPointError) as exc:
            last_error = exc
            continue
        result.start = start
        if best is None or _objective(result.report) > _objective(best.report):
            best = result
        if result.converged_reason == "target_reached":
            break
    if best is None:
        raise last_error
    return best
