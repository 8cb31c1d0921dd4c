"""Gate fidelities, the rise-time penalty and their gradients.

``phi2`` only looks at the qubit block of ``U_F^dag U``, so it ignores the
phase picked up by the leakage level as well as the global phase. Gradients
are taken with respect to the slice amplitudes of a :class:`ControlPulse`.
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import dagger, expm_derivative
from .model import QUBIT_PROJECTOR, drive_generator, target_not_gate
from .propagation import propagate, total_propagator

PENALTY_FORMS = ("edge-symmetric", "paper-verbatim")
GRADIENT_METHODS = ("exact", "first-order")


@dataclass(frozen=True)
class PenaltyConfig:
    """Time-dependent quadratic amplitude penalty.

    ``gamma`` is the overall strength and ``t0`` the rise-time scale, both in
    units of 1/delta_omega. ``form`` selects between the edge-symmetric weight
    ``2 - tanh(t/t0) - tanh((t_g-t)/t0)`` and the literal
    ``2 - tanh(t/t0) + tanh((t_g-t)/t0)``.
    """

    gamma: float = 5.0
    t0: float = 0.1
    enabled: bool = True
    form: str = "edge-symmetric"

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if not self.t0 > 0:
            raise ValueError(f"t0 must be positive, got {self.t0}")
        if self.form not in PENALTY_FORMS:
            raise ValueError(f"unknown penalty form {self.form!r}; expected one of {PENALTY_FORMS}")

    @property
    def active(self):
        return self.enabled and self.gamma > 0


@dataclass(frozen=True)
class FidelityReport:
    phi1: float
    phi2: float
    phi2_penalized: float
    gradient: np.ndarray = field(default=None, repr=False)

    @property
    def gate_error(self):
        return 1.0 - self.phi2

    @property
    def error_phi1(self):
        return 1.0 - self.phi1


def _target(target):
    return target_not_gate() if target is None else np.asarray(target)


def subspace_overlap(u, target=None):
    """tr(P U_F^dag U) with P the qubit projector."""
    return np.trace(QUBIT_PROJECTOR @ dagger(_target(target)) @ u, axis1=-2, axis2=-1)


def phi1(u, target=None):
    """(1/9) |tr(U_F^dag U)|^2."""
    target = _target(target)
    n = target.shape[-1]
    return float(np.abs(np.trace(dagger(target) @ u)) ** 2 / n**2)


def phi2(u, target=None):
    """(1/4) |<0|U_F^dag U|0> + <1|U_F^dag U|1>|^2."""
    return float(np.abs(subspace_overlap(u, target)) ** 2 / 4)


def penalty_strength(cfg, t, gate_time):
    t = np.asarray(t, dtype=float)
    sign = -1.0 if cfg.form == "edge-symmetric" else 1.0
    return cfg.gamma * (2.0 - np.tanh(t / cfg.t0) + sign * np.tanh((gate_time - t) / cfg.t0))


def penalty_weights(cfg, pulse):
    """Per-slice quadrature weights gamma_A(t_mid) * dt (zeros when inactive)."""
    if cfg is None or not cfg.active:
        return np.zeros(pulse.n_slices)
    return penalty_strength(cfg, pulse.midpoints, pulse.gate_time) * pulse.dt


def penalty_value(cfg, pulse):
    return float(np.sum(penalty_weights(cfg, pulse) * pulse.amplitudes**2))


def _overlap_gradient(params, stack, target, method):
    """d/dlambda_j of the subspace overlap z, for every slice j."""
    x = drive_generator(params)
    # tr(P U_F^dag B_j dU_j F_{j-1}) = tr(M_j dU_j)
    m = stack.before @ (QUBIT_PROJECTOR @ dagger(target)) @ stack.backward
    if method == "exact":
        du = expm_derivative(stack.eigenvalues, stack.eigenvectors, stack.dt, x)
    elif method == "first-order":
        du = -1j * stack.dt * (x @ stack.slices)
    else:
        raise ValueError(f"unknown gradient method {method!r}; expected one of {GRADIENT_METHODS}")
    return np.einsum("nab,nba->n", m, du)


def evaluate(params, pulse, penalty=None, target=None, method="exact", gradient=True):
    """Fidelities of ``pulse`` and, optionally, the gradient of the objective.

    The objective is ``phi2`` when ``penalty`` is ``None`` or inactive, else
    the penalized ``phi2``.
    """
    target = _target(target)
    if gradient:
        stack = propagate(params, pulse)
        u = stack.total
    else:
        u = total_propagator(params, pulse)
    z = subspace_overlap(u, target)
    p2 = float(np.abs(z) ** 2 / 4)
    weights = penalty_weights(penalty, pulse)
    p2_pen = p2 - float(np.sum(weights * pulse.amplitudes**2))
    grad = None
    if gradient:
        dz = _overlap_gradient(params, stack, target, method)
        grad = 0.5 * np.real(np.conj(z) * dz) - 2.0 * weights * pulse.amplitudes
    return FidelityReport(phi1=phi1(u, target), phi2=p2, phi2_penalized=p2_pen, gradient=grad)


def phi2_penalized(params, pulse, cfg, target=None):
    return evaluate(params, pulse, cfg, target, gradient=False).phi2_penalized


def gradient_phi2(params, pulse, target=None, method="exact"):
    """Gradient of phi2 with respect to every slice amplitude.

    ``method="exact"`` differentiates each slice exponential exactly;
    ``"first-order"`` uses dU_j ~ -i dt X U_j, which is accurate to O(dt^2)
    per slice.
    """
    return evaluate(params, pulse, None, target, method).gradient


def gradient_phi2_penalized(params, pulse, cfg, target=None, method="exact"):
    return evaluate(params, pulse, cfg, target, method).gradient


def objective_value(params, pulse, penalty=None, target=None):
    report = evaluate(params, pulse, penalty, target, gradient=False)
    return report.phi2_penalized


def finite_difference_gradient(params, pulse, penalty=None, target=None, h=1e-6):
    """Central differences (f(lambda_j + h) - f(lambda_j - h)) / 2h per slice."""
    base = pulse.amplitudes
    grad = np.empty(pulse.n_slices)
    for j in range(pulse.n_slices):
        up = base.copy()
        up[j] += h
        down = base.copy()
        down[j] -= h
        f_up = objective_value(params, pulse.with_amplitudes(up), penalty, target)
        f_down = objective_value(params, pulse.with_amplitudes(down), penalty, target)
        grad[j] = (f_up - f_down) / (2 * h)
    return grad


def verify_gradient(params, pulse, penalty=None, h=1e-6, target=None, method="exact"):
    """Max absolute deviation between analytic and central-difference gradients."""
    if not h > 0:
        raise ValueError("h must be positive")
    analytic = evaluate(params, pulse, penalty, target, method).gradient
    numeric = finite_difference_gradient(params, pulse, penalty, target, h)
    return float(np.max(np.abs(analytic - numeric)))
