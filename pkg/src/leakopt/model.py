"""Three-level model of a qubit with one weakly off-resonant leakage level.

Basis ordering is fixed to ``(|0>, |1>, |L>)``. Frequencies are angular and,
by default, measured in units of the leakage detuning (``delta_omega = 1``).
"""

from dataclasses import dataclass

import numpy as np

from .linalg import expm_hermitian

ZERO, ONE, LEAK = 0, 1, 2
DIM = 3
SQRT2 = np.sqrt(2.0)

SIGMA_Z = np.diag([-1.0, 1.0, 0.0]).astype(complex)
SIGMA_X = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex)
LEAK_PROJECTOR = np.diag([0.0, 0.0, 1.0]).astype(complex)
QUBIT_PROJECTOR = np.diag([1.0, 1.0, 0.0]).astype(complex)
LEAK_COUPLING = np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex)


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the driven three-level system.

    ``epsilon`` is only needed by the lab-frame path. ``coupling_scale``
    multiplies the sqrt(2) matrix element of the |1>-|L> transition; set it to
    zero for an exactly decoupled two-level system.
    """

    delta_omega: float = 1.0
    epsilon: float | None = None
    coupling_scale: float = 1.0

    def __post_init__(self):
        if not self.delta_omega > 0:
            raise ValueError(f"delta_omega must be positive, got {self.delta_omega}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 <= self.coupling_scale <= 1.0:
            raise ValueError(f"coupling_scale must lie in [0, 1], got {self.coupling_scale}")

    @property
    def leak_energy(self):
        """E_L = 3 epsilon - delta_omega."""
        return 3.0 * self._require_epsilon() - self.delta_omega

    @property
    def t_opt(self):
        return 2.0 * np.pi / self.delta_omega

    def _require_epsilon(self):
        if self.epsilon is None:
            raise ValueError("epsilon must be set for lab-frame operations")
        return self.epsilon


def basis_state(label):
    """Return ``|0>``, ``|1>`` or ``|L>`` for label ``0``, ``1`` or ``'L'``."""
    index = {0: ZERO, 1: ONE, "0": ZERO, "1": ONE, "L": LEAK, "l": LEAK, 2: LEAK}[label]
    psi = np.zeros(DIM, dtype=complex)
    psi[index] = 1.0
    return psi


def drift_hamiltonian(params):
    return -params.delta_omega * LEAK_PROJECTOR


def drive_generator(params):
    """dH/dlambda of the rotating-frame Hamiltonian; independent of lambda."""
    return SIGMA_X + params.coupling_scale * SQRT2 * LEAK_COUPLING


def rwa_hamiltonian(params, amplitude):
    """Rotating-frame Hamiltonian for envelope ``amplitude``.

    ``amplitude`` may be a scalar or an array of slice amplitudes, in which
    case a stack of shape ``(N, 3, 3)`` is returned.
    """
    amplitude = np.asarray(amplitude, dtype=float)
    return drift_hamiltonian(params) + amplitude[..., None, None] * drive_generator(params)


def target_not_gate():
    """NOT on the qubit, identity on |L> (both free phases set to zero)."""
    return SIGMA_X + LEAK_PROJECTOR


def frame_generator(params):
    eps = params._require_epsilon()
    return np.diag([-eps, eps, 3.0 * eps]).astype(complex)


def lab_hamiltonian(params, amplitude, t):
    """Lab-frame Hamiltonian with carrier ``2 * amplitude * cos(2 epsilon t)``.

    The factor of two makes the rotating-wave limit coincide with
    :func:`rwa_hamiltonian` at the same envelope value.
    """
    eps = params._require_epsilon()
    amplitude = np.asarray(amplitude, dtype=float)
    t = np.asarray(t, dtype=float)
    drive = 2.0 * amplitude * np.cos(2.0 * eps * t)
    drift = np.diag([-eps, eps, params.leak_energy]).astype(complex)
    coupling = SIGMA_X + params.coupling_scale * SQRT2 * LEAK_COUPLING
    return drift + drive[..., None, None] * coupling


def rotating_frame_transform(params, t):
    """V(t) = exp(-i t D) with D = diag(-eps, eps, 3 eps)."""
    return expm_hermitian(frame_generator(params), t)
