"""Piecewise-constant control envelopes and the reference pulse families."""

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleDuration
from .linalg import expm_hermitian
from .model import rwa_hamiltonian

HALF_PI = np.pi / 2


@dataclass(frozen=True)
class ControlPulse:
    """Gate duration plus one real envelope amplitude per time slice."""

    gate_time: float
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=float).reshape(-1)
        if amps.size < 1:
            raise ValueError("a pulse needs at least one slice")
        if not np.all(np.isfinite(amps)):
            raise ValueError("pulse amplitudes must be finite")
        if not (np.isfinite(self.gate_time) and self.gate_time > 0):
            raise ValueError(f"gate_time must be positive, got {self.gate_time}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "gate_time", float(self.gate_time))

    @property
    def n_slices(self):
        return self.amplitudes.size

    @property
    def dt(self):
        return self.gate_time / self.n_slices

    @property
    def edges(self):
        return np.linspace(0.0, self.gate_time, self.n_slices + 1)

    @property
    def starts(self):
        return self.edges[:-1]

    @property
    def midpoints(self):
        return (np.arange(self.n_slices) + 0.5) * self.dt

    @property
    def area(self):
        return float(np.sum(self.amplitudes) * self.dt)

    def with_amplitudes(self, amplitudes):
        return ControlPulse(self.gate_time, amplitudes)

    def __eq__(self, other):
        if not isinstance(other, ControlPulse):
            return NotImplemented
        return self.gate_time == other.gate_time and np.array_equal(
            self.amplitudes, other.amplitudes
        )

    __hash__ = None


def _cell_average(src_edges, values, dst_edges):
    # Cumulative area is piecewise linear in t, so interpolation is exact.
    cumulative = np.concatenate([[0.0], np.cumsum(values * np.diff(src_edges))])
    areas = np.diff(np.interp(dst_edges, src_edges, cumulative))
    return areas / np.diff(dst_edges)


def rectangular_pulse(gate_time, n_slices):
    """Constant pi/2-area pulse: lambda = pi / (2 t_g) on every slice."""
    return ControlPulse(gate_time, np.full(int(n_slices), HALF_PI / gate_time))


def gaussian_pulse(gate_time, alpha, n_slices, renormalize=True):
    """Gaussian envelope centred at t_g/2, sampled at slice midpoints.

    The raw envelope is ``alpha / t_g * sqrt(pi/2) * exp(-alpha^2 (t - t_g/2)^2 / t_g^2)``.
    Its area over the whole real line is pi/sqrt(2), so by default the samples
    are rescaled to a discrete area of exactly pi/2; ``renormalize=False``
    keeps the raw values.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    t = (np.arange(int(n_slices)) + 0.5) * gate_time / n_slices
    amps = alpha / gate_time * np.sqrt(np.pi / 2) * np.exp(
        -(alpha**2) / gate_time**2 * (t - gate_time / 2) ** 2
    )
    if renormalize:
        amps = amps * HALF_PI / (amps.sum() * gate_time / n_slices)
    return ControlPulse(gate_time, amps)


def composite_duration(rho, theta1=np.pi / 8, theta2=np.pi / 4, delta_omega=1.0):
    """Shortest gate time holding R(theta1) W R(theta2) W R(theta1) at drive ``rho``."""
    return 2 * np.pi / delta_omega + (2 * theta1 + theta2) / rho


def composite_sequence(gate_time, theta1, theta2, rho, n_slices, delta_omega=1.0):
    """Refocusing sequence R(theta1) W(pi/dw) R(theta2) W(pi/dw) R(theta1).

    Rotations are constant-amplitude segments of height ``rho``; each wait is a
    zero-amplitude window of length pi/delta_omega. The sequence is centred in
    ``[0, gate_time]`` and cell-averaged onto the slice grid, which keeps every
    segment's area (rotation angle) exact.
    """
    if abs(2 * theta1 + theta2 - HALF_PI) > 1e-12:
        raise ValueError(f"angles must satisfy 2*theta1 + theta2 = pi/2, got {2 * theta1 + theta2}")
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    needed = composite_duration(rho, theta1, theta2, delta_omega)
    if gate_time < needed * (1 - 1e-12):
        raise InfeasibleDuration(
            f"gate_time {gate_time:.6g} too short for rho={rho:.6g}; need >= {needed:.6g}"
        )
    wait = np.pi / delta_omega
    durations = np.array([theta1 / rho, wait, theta2 / rho, wait, theta1 / rho])
    heights = np.array([rho, 0.0, rho, 0.0, rho])
    pad = max(gate_time - durations.sum(), 0.0) / 2
    durations = np.concatenate([[pad], durations, [pad]])
    heights = np.concatenate([[0.0], heights, [0.0]])
    src_edges = np.concatenate([[0.0], np.cumsum(durations)])
    src_edges[-1] = gate_time
    dst_edges = np.linspace(0.0, gate_time, int(n_slices) + 1)
    return ControlPulse(gate_time, _cell_average(src_edges, heights, dst_edges))


def free_evolution_check(params):
    """Drive-free propagator over pi/delta_omega; ideally diag(1, 1, -1)."""
    return expm_hermitian(rwa_hamiltonian(params, 0.0), np.pi / params.delta_omega)


def resample(pulse, n_new):
    """Area-preserving piecewise-constant resampling onto ``n_new`` slices."""
    n_new = int(n_new)
    if n_new < 1:
        raise ValueError("n_new must be at least 1")
    if n_new == pulse.n_slices:
        return pulse.with_amplitudes(pulse.amplitudes.copy())
    dst = np.linspace(0.0, pulse.gate_time, n_new + 1)
    return pulse.with_amplitudes(_cell_average(pulse.edges, pulse.amplitudes, dst))
