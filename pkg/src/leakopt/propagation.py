"""Piecewise-constant time evolution in the rotating frame (and the lab frame)."""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientResolution
from .linalg import dagger, expm_hermitian, spectral_expm
from .model import lab_hamiltonian, rotating_frame_transform, rwa_hamiltonian

RECOMMENDED_MAX_DT = 0.1


@dataclass(frozen=True)
class PropagatorStack:
    """Slice propagators and their cumulative products.

    With 0-based slice index ``j``: ``forward[j] = U_j ... U_0`` and
    ``backward[j] = U_{N-1} ... U_{j+1}`` (identity for the last slice), so
    ``backward[j] @ forward[j] == total`` for every ``j``.
    """

    slices: np.ndarray = field(repr=False)
    forward: np.ndarray = field(repr=False)
    backward: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    dt: float = 0.0

    @property
    def total(self):
        return self.forward[-1]

    @property
    def before(self):
        """``F_{j-1}``: evolution up to the start of slice ``j``."""
        eye = np.eye(self.forward.shape[-1], dtype=complex)[None]
        return np.concatenate([eye, self.forward[:-1]])


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    populations: np.ndarray
    states: np.ndarray = field(repr=False)

    @property
    def norm_defect(self):
        return float(np.max(np.abs(self.populations.sum(axis=1) - 1.0)))


def _chain(us):
    out = np.empty_like(us)
    acc = us[0]
    out[0] = acc
    for j in range(1, len(us)):
        acc = us[j] @ acc
        out[j] = acc
    return out


def _product(us):
    acc = us[0]
    for u in us[1:]:
        acc = u @ acc
    return acc


def _reverse_chain(us):
    n = len(us)
    out = np.empty_like(us)
    acc = np.eye(us.shape[-1], dtype=complex)
    out[n - 1] = acc
    for j in range(n - 1, 0, -1):
        acc = acc @ us[j]
        out[j - 1] = acc
    return out


def propagate(params, pulse):
    """Build U_j = exp(-i dt H(lambda_j)) and the forward/backward stacks."""
    if pulse.dt > RECOMMENDED_MAX_DT / params.delta_omega:
        warnings.warn(
            f"slice length {pulse.dt:.3g} exceeds the recommended {RECOMMENDED_MAX_DT}/delta_omega",
            stacklevel=2,
        )
    hs = rwa_hamiltonian(params, pulse.amplitudes)
    us, w, v = spectral_expm(hs, pulse.dt)
    return PropagatorStack(
        slices=us,
        forward=_chain(us),
        backward=_reverse_chain(us),
        eigenvalues=w,
        eigenvectors=v,
        dt=pulse.dt,
    )


def total_propagator(params, pulse):
    """U(t_g) only; skips the backward stack."""
    us = expm_hermitian(rwa_hamiltonian(params, pulse.amplitudes), pulse.dt)
    return _product(us)


def evolve_state(params, pulse, psi0):
    """Populations (p0, p1, pL) at every slice boundary, starting from ``psi0``."""
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-12:
        raise ValueError("initial state must be normalized")
    stack = propagate(params, pulse)
    states = np.concatenate([psi0[None], stack.forward @ psi0])
    return Trajectory(times=pulse.edges, populations=np.abs(states) ** 2, states=states)


def min_lab_substeps(params, pulse):
    """Sub-steps per slice giving at least 20 samples per carrier period."""
    return max(1, math.ceil(40 * params._require_epsilon() * pulse.dt / np.pi - 1e-9))


def propagate_lab_frame(params, pulse, substeps=None):
    """Lab-frame propagator referred back to the rotating frame.

    Each slice is split into ``substeps`` equal pieces; the carrier is sampled
    at the piece midpoints. Returns ``V(t_g)^dag U_lab(t_g)``, directly
    comparable with ``propagate(params, pulse).total``.
    """
    floor = min_lab_substeps(params, pulse)
    if substeps is None:
        substeps = 4 * floor
    if substeps < floor:
        raise InsufficientResolution(f"substeps={substeps} below the carrier floor {floor}")
    h = pulse.dt / substeps
    t_mid = (np.arange(pulse.n_slices * substeps) + 0.5) * h
    amps = np.repeat(pulse.amplitudes, substeps)
    us = expm_hermitian(lab_hamiltonian(params, amps, t_mid), h)
    u_lab = _product(us)
    return dagger(rotating_frame_transform(params, pulse.gate_time)) @ u_lab
