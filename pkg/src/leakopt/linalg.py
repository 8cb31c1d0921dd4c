"""Small dense complex linear algebra: Hermitian exponentials and friends.

Everything here works on single matrices of shape ``(n, n)`` as well as on
stacks of shape ``(..., n, n)``; the stacked form is what the propagation code
uses to build all slice propagators in one call. Units follow hbar = 1.
"""

from functools import reduce

import numpy as np

from .errors import DimensionMismatch, NonHermitianInput

HERMITIAN_TOL = 1e-12


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def hermiticity_defect(h):
    h = np.asarray(h)
    if h.size == 0:
        return 0.0
    return float(np.max(np.abs(h - dagger(h))))


def spectral_expm(h, tau, *, check=True):
    """Return ``(U, w, v)`` with ``U = exp(-1j * tau * h)``.

    ``w`` and ``v`` are the eigenvalues and eigenvectors of ``h`` so that
    callers needing derivatives of the exponential can reuse them.
    """
    h = np.asarray(h, dtype=complex)
    if h.shape[-1] != h.shape[-2]:
        raise DimensionMismatch(f"expected square matrices, got shape {h.shape}")
    if check:
        defect = hermiticity_defect(h)
        if defect > HERMITIAN_TOL:
            raise NonHermitianInput(defect)
    if not np.isfinite(tau):
        raise ValueError(f"time step must be finite, got {tau}")
    w, v = np.linalg.eigh(h)
    phases = np.exp(-1j * tau * w)
    u = (v * phases[..., None, :]) @ dagger(v)
    return u, w, v


def expm_hermitian(h, tau):
    """Unitary ``exp(-i tau H)`` for Hermitian ``H`` via its eigendecomposition.

    Parameters
    ----------
    h : array_like
        Hermitian matrix or stack of matrices, shape ``(..., n, n)``.
    tau : float
        Evolution time.

    Raises
    ------
    NonHermitianInput
        If ``max |H - H^dag|`` exceeds 1e-12.
    """
    return spectral_expm(h, tau)[0]


def expm_derivative(w, v, tau, direction):
    """Directional derivative of ``exp(-i tau H)`` along ``direction``.

    Uses the Daleckii-Krein formula in the eigenbasis ``(w, v)`` of ``H``:
    the divided differences of ``exp(-i tau x)`` weight the rotated direction
    matrix entrywise. Exact for any ``tau``; degenerate eigenvalue pairs fall
    back to the analytic limit ``-i tau exp(-i tau w)``.
    """
    w = np.asarray(w)
    v = np.asarray(v)
    phases = np.exp(-1j * tau * w)
    dw = w[..., :, None] - w[..., None, :]
    dp = phases[..., :, None] - phases[..., None, :]
    close = np.abs(dw) < 1e-9
    limit = -1j * tau * 0.5 * (phases[..., :, None] + phases[..., None, :])
    weights = np.where(close, limit, dp / np.where(close, 1.0, dw))
    rotated = dagger(v) @ np.asarray(direction, dtype=complex) @ v
    return v @ (weights * rotated) @ dagger(v)


def unitarity_defect(u):
    """Max entry magnitude of ``U^dag U - I`` (per matrix for stacks)."""
    u = np.asarray(u)
    if u.shape[-1] != u.shape[-2]:
        raise DimensionMismatch(f"expected square matrices, got shape {u.shape}")
    eye = np.eye(u.shape[-1])
    return np.max(np.abs(dagger(u) @ u - eye), axis=(-2, -1))


def matmul_chain(ms):
    """Compose matrices in application order.

    The first element acts first on a state, so ``[A, B, C]`` gives ``C @ B @ A``.
    """
    ms = [np.asarray(m) for m in ms]
    if not ms:
        raise DimensionMismatch("cannot compose an empty sequence")
    n = ms[0].shape[-1]
    for m in ms:
        if m.ndim != 2 or m.shape != (n, n):
            raise DimensionMismatch(f"expected {n}x{n} factors, got {m.shape}")
    return reduce(lambda acc, m: m @ acc, ms[1:], ms[0])


def normalize(psi):
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    return psi / norm
