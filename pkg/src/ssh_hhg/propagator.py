"""Short-iterative Lanczos propagation of single-particle orbitals.

Each step applies ``exp(-i H(t + dt/2) dt)`` inside a Krylov space of
dimension ``krylov_dim`` built from the state itself. Columns of a state
matrix are propagated together but each gets its own Krylov space.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .drive import DriveSpec, vector_potential
from .model import ChainSpec, DrivenHamiltonian, tridiagonal_matvec
from .spectral import SpectralDecomposition

__all__ = [
    "DriveSpec",
    "vector_potential",
    "PropagationError",
    "PropagationRun",
    "lanczos_expm",
    "step",
    "iter_propagation",
    "propagate_all",
]

NORM_DRIFT_LIMIT = 1e-6
BREAKDOWN_TOL = 1e-14


class PropagationError(RuntimeError):
    """Raised when orbital norms drift, i.e. the propagator is misconfigured."""


def lanczos_expm(upper: np.ndarray, states: np.ndarray, dt: float, krylov_dim: int) -> np.ndarray:
    """Krylov approximation of ``exp(-i H dt) @ states`` for tridiagonal ``H``.

    Args:
        upper: upper off-diagonal of the zero-diagonal Hermitian ``H``.
        states: vector or (n_sites, n_states) matrix; columns are independent.
        dt: time step.
        krylov_dim: Krylov space dimension per column.

    A column whose residual vanishes has reached an invariant subspace; the
    remaining Lanczos vectors are set to zero, which decouples them from the
    projected matrix, so the result is exact for that column.
    """
    single = states.ndim == 1
    psi = states[:, None] if single else states
    n, ncol = psi.shape
    if not 1 <= krylov_dim <= n:
        raise ValueError(f"krylov_dim must lie in [1, {n}], got {krylov_dim}")

    norms = np.linalg.norm(psi, axis=0)
    basis = np.zeros((krylov_dim, n, ncol), dtype=complex)
    basis[0] = psi / np.where(norms > 0, norms, 1.0)
    alpha = np.zeros((ncol, krylov_dim))
    beta = np.zeros((ncol, max(krylov_dim - 1, 0)))

    for j in range(krylov_dim):
        w = tridiagonal_matvec(upper, basis[j])
        alpha[:, j] = np.einsum("ij,ij->j", basis[j].conj(), w).real
        if j == krylov_dim - 1:
            break
        w -= alpha[:, j] * basis[j]
        if j > 0:
            w -= beta[:, j - 1] * basis[j - 1]
        b = np.linalg.norm(w, axis=0)
        alive = b > BREAKDOWN_TOL
        beta[:, j] = np.where(alive, b, 0.0)
        basis[j + 1] = np.where(alive, w / np.where(alive, b, 1.0), 0.0)

    tri = np.zeros((ncol, krylov_dim, krylov_dim))
    k = np.arange(krylov_dim)
    tri[:, k, k] = alpha
    tri[:, k[:-1], k[1:]] = beta
    tri[:, k[1:], k[:-1]] = beta
    theta, vecs = np.linalg.eigh(tri)
    coeff = np.einsum("cij,cj,cj->ci", vecs, np.exp(-1j * dt * theta), vecs[:, 0, :])
    out = np.einsum("jnc,cj->nc", basis, coeff) * norms
    return out[:, 0] if single else out


def step(state, t, dt, chain: ChainSpec, drive: DriveSpec, krylov_dim: int = 6):
    """One midpoint Lanczos step from ``t`` to ``t + dt``."""
    ham = DrivenHamiltonian(chain, drive)
    return lanczos_expm(ham.band(t + 0.5 * dt), np.asarray(state, dtype=complex), dt, krylov_dim)


@dataclass
class PropagationRun:
    """Orbital trajectories on the uniform grid ``times``.

    ``states[k]`` is the (n_sites, n_states) matrix at ``times[k]``; column
    ``m`` started as field-free eigenvector ``m``.
    """

    times: np.ndarray
    states: np.ndarray
    max_norm_error: float

    def at(self, k: int) -> np.ndarray:
        return self.states[k]


def iter_propagation(
    decomp: SpectralDecomposition,
    chain: ChainSpec,
    drive: DriveSpec,
    krylov_dim: int = 6,
    dt: float | None = None,
    n_steps: int | None = None,
) -> Iterator[tuple[int, float, np.ndarray]]:
    """Yield ``(k, t_k, states_k)`` for every grid point, starting at k = 0.

    Each yielded array is freshly allocated. A norm drift beyond
    ``NORM_DRIFT_LIMIT`` raises ``PropagationError``.
    """
    dt = drive.dt if dt is None else dt
    if n_steps is None:
        n_steps = int(np.ceil(drive.duration / dt - 1e-9))
    krylov_dim = min(krylov_dim, chain.n_sites)
    ham = DrivenHamiltonian(chain, drive)
    psi = decomp.states.astype(complex)
    yield 0, 0.0, psi
    for k in range(n_steps):
        t = k * dt
        psi = lanczos_expm(ham.band(t + 0.5 * dt), psi, dt, krylov_dim)
        drift = np.max(np.abs(np.linalg.norm(psi, axis=0) - 1.0))
        if drift > NORM_DRIFT_LIMIT:
            raise PropagationError(
                f"orbital norm drift {drift:.3e} at step {k + 1} exceeds {NORM_DRIFT_LIMIT:g}; "
                f"check dt={dt} and krylov_dim={krylov_dim}"
            )
        yield k + 1, (k + 1) * dt, psi


def propagate_all(
    decomp: SpectralDecomposition,
    chain: ChainSpec,
    drive: DriveSpec,
    krylov_dim: int = 6,
    dt: float | None = None,
    n_steps: int | None = None,
) -> PropagationRun:
    """Propagate every eigenstate over the pulse, keeping the full history.

    Memory grows as steps * n_sites**2; meant for short chains and
    debugging. Production runs stream through ``iter_propagation``.
    """
    times, states = [], []
    max_err = 0.0
    for _, t, psi in iter_propagation(decomp, chain, drive, krylov_dim, dt, n_steps):
        times.append(t)
        states.append(psi)
        max_err = max(max_err, float(np.max(np.abs(np.linalg.norm(psi, axis=0) - 1.0))))
    return PropagationRun(times=np.array(times), states=np.array(states), max_norm_error=max_err)
