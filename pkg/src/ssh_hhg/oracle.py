"""Brute-force cross-checks for tiny chains and short records.

Nothing here is used by the production path. The many-body part works in
the full fixed-particle-number Fock space, ordering sites 0..n-1 and using
``c_j^+ |occ> = (-1)^{#occupied sites below j} |occ + j>``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .correlations import CurrentRecord
from .drive import DriveSpec
from .model import ChainSpec, DrivenHamiltonian, bond_hoppings, tridiagonal_dense
from .quantum_optics import G0_DEFAULT

MAX_FOCK_DIM = 12870  # C(16, 8)
MAX_DIRECT_STEPS = 4000


@dataclass(frozen=True)
class FockBasis:
    n_sites: int
    n_particles: int
    states: tuple[int, ...]  # ascending bitmasks

    @classmethod
    def half_filled(cls, chain: ChainSpec) -> "FockBasis":
        n = chain.n_sites
        dim = math.comb(n, chain.n_cells)
        if dim > MAX_FOCK_DIM:
            raise ValueError(f"Fock dimension {dim} exceeds the oracle limit {MAX_FOCK_DIM}")
        masks = sorted(
            sum(1 << j for j in occ) for occ in itertools.combinations(range(n), chain.n_cells)
        )
        return cls(n, chain.n_cells, tuple(masks))

    @property
    def dimension(self) -> int:
        return len(self.states)

    def index(self) -> dict[int, int]:
        return {s: i for i, s in enumerate(self.states)}


def hop_sign(mask: int, i: int, j: int) -> int:
    """Sign of ``c_i^+ c_j`` acting on ``mask`` (j occupied, i empty or i == j)."""
    lo, hi = min(i, j), max(i, j)
    between = bin(mask & (((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1))).count("1")
    return -1 if between % 2 else 1


def one_body_operator(basis: FockBasis, op: np.ndarray) -> np.ndarray:
    """Second quantization of ``sum_ij op[i, j] c_i^+ c_j`` in ``basis``."""
    index = basis.index()
    out = np.zeros((basis.dimension, basis.dimension), dtype=complex)
    n = basis.n_sites
    for col, mask in enumerate(basis.states):
        for j in range(n):
            if not mask >> j & 1:
                continue
            for i in range(n):
                if op[i, j] == 0:
                    continue
                if i == j:
                    out[col, col] += op[i, i]
                    continue
                if mask >> i & 1:
                    continue
                new = mask ^ (1 << j) ^ (1 << i)
                out[index[new], col] += hop_sign(mask, i, j) * op[i, j]
    return out


def slater_state(basis: FockBasis, orbitals: np.ndarray) -> np.ndarray:
    """Fock amplitudes of ``prod_m gamma_m^+ |0>`` for the given orbital columns.

    Creation operators are applied in column order, last column first
    acting on the vacuum, so the amplitude on an occupation is the
    determinant of the orbital rows at the occupied sites.
    """
    out = np.zeros(basis.dimension, dtype=complex)
    for col, mask in enumerate(basis.states):
        rows = [j for j in range(basis.n_sites) if mask >> j & 1]
        out[col] = np.linalg.det(orbitals[rows, :])
    return out


@dataclass
class ManyBodyTrajectory:
    basis: FockBasis
    times: np.ndarray
    propagators: np.ndarray  # U(t_k) in Fock space
    initial: np.ndarray
    currents: np.ndarray  # many-body current operator at each t_k
    ground_energy: float

    def state(self, k: int) -> np.ndarray:
        return self.propagators[k] @ self.initial

    def expectation_current(self) -> np.ndarray:
        out = np.empty(self.times.size)
        for k in range(self.times.size):
            psi = self.state(k)
            out[k] = np.vdot(psi, self.currents[k] @ psi).real
        return out


def manybody_evolve(chain: ChainSpec, drive: DriveSpec, n_steps: int | None = None, dt: float | None = None) -> ManyBodyTrajectory:
    """Exact midpoint propagation of the half-filled chain in Fock space.

    The initial state is the exact many-body ground state found by dense
    diagonalization in Fock space.
    """
    if chain.n_cells > 4:
        raise ValueError("many-body oracle is limited to n_cells <= 4")
    basis = FockBasis.half_filled(chain)
    dt = drive.dt if dt is None else dt
    if n_steps is None:
        n_steps = int(np.ceil(drive.duration / dt - 1e-9))
    ham = DrivenHamiltonian(chain, drive)

    h0 = one_body_operator(basis, tridiagonal_dense(bond_hoppings(chain).astype(complex)))
    evals, evecs = np.linalg.eigh(h0)
    ground = evecs[:, 0]

    props = np.empty((n_steps + 1, basis.dimension, basis.dimension), dtype=complex)
    currents = np.empty_like(props)
    props[0] = np.eye(basis.dimension)
    for k in range(n_steps + 1):
        t = k * dt
        currents[k] = one_body_operator(basis, ham.current_dense(t))
        if k < n_steps:
            hm = one_body_operator(basis, ham.dense(t + 0.5 * dt))
            props[k + 1] = expm(-1j * dt * hm) @ props[k]
    return ManyBodyTrajectory(basis, np.arange(n_steps + 1) * dt, props, ground, currents, float(evals[0]))


def manybody_correlation(traj: ManyBodyTrajectory, k1: int, k2: int) -> complex:
    """<dJ_H(t_k1) dJ_H(t_k2)> in the Heisenberg picture."""

    def fluct(k):
        u = traj.propagators[k]
        jh = u.conj().T @ traj.currents[k] @ u
        mean = np.vdot(traj.initial, jh @ traj.initial)
        return jh - mean * np.eye(jh.shape[0])

    psi = traj.initial
    return complex(np.vdot(psi, fluct(k1) @ (fluct(k2) @ psi)))


def manybody_transition_current(traj: ManyBodyTrajectory, orbitals: np.ndarray, occupied, a: int, b: int, k: int) -> complex:
    """<Psi_I| U^+ J U |Psi_M> with Psi_M the determinant with a replaced by b."""
    occ = list(occupied)
    excited = [b if m == a else m for m in occ]
    psi_i = slater_state(traj.basis, orbitals[:, occ])
    psi_m = slater_state(traj.basis, orbitals[:, excited])
    u = traj.propagators[k]
    return complex(np.vdot(u @ psi_i, traj.currents[k] @ (u @ psi_m)))


def direct_variance(record: CurrentRecord, omega: float, theta, g0: float = G0_DEFAULT, n_emitters: int = 1, exclude_edges: bool = False, excess_only: bool = False):
    """Literal O(T^2) trapezoidal double sums for the quadrature variance.

    ``theta`` may be an array; the double sums are formed once and the
    angle enters only through the phase ``exp(-2 i theta)``.
    """
    if record.n_times - 1 > MAX_DIRECT_STEPS:
        raise ValueError(f"direct evaluation limited to {MAX_DIRECT_STEPS} steps")
    jm = record.channel_matrix()
    if exclude_edges:
        jm = jm[:, ~record.edge_channels.reshape(-1)]
    t = record.times
    dt = record.dt
    tf = t[-1]
    n = t.size
    w = np.full(n, dt)
    w[0] = w[-1] = dt / 2
    corr = jm @ jm.conj().T  # corr[k, l] = <dJ(t_k) dJ(t_l)>

    first = np.sum(np.outer(w, w) * np.exp(-1j * omega * (t[:, None] - t[None, :])) * corr)
    phase = np.exp(-1j * omega * (2 * tf - t[:, None] - t[None, :]))
    second = np.sum(np.outer(w, w) * phase * corr)
    inner = np.zeros((n, n))
    for k in range(1, n):
        inner[k, : k + 1] = dt
        inner[k, 0] = inner[k, k] = dt / 2
    commutator = corr.T - corr  # <[dJ(t_l), dJ(t_k)]> at [k, l]
    third = np.sum(w[:, None] * inner * phase * commutator)

    rot = np.exp(-2j * np.asarray(theta, dtype=float))
    bracket = first.real - np.real((second - third) * rot)
    excess = g0 ** 2 * n_emitters / (2 * omega) * bracket
    out = excess if excess_only else 0.25 + excess
    return float(out) if np.ndim(out) == 0 else out


def direct_dft(signal: np.ndarray, dt: float, omega: float, window: np.ndarray | None = None) -> float:
    """Intensity of one frequency component by explicit cosine/sine sums."""
    t = np.arange(signal.size) * dt
    x = signal if window is None else signal * window
    re = math.fsum(x * np.cos(omega * t) * dt)
    im = math.fsum(-x * np.sin(omega * t) * dt)
    return re * re + im * im


def theta_grid_search(variance, n_points: int = 10_000):
    """Minimum of ``variance(theta)`` over theta = pi k / n_points, k = 1..n_points."""
    thetas = np.pi * np.arange(1, n_points + 1) / n_points
    values = np.array([variance(th) for th in thetas])
    i = int(np.argmin(values))
    return float(thetas[i]), float(values[i])
