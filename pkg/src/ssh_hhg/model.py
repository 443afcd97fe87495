"""Finite SSH chain in the site basis, with and without a Peierls-coupled drive.

Site ``j`` (0-based here) sits at ``x = (j + 1) a - (-1)**(j + 1) delta``.
Everything is stored as the upper off-diagonal of a Hermitian tridiagonal
matrix; dense matrices are built only on request.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChainSpec",
    "HoppingPair",
    "build_hoppings",
    "build_positions",
    "bond_lengths",
    "bond_hoppings",
    "hopping_band",
    "current_band",
    "tridiagonal_dense",
    "tridiagonal_matvec",
    "hamiltonian_at",
    "current_operator_at",
    "chiral_operator",
    "DrivenHamiltonian",
]


@dataclass(frozen=True)
class ChainSpec:
    """Geometry of an open SSH chain in atomic units.

    ``delta > 0`` is the trivial phase, ``delta < 0`` the topological one.
    """

    n_cells: int
    a: float = 2.0
    delta: float = 0.15

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise ValueError(f"n_cells must be a positive integer, got {self.n_cells!r}")
        if not self.a - 2 * abs(self.delta) > 0:
            raise ValueError(
                f"a - 2|delta| must be positive to keep site order (a={self.a}, delta={self.delta})"
            )

    @property
    def n_sites(self) -> int:
        return 2 * self.n_cells

    @property
    def phase(self) -> str:
        if self.delta > 0:
            return "trivial"
        if self.delta < 0:
            return "topological"
        return "critical"

    def with_phase(self, phase: str) -> "ChainSpec":
        """Same chain with the sign of ``delta`` set to select ``phase``."""
        if phase == "trivial":
            sign = 1.0
        elif phase == "topological":
            sign = -1.0
        else:
            raise ValueError(f"unknown phase {phase!r}; expected 'trivial' or 'topological'")
        return ChainSpec(self.n_cells, self.a, sign * abs(self.delta))


@dataclass(frozen=True)
class HoppingPair:
    v: float  # intracell
    w: float  # intercell


def build_hoppings(chain: ChainSpec) -> HoppingPair:
    return HoppingPair(
        v=-math.exp(-(chain.a - 2 * chain.delta)),
        w=-math.exp(-(chain.a + 2 * chain.delta)),
    )


def build_positions(chain: ChainSpec) -> np.ndarray:
    """Diagonal of the position operator, one entry per site."""
    j = np.arange(1, chain.n_sites + 1)
    return j * chain.a - np.where(j % 2 == 0, 1.0, -1.0) * chain.delta


def bond_lengths(chain: ChainSpec) -> np.ndarray:
    """Distances ``x[j+1] - x[j]``: alternating a - 2 delta (intracell), a + 2 delta."""
    d = np.full(chain.n_sites - 1, chain.a + 2 * chain.delta)
    d[::2] = chain.a - 2 * chain.delta
    return d


def bond_hoppings(chain: ChainSpec) -> np.ndarray:
    hop = build_hoppings(chain)
    t = np.full(chain.n_sites - 1, hop.w)
    t[::2] = hop.v
    return t


def hopping_band(chain: ChainSpec, a_cl: float) -> np.ndarray:
    """Upper off-diagonal ``H[j, j+1]`` for vector potential ``a_cl``."""
    return bond_hoppings(chain) * np.exp(-1j * bond_lengths(chain) * a_cl)


def current_band(chain: ChainSpec, a_cl: float) -> np.ndarray:
    """Upper off-diagonal of ``i[H, X]``: ``i H[j, j+1] (x[j+1] - x[j])``."""
    return 1j * hopping_band(chain, a_cl) * bond_lengths(chain)


def tridiagonal_dense(upper: np.ndarray) -> np.ndarray:
    """Hermitian matrix with zero diagonal and the given upper off-diagonal."""
    n = upper.size + 1
    m = np.zeros((n, n), dtype=np.result_type(upper, complex))
    idx = np.arange(n - 1)
    m[idx, idx + 1] = upper
    m[idx + 1, idx] = np.conj(upper)
    return m


def tridiagonal_matvec(upper: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Apply the zero-diagonal Hermitian tridiagonal matrix to ``psi``.

    ``psi`` may carry trailing columns; the first axis is the site index.
    """
    out = np.zeros(psi.shape, dtype=np.result_type(upper, psi))
    if psi.ndim == 1:
        out[:-1] = upper * psi[1:]
        out[1:] += np.conj(upper) * psi[:-1]
    else:
        out[:-1] = upper[:, None] * psi[1:]
        out[1:] += np.conj(upper)[:, None] * psi[:-1]
    return out


def chiral_operator(chain: ChainSpec) -> np.ndarray:
    """Sublattice parity: +1 on A sites, -1 on B sites."""
    return np.where(np.arange(chain.n_sites) % 2 == 0, 1.0, -1.0)


def hamiltonian_at(chain: ChainSpec, drive, t: float) -> np.ndarray:
    return tridiagonal_dense(hopping_band(chain, drive.vector_potential(t)))


def current_operator_at(chain: ChainSpec, drive, t: float) -> np.ndarray:
    return tridiagonal_dense(current_band(chain, drive.vector_potential(t)))


class DrivenHamiltonian:
    """Time-dependent tridiagonal Hamiltonian of a chain under ``drive``."""

    def __init__(self, chain: ChainSpec, drive):
        self.chain = chain
        self.drive = drive
        self._hop = bond_hoppings(chain)
        self._d = bond_lengths(chain)

    @property
    def dimension(self) -> int:
        return self.chain.n_sites

    def band(self, t: float) -> np.ndarray:
        return self._hop * np.exp(-1j * self._d * self.drive.vector_potential(t))

    def current_band(self, t: float) -> np.ndarray:
        return 1j * self.band(t) * self._d

    def matvec(self, t: float, psi: np.ndarray) -> np.ndarray:
        return tridiagonal_matvec(self.band(t), psi)

    def dense(self, t: float) -> np.ndarray:
        return tridiagonal_dense(self.band(t))

    def current_dense(self, t: float) -> np.ndarray:
        return tridiagonal_dense(self.current_band(t))
