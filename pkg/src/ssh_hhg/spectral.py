"""Field-free eigenstates, half-filling occupation and edge-state bookkeeping."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import eigh_tridiagonal, LinAlgError

from .model import (
    ChainSpec,
    bond_hoppings,
    build_hoppings,
    build_positions,
    chiral_operator,
    tridiagonal_matvec,
)

EDGE_CHOICES = ("lower", "upper")

# fraction of sites counted as "outer" at each end of the chain
EDGE_REGION_FRACTION = 0.10


class SpectralError(RuntimeError):
    pass


@dataclass(frozen=True)
class EdgeStates:
    """Mid-gap states found by the energy criterion, with their edge weights."""

    indices: tuple[int, ...]
    threshold: float
    edge_weight: dict[int, float] = field(default_factory=dict)

    @property
    def localized(self) -> dict[int, bool]:
        return {m: w >= 0.5 for m, w in self.edge_weight.items()}

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


@dataclass(frozen=True)
class SpectralDecomposition:
    chain: ChainSpec
    energies: np.ndarray
    states: np.ndarray  # (n_sites, n_states), columns are eigenvectors
    occupied: tuple[int, ...]
    edges: EdgeStates

    @property
    def n_states(self) -> int:
        return self.energies.size

    @property
    def edge_indices(self) -> tuple[int, ...]:
        return self.edges.indices

    @property
    def unoccupied(self) -> tuple[int, ...]:
        occ = set(self.occupied)
        return tuple(m for m in range(self.n_states) if m not in occ)

    @property
    def occupied_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_states, dtype=bool)
        mask[list(self.occupied)] = True
        return mask

    def bulk_gap(self) -> float:
        """Gap between the bulk bands, ignoring mid-gap edge states."""
        edge = set(self.edge_indices)
        bulk = np.array([e for m, e in enumerate(self.energies) if m not in edge])
        return float(bulk[bulk > 0].min() - bulk[bulk < 0].max())


def edge_weight(chain: ChainSpec, state: np.ndarray, fraction: float = EDGE_REGION_FRACTION) -> float:
    """Probability weight on the outer ``fraction`` of sites at each end."""
    k = max(1, math.ceil(fraction * chain.n_sites))
    p = np.abs(state) ** 2
    if 2 * k >= p.size:
        return float(p.sum())
    return float(p[:k].sum() + p[-k:].sum())


def band_edge(chain: ChainSpec) -> float:
    """Infinite-chain band edge ``||v| - |w||``; half the bulk gap."""
    hop = build_hoppings(chain)
    return abs(abs(hop.v) - abs(hop.w))


def classify_edge_states(decomp_or_energies, energy_threshold=None, *, chain=None, states=None) -> EdgeStates:
    """Indices of states with ``|E| < energy_threshold``.

    The default threshold is half the field-free bulk gap. A threshold
    above that would reach into the bulk band and is rejected. The edge
    weight of each selected state is reported alongside; exponential edge
    localization shows up as a weight close to one.
    """
    if isinstance(decomp_or_energies, SpectralDecomposition):
        chain = decomp_or_energies.chain
        energies = decomp_or_energies.energies
        states = decomp_or_energies.states
    else:
        energies = np.asarray(decomp_or_energies)
        if chain is None or states is None:
            raise TypeError("chain and states are required when passing raw energies")

    limit = band_edge(chain)
    if energy_threshold is None:
        energy_threshold = limit
    if energy_threshold < 0:
        raise ValueError(f"energy threshold must be non-negative, got {energy_threshold}")
    if energy_threshold > limit * (1 + 1e-12):
        raise ValueError(
            f"energy threshold {energy_threshold:.6g} lies inside the bulk band "
            f"(band edge {limit:.6g} a.u.); bulk states would be classified as edge states"
        )

    idx = tuple(int(m) for m in np.flatnonzero(np.abs(energies) < energy_threshold))
    n = chain.n_cells
    if not set(idx) <= {n - 1, n}:
        raise SpectralError(f"states {idx} below threshold are not the mid-gap pair ({n - 1}, {n})")
    weights = {m: edge_weight(chain, states[:, m]) for m in idx}
    return EdgeStates(indices=idx, threshold=float(energy_threshold), edge_weight=weights)


def _fix_signs(states: np.ndarray) -> np.ndarray:
    pivot = np.argmax(np.abs(states), axis=0)
    signs = np.sign(states[pivot, np.arange(states.shape[1])])
    signs[signs == 0] = 1.0
    return states * signs


def diagonalize(chain: ChainSpec, edge_occupation: str = "lower", energy_threshold=None) -> SpectralDecomposition:
    """Eigenstates of the field-free chain at half filling.

    ``edge_occupation`` picks which of the two split mid-gap states is
    filled in the topological phase; it has no effect in the trivial phase
    where the lowest ``n_cells`` states are occupied regardless.
    """
    if edge_occupation not in EDGE_CHOICES:
        raise ValueError(f"edge_occupation must be one of {EDGE_CHOICES}")
    try:
        energies, states = eigh_tridiagonal(np.zeros(chain.n_sites), bond_hoppings(chain), lapack_driver="stev")
    except LinAlgError as exc:
        raise SpectralError(f"eigensolver failed for {chain}: {exc}") from exc
    states = _fix_signs(states)

    edges = classify_edge_states(energies, energy_threshold, chain=chain, states=states)
    order = np.argsort(energies, kind="stable")
    occupied = [int(m) for m in order[: chain.n_cells]]
    if edge_occupation == "upper" and len(edges) == 2:
        lo, hi = sorted(edges.indices, key=lambda m: (energies[m], m))
        occupied = [hi if m == lo else m for m in occupied]
    return SpectralDecomposition(
        chain=chain,
        energies=energies,
        states=states,
        occupied=tuple(sorted(occupied)),
        edges=edges,
    )


def chiral_partner_residual(decomp: SpectralDecomposition) -> float:
    """max_m ||H (G psi_m) + E_m (G psi_m)|| with G the sublattice parity."""
    gamma = chiral_operator(decomp.chain)[:, None]
    partner = gamma * decomp.states
    h_partner = tridiagonal_matvec(bond_hoppings(decomp.chain), partner)
    return float(np.max(np.linalg.norm(h_partner + decomp.energies * partner, axis=0)))


def write_eigen_tables(decomp: SpectralDecomposition, directory) -> list[Path]:
    """Columnar dump of the spectrum and eigenvectors for figure reproduction."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    edge = set(decomp.edge_indices)
    occ = set(decomp.occupied)
    energies_path = directory / "eigenvalues.csv"
    with open(energies_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "energy", "occupied", "edge"])
        for m, e in enumerate(decomp.energies):
            writer.writerow([m, repr(float(e)), int(m in occ), int(m in edge)])
    states_path = directory / "eigenvectors.csv"
    x = build_positions(decomp.chain)
    with open(states_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["site", "x"] + [f"psi_{m}" for m in range(decomp.n_states)])
        for j in range(decomp.chain.n_sites):
            writer.writerow([j, repr(float(x[j]))] + [repr(float(c)) for c in decomp.states[j]])
    return [energies_path, states_path]
