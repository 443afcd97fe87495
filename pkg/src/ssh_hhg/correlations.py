"""Expectation current and occupied-to-unoccupied transition currents.

For a Slater determinant driven by a one-body Hamiltonian, the two-time
current fluctuation correlator reduces to single excitations:

    <dJ(t') dJ(t'')> = sum_{a occ, b unocc} j_ab(t') conj(j_ab(t'')),
    j_ab(t) = <psi_a(t)| j(t) |psi_b(t)>.

The fermionic sign of each excited determinant is dropped; it enters every
observable squared and cancels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .drive import DriveSpec
from .model import ChainSpec, DrivenHamiltonian, tridiagonal_matvec
from .propagator import PropagationRun, iter_propagation
from .spectral import SpectralDecomposition

IMAG_TOL = 1e-10


class CurrentError(RuntimeError):
    pass


@dataclass
class CurrentRecord:
    """Current time series on a uniform grid.

    ``j_trans`` has shape (n_occ, n_unocc, n_times) and may be ``None`` for
    streamed runs where only reduced quantities were kept.
    """

    times: np.ndarray
    dt: float
    j_exp: np.ndarray
    occupied: tuple[int, ...]
    unoccupied: tuple[int, ...]
    edge_indices: tuple[int, ...] = ()
    j_trans: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_times(self) -> int:
        return self.times.size

    @property
    def t_final(self) -> float:
        return float(self.times[-1])

    @property
    def edge_channels(self) -> np.ndarray:
        """Boolean (n_occ, n_unocc) mask of channels touching an edge state."""
        edge = set(self.edge_indices)
        occ = np.array([a in edge for a in self.occupied])
        unocc = np.array([b in edge for b in self.unoccupied])
        return occ[:, None] | unocc[None, :]

    def channel_matrix(self) -> np.ndarray:
        """Transition currents as (n_times, n_channels), channels row-major in (a, b)."""
        if self.j_trans is None:
            raise CurrentError("transition currents were not retained for this record")
        n_occ, n_unocc, n_t = self.j_trans.shape
        return self.j_trans.reshape(n_occ * n_unocc, n_t).T

    def truncated(self, n_steps: int) -> "CurrentRecord":
        """Record restricted to the first ``n_steps`` steps (``n_steps + 1`` points)."""
        k = n_steps + 1
        return CurrentRecord(
            times=self.times[:k],
            dt=self.dt,
            j_exp=self.j_exp[:k],
            occupied=self.occupied,
            unoccupied=self.unoccupied,
            edge_indices=self.edge_indices,
            j_trans=None if self.j_trans is None else self.j_trans[:, :, :k],
            meta=dict(self.meta),
        )

    def with_sign_flip(self) -> "CurrentRecord":
        return CurrentRecord(
            self.times, self.dt, self.j_exp, self.occupied, self.unoccupied,
            self.edge_indices, None if self.j_trans is None else -self.j_trans, dict(self.meta),
        )


def current_snapshot(j_upper: np.ndarray, psi: np.ndarray, occupied, unoccupied):
    """Return (<J>, j_trans block) for orbitals ``psi`` and current band ``j_upper``."""
    occ = list(occupied)
    unocc = list(unoccupied)
    j_psi = tridiagonal_matvec(j_upper, psi)
    p_occ = psi[:, occ]
    diag = np.einsum("ij,ij->j", p_occ.conj(), j_psi[:, occ])
    j_exp = diag.sum()
    trans = p_occ.conj().T @ j_psi[:, unocc]
    return j_exp, trans


def fluctuation_direct(j_dense: np.ndarray, psi_occ: np.ndarray) -> float:
    """<J^2> - <J>^2 in the Slater determinant of ``psi_occ``, via Wick's theorem.

    Uses the one-body density matrix ``P`` and its complement ``1 - P``,
    so no unoccupied orbital enters.
    """
    p = psi_occ @ psi_occ.conj().T
    q = np.eye(p.shape[0]) - p
    return float(np.trace(p @ j_dense @ q @ j_dense).real)


def _check_real(value: complex, t: float):
    if abs(value.imag) > IMAG_TOL:
        raise CurrentError(f"<J> has imaginary part {value.imag:.3e} at t={t}; operator or state corrupted")


def expectation_current(run: PropagationRun, decomp: SpectralDecomposition, chain: ChainSpec, drive: DriveSpec) -> np.ndarray:
    ham = DrivenHamiltonian(chain, drive)
    occ = list(decomp.occupied)
    out = np.empty(run.times.size)
    for k, t in enumerate(run.times):
        psi = run.states[k][:, occ]
        val = np.einsum("ij,ij->", psi.conj(), tridiagonal_matvec(ham.current_band(t), psi))
        _check_real(val, t)
        out[k] = val.real
    return out


def transition_currents(run: PropagationRun, decomp: SpectralDecomposition, chain: ChainSpec, drive: DriveSpec) -> np.ndarray:
    """Array (n_occ, n_unocc, n_times) of ``<psi_a(t)| J(t) |psi_b(t)>``."""
    ham = DrivenHamiltonian(chain, drive)
    occ, unocc = decomp.occupied, decomp.unoccupied
    out = np.empty((len(occ), len(unocc), run.times.size), dtype=complex)
    for k, t in enumerate(run.times):
        _, out[:, :, k] = current_snapshot(ham.current_band(t), run.states[k], occ, unocc)
    return out


def record_currents(
    decomp: SpectralDecomposition,
    chain: ChainSpec,
    drive: DriveSpec,
    krylov_dim: int = 6,
    dt: float | None = None,
    n_steps: int | None = None,
    sinks: Iterable = (),
    retain: bool = True,
    chunk: int = 256,
) -> CurrentRecord:
    """Propagate all orbitals and stream currents to ``sinks``.

    Every sink gets ``sink.update(k0, block)`` with ``block`` of shape
    (n_steps_in_chunk, n_channels); channels are row-major in (a, b). With
    ``retain=False`` only ``j_exp`` is kept, which bounds memory for long
    chains.
    """
    dt = drive.dt if dt is None else dt
    if n_steps is None:
        n_steps = int(np.ceil(drive.duration / dt - 1e-9))
    sinks = list(sinks)
    ham = DrivenHamiltonian(chain, drive)
    occ, unocc = decomp.occupied, decomp.unoccupied
    n_ch = len(occ) * len(unocc)

    j_exp = np.empty(n_steps + 1)
    kept = np.empty((n_steps + 1, n_ch), dtype=complex) if retain else None
    buf = np.empty((chunk, n_ch), dtype=complex)
    filled, k0 = 0, 0

    def flush():
        nonlocal filled, k0
        for sink in sinks:
            sink.update(k0, buf[:filled])
        k0 += filled
        filled = 0

    for k, t, psi in iter_propagation(decomp, chain, drive, krylov_dim, dt, n_steps):
        val, trans = current_snapshot(ham.current_band(t), psi, occ, unocc)
        _check_real(val, t)
        j_exp[k] = val.real
        row = trans.reshape(-1)
        if kept is not None:
            kept[k] = row
        buf[filled] = row
        filled += 1
        if filled == chunk:
            flush()
    if filled:
        flush()

    j_trans = None
    if kept is not None:
        j_trans = np.ascontiguousarray(kept.T).reshape(len(occ), len(unocc), n_steps + 1)
    return CurrentRecord(
        times=np.arange(n_steps + 1) * dt,
        dt=dt,
        j_exp=j_exp,
        occupied=occ,
        unoccupied=unocc,
        edge_indices=decomp.edge_indices,
        j_trans=j_trans,
        meta={"n_cells": chain.n_cells, "a": chain.a, "delta": chain.delta, "krylov_dim": krylov_dim},
    )


def correlation_from_channels(record: CurrentRecord, k1: int, k2: int) -> complex:
    """<dJ(t_k1) dJ(t_k2)> rebuilt from the transition currents."""
    j = record.j_trans
    return complex(np.sum(j[:, :, k1] * np.conj(j[:, :, k2])))


def write_current_record(record: CurrentRecord, path) -> Path:
    """Binary dump: JSON header (dims, dt, parameters) plus row-major complex data."""
    path = Path(path)
    header = {
        "dt": record.dt,
        "n_times": record.n_times,
        "occupied": list(record.occupied),
        "unoccupied": list(record.unoccupied),
        "edge_indices": list(record.edge_indices),
        "j_trans_shape": None if record.j_trans is None else list(record.j_trans.shape),
        "meta": record.meta,
    }
    arrays = {"header": np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8),
              "times": record.times, "j_exp": record.j_exp}
    if record.j_trans is not None:
        arrays["j_trans"] = np.ascontiguousarray(record.j_trans)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def read_current_record(path) -> CurrentRecord:
    with np.load(path) as data:
        header = json.loads(bytes(data["header"]).decode())
        j_trans = data["j_trans"] if "j_trans" in data.files else None
        return CurrentRecord(
            times=data["times"],
            dt=header["dt"],
            j_exp=data["j_exp"],
            occupied=tuple(header["occupied"]),
            unoccupied=tuple(header["unoccupied"]),
            edge_indices=tuple(header["edge_indices"]),
            j_trans=j_trans,
            meta=header["meta"],
        )
