"""One driven chain, end to end: diagonalize, propagate, reduce."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .correlations import CurrentRecord, record_currents
from .drive import DriveSpec
from .model import ChainSpec
from .quantum_optics import (
    BULK,
    G0_DEFAULT,
    EdgeContribution,
    QuadratureAccumulator,
    SpectrumResult,
    channel_classes,
    coherent_spectrum,
    edge_contribution_report,
)
from .spectral import SpectralDecomposition, diagonalize


def default_eta_grid(omega_l: float, max_order: float = 40.0, per_order: int = 4) -> np.ndarray:
    q = np.arange(1, int(round(max_order * per_order)) + 1)
    return q * omega_l / per_order


def default_spectrum_grid(omega_l: float, max_order: float = 40.0, per_order: int = 20) -> np.ndarray:
    q = np.arange(0, int(round(max_order * per_order)) + 1)
    return q * omega_l / per_order


@dataclass
class PhaseResult:
    chain: ChainSpec
    drive: DriveSpec
    decomp: SpectralDecomposition
    record: CurrentRecord
    spectrum: SpectrumResult
    squeezing: EdgeContribution | None
    wall_time: float


def run_phase(
    chain: ChainSpec,
    drive: DriveSpec,
    eta_omega=None,
    spectrum_omega=None,
    krylov_dim: int = 6,
    window: str = "hann",
    g0: float = G0_DEFAULT,
    n_emitters: int = 1,
    edge_occupation: str = "lower",
    retain: bool = False,
    n_steps: int | None = None,
    dt: float | None = None,
    sinks=(),
) -> PhaseResult:
    """Simulate one chain; squeezing is skipped when ``eta_omega`` is empty.

    Extra ``sinks`` receive the transition-current blocks alongside the
    squeezing accumulator.
    """
    start = time.perf_counter()
    dt = drive.dt if dt is None else dt
    if n_steps is None:
        n_steps = int(np.ceil(drive.duration / dt - 1e-9))
    if eta_omega is None:
        eta_omega = default_eta_grid(drive.omega_l)
    if spectrum_omega is None:
        spectrum_omega = default_spectrum_grid(drive.omega_l)
    eta_omega = np.asarray(eta_omega, dtype=float)

    decomp = diagonalize(chain, edge_occupation=edge_occupation)
    sinks = list(sinks)
    acc = None
    if eta_omega.size:
        shell = CurrentRecord(np.zeros(0), dt, np.zeros(0), decomp.occupied, decomp.unoccupied, decomp.edge_indices)
        acc = QuadratureAccumulator(eta_omega, dt, n_steps, channel_classes(shell))
        sinks.append(acc)
    record = record_currents(decomp, chain, drive, krylov_dim, dt, n_steps, sinks=sinks, retain=retain)
    ramp = drive.n_on * drive.period
    spectrum = coherent_spectrum(record.j_exp, dt, spectrum_omega, window, drive.omega_l, ramp=ramp)
    sq = edge_contribution_report(acc, g0=g0, n_emitters=n_emitters) if acc is not None else None
    return PhaseResult(chain, drive, decomp, record, spectrum, sq, time.perf_counter() - start)


__all__ = ["PhaseResult", "run_phase", "default_eta_grid", "default_spectrum_grid", "BULK"]
