"""Step-size and Krylov-dimension sensitivity of spectra and squeezing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .pipeline import PhaseResult, run_phase

PEAK_DYNAMIC_RANGE = 1e-6
ETA_SCALE_TOL = 0.1
PEAK_REL_TOL = 0.01


def harmonic_peaks(order: np.ndarray, intensity: np.ndarray, dynamic_range: float = PEAK_DYNAMIC_RANGE):
    """Odd-harmonic peak heights within ``dynamic_range`` of the strongest one.

    The peak of harmonic q is the largest intensity with order in
    [q - 1/2, q + 1/2]. Returns (orders, heights).
    """
    qmax = int(np.floor(order.max() - 0.5))
    qs = np.arange(1, qmax + 1, 2)
    heights = np.array([intensity[(order >= q - 0.5) & (order <= q + 0.5)].max() for q in qs])
    keep = heights >= dynamic_range * heights.max()
    return qs[keep], heights[keep]


def peak_change(ref: PhaseResult, other: PhaseResult, dynamic_range: float = PEAK_DYNAMIC_RANGE) -> float:
    """Largest relative change of the reference run's significant peaks."""
    qs, h_ref = harmonic_peaks(ref.spectrum.harmonic_order, ref.spectrum.intensity, dynamic_range)
    order = other.spectrum.harmonic_order
    h_new = np.array([other.spectrum.intensity[(order >= q - 0.5) & (order <= q + 0.5)].max() for q in qs])
    return float(np.max(np.abs(h_new - h_ref) / h_ref))


def eta_change(ref: np.ndarray, other: np.ndarray) -> float:
    """Largest change of an eta curve, relative to the curve's own scale max|eta|."""
    scale = np.max(np.abs(ref))
    if scale == 0:
        return float(np.max(np.abs(other)))
    return float(np.max(np.abs(other - ref)) / scale)


@dataclass
class ConvergenceReport:
    phase: str
    variant: str
    eta_change: float
    eta_no_edge_change: float
    peak_change: float

    @property
    def converged(self) -> bool:
        return (self.eta_change < ETA_SCALE_TOL and self.eta_no_edge_change < ETA_SCALE_TOL
                and self.peak_change < PEAK_REL_TOL)

    def as_dict(self) -> dict:
        return {"phase": self.phase, "variant": self.variant, "eta_change": self.eta_change,
                "eta_no_edge_change": self.eta_no_edge_change, "peak_change": self.peak_change,
                "converged": self.converged}


def _run(config: RunConfig, phase: str, dt: float, krylov_dim: int) -> PhaseResult:
    drive = config.drive
    # same physical end time, finer grid
    n_steps = int(np.ceil(drive.duration / dt - 1e-9))
    return run_phase(
        config.chain_for(phase), drive,
        eta_omega=config.eta_grid.omega(drive.omega_l),
        spectrum_omega=config.spectrum_grid.omega(drive.omega_l),
        krylov_dim=krylov_dim, window=config.window, g0=config.g0, n_emitters=config.n_emitters,
        edge_occupation=config.edge_occupation, dt=dt, n_steps=n_steps,
    )


def compare(phase: str, variant: str, ref: PhaseResult, other: PhaseResult) -> ConvergenceReport:
    return ConvergenceReport(
        phase=phase,
        variant=variant,
        eta_change=eta_change(ref.squeezing.with_edges.eta_db, other.squeezing.with_edges.eta_db),
        eta_no_edge_change=eta_change(ref.squeezing.without_edges.eta_db, other.squeezing.without_edges.eta_db),
        peak_change=peak_change(ref, other),
    )


def convergence_study(config: RunConfig, refined_krylov: int = 8, log=None) -> list[ConvergenceReport]:
    """Compare each phase against a half-step run and a larger-Krylov run."""
    reports = []
    dt = config.drive.dt
    for phase in config.phases:
        base = _run(config, phase, dt, config.krylov_dim)
        for variant, (vdt, vk) in {"dt/2": (dt / 2, config.krylov_dim),
                                   f"krylov={refined_krylov}": (dt, refined_krylov)}.items():
            rep = compare(phase, variant, base, _run(config, phase, vdt, vk))
            if log:
                log(f"[{phase}] {variant}: eta {rep.eta_change:.3g}, eta no-edge "
                    f"{rep.eta_no_edge_change:.3g}, peaks {rep.peak_change:.3g}")
            reports.append(rep)
    return reports
