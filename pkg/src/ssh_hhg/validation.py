"""Oracle suite on a two-cell chain, fast enough to run from the CLI."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .correlations import correlation_from_channels, record_currents
from .drive import DriveSpec
from .model import ChainSpec
from .oracle import (
    direct_dft,
    direct_variance,
    manybody_correlation,
    manybody_evolve,
    manybody_transition_current,
    theta_grid_search,
)
from .quantum_optics import G0_DEFAULT, coherent_spectrum, quadrature_terms, spectral_window, squeezing
from .spectral import diagonalize

ORACLE_DRIVE = DriveSpec(f0=0.01, omega_l=0.0075, n_on=1, n_pl=1, dt=1.0)
TRUNCATED_STEPS = 2000


@dataclass
class Check:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value < self.tolerance)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.name}: {self.value:.3e} (tol {self.tolerance:.0e})"


def run_validation(delta: float = -0.15, seed: int = 7) -> list[Check]:
    """Many-body, direct-sum and DFT oracles against the production path."""
    rng = np.random.default_rng(seed)
    chain = ChainSpec(2, 2.0, delta)
    drive = ORACLE_DRIVE
    decomp = diagonalize(chain)
    record = record_currents(decomp, chain, drive)
    traj = manybody_evolve(chain, drive)
    checks = []

    checks.append(Check("<J(t)> vs many-body", float(np.max(np.abs(traj.expectation_current() - record.j_exp))), 1e-9))

    pairs = rng.integers(0, record.n_times, size=(100, 2))
    err = max(abs(manybody_correlation(traj, k1, k2) - correlation_from_channels(record, k1, k2)) for k1, k2 in pairs)
    checks.append(Check("<dJ dJ> vs many-body (100 pairs)", float(err), 1e-9))

    worst = 0.0
    for k in rng.integers(0, record.n_times, size=5):
        for i, a in enumerate(decomp.occupied):
            for j, b in enumerate(decomp.unoccupied):
                mb = manybody_transition_current(traj, decomp.states, decomp.occupied, a, b, int(k))
                worst = max(worst, abs(mb - record.j_trans[i, j, k]))
    checks.append(Check("j_ab vs many-body", worst, 1e-9))

    short = record.truncated(TRUNCATED_STEPS)
    omegas = drive.omega_l * np.linspace(1.3, 30.7, 10)
    thetas = np.pi * np.arange(1, 9) / 8
    terms = quadrature_terms(short, omegas)
    # error relative to each frequency's excess scale g0^2 N / 2w (I1 + |D|);
    # pointwise relative error is ill-posed where the excess crosses zero
    scale = (terms.i1 + np.abs(terms.d)) * G0_DEFAULT ** 2 / (2 * omegas)
    rel = 0.0
    for w_i, w in enumerate(omegas):
        ref = direct_variance(short, w, thetas, excess_only=True)
        got = terms.variance_excess(thetas[:, None])[:, w_i]
        rel = max(rel, float(np.max(np.abs(got - ref)) / scale[w_i]))
    checks.append(Check("factorized vs direct variance (relative to excess scale)", rel, 1e-10))

    sq = squeezing(terms)
    gap = 0.0
    for w_i in range(omegas.size):
        _, v_grid = theta_grid_search(lambda th: terms.variance(th)[w_i])
        gap = max(gap, abs(sq.min_variance[w_i] - v_grid))
    checks.append(Check("closed-form vs grid-search minimum", gap, 1e-18))

    win = spectral_window(record.times, "hann")
    spec = coherent_spectrum(record.j_exp, record.dt, omegas)
    dft = np.array([direct_dft(record.j_exp, record.dt, w, win) for w in omegas])
    checks.append(Check("spectrum vs explicit DFT (relative)", float(np.max(np.abs(spec.intensity - dft) / dft)), 1e-9))
    return checks
