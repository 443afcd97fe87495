"""Harmonic spectrum and frequency-resolved quadrature squeezing.

The quadrature variance of mode ``omega`` is written as

    var(theta) = 1/4 + (g0^2 N / 2 omega) (I1 - Re[D exp(-2 i theta)])

with ``I1`` the full double integral of the current fluctuation correlator
and ``D`` collecting the two phase-sensitive integrals. All integrals use
the trapezoidal rule on the propagation grid, upper limit ``t_final``.

Inserting the channel decomposition of the correlator makes every term a
sum over channels of single or cumulative time integrals, so the cost is
linear in the number of time steps. ``QuadratureAccumulator`` evaluates
those sums chunk by chunk with matrix products, which lets it consume
currents while they are being produced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .correlations import CurrentRecord

G0_DEFAULT = 4e-8
WINDOWS = ("hann", "none", "ramp")


class SqueezingError(RuntimeError):
    pass


@dataclass
class SpectrumResult:
    omega: np.ndarray
    harmonic_order: np.ndarray
    intensity: np.ndarray


@dataclass
class QuadratureTerms:
    """Per-frequency integral terms of the quadrature variance."""

    omega: np.ndarray
    i1: np.ndarray
    d: np.ndarray
    t_final: float

    def variance_excess(self, theta, g0=G0_DEFAULT, n_emitters=1):
        """``var(theta) - 1/4``; exact to double precision even when tiny."""
        pref = g0 ** 2 * n_emitters / (2 * self.omega)
        return pref * (self.i1 - np.real(self.d * np.exp(-2j * np.asarray(theta))))

    def variance(self, theta, g0=G0_DEFAULT, n_emitters=1):
        return 0.25 + self.variance_excess(theta, g0, n_emitters)


@dataclass
class SqueezingResult:
    omega: np.ndarray
    eta_db: np.ndarray
    theta_star: np.ndarray
    min_variance: np.ndarray
    min_variance_excess: np.ndarray
    edge_excluded: bool = False


# ---------------------------------------------------------------- spectrum


def spectral_window(times: np.ndarray, window: str = "hann", ramp: float | None = None) -> np.ndarray:
    """Window over the record. ``ramp`` is the taper length for ``"ramp"``."""
    if window == "none":
        return np.ones_like(times)
    span = times[-1] - times[0]
    if window == "hann":
        return np.sin(np.pi * (times - times[0]) / span) ** 2
    if window == "ramp":
        if ramp is None or ramp <= 0:
            raise ValueError("ramp window needs a positive taper length")
        s = times - times[0]
        w = np.ones_like(times)
        up = s < ramp
        down = s > span - ramp
        w[up] = np.sin(0.5 * np.pi * s[up] / ramp) ** 2
        w[down] = np.sin(0.5 * np.pi * (span - s[down]) / ramp) ** 2
        return w
    raise ValueError(f"unknown window {window!r}; choose from {WINDOWS}")


def coherent_spectrum(
    j_exp: np.ndarray,
    dt: float,
    omega: np.ndarray,
    window: str = "hann",
    omega_l: float | None = None,
    ramp: float | None = None,
    chunk: int = 64,
) -> SpectrumResult:
    """``|sum_k w_k exp(-i omega t_k) <J>(t_k) dt|^2`` on an arbitrary grid.

    The N**2 prefactor for N identical emitters is left out; multiply
    externally.
    """
    j_exp = np.asarray(j_exp, dtype=float)
    if j_exp.size == 0:
        raise ValueError("empty current series")
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    times = np.arange(j_exp.size) * dt
    signal = spectral_window(times, window, ramp) * j_exp * dt
    amp = np.empty(omega.size, dtype=complex)
    for s in range(0, omega.size, chunk):
        w = omega[s:s + chunk]
        amp[s:s + chunk] = np.exp(-1j * np.outer(w, times)) @ signal
    order = omega / omega_l if omega_l else np.full_like(omega, np.nan)
    return SpectrumResult(omega=omega, harmonic_order=order, intensity=np.abs(amp) ** 2)


# ---------------------------------------------------------------- squeezing


class QuadratureAccumulator:
    """Streaming evaluation of the quadrature-variance integrals.

    Channels are split into disjoint classes (e.g. bulk-only and
    edge-touching); ``I1`` and ``D`` are kept per class so that any union
    of classes can be assembled at the end without a second pass.

    Args:
        omega: mode frequencies, all positive.
        dt: grid step.
        n_steps: index of the last grid point; sets the trapezoid end weight
            and the upper integration limit ``t_final = n_steps * dt``.
        channel_class: integer class label per channel.
    """

    def __init__(self, omega, dt, n_steps, channel_class):
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        if np.any(omega <= 0):
            raise ValueError("quadrature terms need omega > 0")
        self.omega = omega
        self.dt = float(dt)
        self.n_steps = int(n_steps)
        labels = np.asarray(channel_class)
        self.classes = [int(c) for c in np.unique(labels)]
        self._index = {c: np.flatnonzero(labels == c) for c in self.classes}
        nw = omega.size
        self._a = np.zeros((nw, labels.size), dtype=complex)
        self._b = np.zeros((nw, labels.size), dtype=complex)
        self._s = {c: np.zeros((nw, idx.size), dtype=complex) for c, idx in self._index.items()}
        self._r = {c: np.zeros((nw, idx.size), dtype=complex) for c, idx in self._index.items()}
        self._nested = {c: np.zeros(nw, dtype=complex) for c in self.classes}
        self._next = 0

    @property
    def t_final(self) -> float:
        return self.n_steps * self.dt

    def update(self, k0: int, block: np.ndarray):
        """Consume rows ``k0 .. k0 + len(block) - 1`` of the channel matrix."""
        if k0 != self._next:
            raise ValueError(f"expected block starting at {self._next}, got {k0}")
        n = block.shape[0]
        if k0 + n - 1 > self.n_steps:
            raise ValueError("block extends past the final grid point")
        self._next += n
        k = np.arange(k0, k0 + n)
        t = k * self.dt
        w = np.full(n, self.dt)
        w[k == 0] *= 0.5
        w[k == self.n_steps] *= 0.5
        e_plus = np.exp(1j * np.outer(self.omega, t))
        e_minus = e_plus.conj()
        # inner cumulative weights; the diagonal half-weight cancels between
        # the two commutator orderings, only the t=0 half-weight survives
        beta = e_plus.copy()
        beta[:, k == 0] *= 0.5
        alpha = e_plus * (w * self.dt)

        self._a += (e_minus * w) @ block
        self._b += (e_plus * w) @ block
        lower = np.tril(np.ones((n, n), dtype=bool))
        for c, idx in self._index.items():
            jb = block[:, idx]
            jb_conj = jb.conj()
            cross = self._s[c] @ jb_conj.T - self._r[c] @ jb.T
            gram = jb_conj @ jb.T
            kern = np.where(lower, 2j * gram.imag, 0.0)
            intra = beta @ kern.T
            self._nested[c] += np.sum(alpha * (cross + intra), axis=1)
            self._s[c] += beta @ jb
            self._r[c] += beta @ jb_conj

    def terms(self, classes=None) -> QuadratureTerms:
        if self._next != self.n_steps + 1:
            raise ValueError(f"accumulator saw {self._next} of {self.n_steps + 1} grid points")
        classes = self.classes if classes is None else [c for c in classes if c in self._index]
        i1 = np.zeros(self.omega.size)
        ba = np.zeros(self.omega.size, dtype=complex)
        nested = np.zeros(self.omega.size, dtype=complex)
        for c in classes:
            idx = self._index[c]
            i1 += np.sum(np.abs(self._a[:, idx]) ** 2, axis=1)
            ba += np.sum(self._b[:, idx] * self._a[:, idx].conj(), axis=1)
            nested += self._nested[c]
        d = np.exp(-2j * self.omega * self.t_final) * (ba - nested)
        return QuadratureTerms(omega=self.omega.copy(), i1=i1, d=d, t_final=self.t_final)


BULK, EDGE = 0, 1


def channel_classes(record: CurrentRecord, edge_indices=None) -> np.ndarray:
    """Class label per channel: ``EDGE`` when a or b is an edge state."""
    if edge_indices is not None:
        record = CurrentRecord(record.times, record.dt, record.j_exp, record.occupied,
                               record.unoccupied, tuple(edge_indices))
    return np.where(record.edge_channels.reshape(-1), EDGE, BULK)


def quadrature_terms(record: CurrentRecord, omega, exclude_edges: bool = False, edge_indices=None, chunk: int = 256) -> QuadratureTerms:
    """Quadrature-variance terms from a record that retained its transition currents."""
    labels = channel_classes(record, edge_indices)
    acc = QuadratureAccumulator(omega, record.dt, record.n_times - 1, labels)
    jm = record.channel_matrix()
    for k0 in range(0, jm.shape[0], chunk):
        acc.update(k0, jm[k0:k0 + chunk])
    return acc.terms([BULK] if exclude_edges else None)


def squeezing(terms: QuadratureTerms, g0: float = G0_DEFAULT, n_emitters: int = 1, omega=None, edge_excluded: bool = False) -> SqueezingResult:
    """Closed-form minimum over theta and the squeezing in dB.

    ``-Re[D exp(-2 i theta)]`` is smallest at ``theta = arg(D) / 2``, where
    it equals ``-|D|``. ``theta_star`` is reported in (0, pi].
    """
    if g0 < 0:
        raise ValueError("g0 must be non-negative")
    if n_emitters < 1:
        raise ValueError("n_emitters must be at least 1")
    omega = terms.omega if omega is None else np.atleast_1d(np.asarray(omega, dtype=float))
    pref = g0 ** 2 * n_emitters / (2 * omega)
    excess = pref * (terms.i1 - np.abs(terms.d))
    min_var = 0.25 + excess
    if np.any(min_var <= 0):
        bad = omega[min_var <= 0]
        raise SqueezingError(
            f"minimum quadrature variance is non-positive at omega={bad}; "
            "the perturbative expansion breaks down, check g0 and n_emitters"
        )
    theta = 0.5 * np.angle(terms.d)
    theta = np.where(theta <= 0, theta + np.pi, theta)
    # -10 log10(4 var) with var = 1/4 + excess, kept accurate for tiny excess
    eta = -10.0 / math.log(10.0) * np.log1p(4 * excess)
    return SqueezingResult(
        omega=omega, eta_db=eta, theta_star=theta, min_variance=min_var,
        min_variance_excess=excess, edge_excluded=edge_excluded,
    )


@dataclass
class EdgeContribution:
    with_edges: SqueezingResult
    without_edges: SqueezingResult

    @property
    def delta_eta(self) -> np.ndarray:
        return self.with_edges.eta_db - self.without_edges.eta_db


def edge_contribution_report(source, freq_grid=None, g0: float = G0_DEFAULT, n_emitters: int = 1) -> EdgeContribution:
    """Squeezing with and without edge-touching channels.

    ``source`` is either a record with retained transition currents (then
    ``freq_grid`` is required) or a finished ``QuadratureAccumulator``.
    """
    if isinstance(source, QuadratureAccumulator):
        acc = source
    else:
        if freq_grid is None:
            raise ValueError("freq_grid is required when passing a record")
        acc = QuadratureAccumulator(freq_grid, source.dt, source.n_times - 1, channel_classes(source))
        jm = source.channel_matrix()
        for k0 in range(0, jm.shape[0], 256):
            acc.update(k0, jm[k0:k0 + 256])
    full = squeezing(acc.terms(), g0, n_emitters)
    bulk = squeezing(acc.terms([BULK]), g0, n_emitters, edge_excluded=True)
    return EdgeContribution(with_edges=full, without_edges=bulk)
