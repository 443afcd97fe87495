"""Classical laser pulse, given through its vector potential."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ENVELOPES = ("sin2-symmetric", "sin2-ramp-only")


@dataclass(frozen=True)
class DriveSpec:
    """Vector potential ``A(t) = (f0 / omega_l) f(t) cos(omega_l t)``.

    ``f`` rises as sin^2 over ``n_on`` cycles and stays flat for ``n_pl``
    cycles. With ``envelope="sin2-symmetric"`` it falls back to zero over
    another ``n_on`` cycles; ``"sin2-ramp-only"`` stops at the plateau end.
    """

    f0: float = 0.0025
    omega_l: float = 0.0075
    n_on: float = 5
    n_pl: float = 10
    dt: float = 1.0
    envelope: str = "sin2-symmetric"

    def __post_init__(self):
        if self.omega_l <= 0:
            raise ValueError(f"omega_l must be positive, got {self.omega_l}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_on < 0 or self.n_pl < 0 or self.n_on + self.n_pl <= 0:
            raise ValueError("pulse needs a non-negative ramp and plateau with positive total length")
        if self.envelope not in ENVELOPES:
            raise ValueError(f"unknown envelope {self.envelope!r}; choose from {ENVELOPES}")

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega_l

    @property
    def duration(self) -> float:
        cycles = self.n_on + self.n_pl
        if self.envelope == "sin2-symmetric":
            cycles += self.n_on
        return cycles * self.period

    @property
    def n_steps(self) -> int:
        """Steps of size ``dt`` covering the pulse (last point at or past its end)."""
        return int(math.ceil(self.duration / self.dt - 1e-9))

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def envelope_at(self, t):
        t = np.asarray(t, dtype=float)
        t_on = self.n_on * self.period
        t_pl_end = t_on + self.n_pl * self.period
        f = np.zeros_like(t)
        if t_on > 0:
            up = (t >= 0) & (t < t_on)
            f[up] = np.sin(0.5 * np.pi * t[up] / t_on) ** 2
        flat = (t >= t_on) & (t <= t_pl_end)
        f[flat] = 1.0
        if self.envelope == "sin2-symmetric" and t_on > 0:
            down = (t > t_pl_end) & (t < self.duration)
            f[down] = np.sin(0.5 * np.pi * (self.duration - t[down]) / t_on) ** 2
        return f if f.ndim else float(f)

    def vector_potential(self, t):
        f = self.envelope_at(t)
        return self.f0 / self.omega_l * f * np.cos(self.omega_l * np.asarray(t, dtype=float))


def vector_potential(drive: DriveSpec, t):
    return drive.vector_potential(t)
