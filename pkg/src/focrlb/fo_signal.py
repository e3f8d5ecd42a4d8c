"""Sinusoidal forced-oscillation model and its parameter Jacobian.

Parameters are always ordered ``theta = [amp, f0, phi]`` with ``f0`` in
cycles per sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["FoJacobian", "FoParams", "jacobian", "waveform", "wrap_phase"]


def wrap_phase(phi):
    """Wrap radians to [-pi, pi)."""
    return (np.asarray(phi) + np.pi) % (2 * np.pi) - np.pi


@dataclass(frozen=True)
class FoParams:
    amp: float
    f0: float
    phi: float

    def __post_init__(self):
        if not (math.isfinite(self.amp) and self.amp > 0):
            raise ValueError(f"amp must be positive, got {self.amp!r}")
        if not 0 < self.f0 < 0.5:
            raise ValueError(f"f0 must lie in (0, 0.5) cycles/sample, got {self.f0!r}")
        if not math.isfinite(self.phi):
            raise ValueError("phi must be finite")
        object.__setattr__(self, "phi", float(wrap_phase(self.phi)))

    @classmethod
    def from_hz(cls, amp: float, freq_hz: float, phi: float, fs_hz: float) -> "FoParams":
        return cls(amp, freq_hz / fs_hz, phi)

    def freq_hz(self, fs_hz: float) -> float:
        return self.f0 * fs_hz

    def as_array(self) -> np.ndarray:
        return np.array([self.amp, self.f0, self.phi])


@dataclass(frozen=True)
class FoJacobian:
    d_amp: np.ndarray
    d_freq: np.ndarray
    d_phase: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        """N x 3 matrix with columns ordered [amp, f0, phi]."""
        return np.column_stack([self.d_amp, self.d_freq, self.d_phase])


def _arg(p: FoParams, n_samples: int) -> tuple[np.ndarray, np.ndarray]:
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    n = np.arange(n_samples, dtype=float)
    return n, 2 * np.pi * p.f0 * n + p.phi


def waveform(p: FoParams, n_samples: int) -> np.ndarray:
    """``q[n] = amp * cos(2 pi f0 n + phi)`` for ``n = 0..N-1``."""
    _, arg = _arg(p, n_samples)
    return p.amp * np.cos(arg)


def jacobian(p: FoParams, n_samples: int) -> FoJacobian:
    n, arg = _arg(p, n_samples)
    s = np.sin(arg)
    return FoJacobian(
        d_amp=np.cos(arg),
        d_freq=-p.amp * 2 * np.pi * n * s,
        d_phase=-p.amp * s,
    )
