"""Linear models of ambient power-system noise.

White load noise ``w[n]`` with variance ``sigma_w2`` drives a stable rational
filter ``B(z)/A(z)``; the filter output is the coloured ambient noise ``v[n]``.
Coefficients use ``z^-k`` ordering, i.e. ``num[k]`` multiplies ``z^-k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AutocovarianceError",
    "AutocovarianceSeq",
    "Mode",
    "ModalSpec",
    "RationalFilter",
    "autocovariance",
    "build_surrogate",
    "default_modal_spec",
    "frequency_response",
    "impulse_energy_length",
    "psd",
]

DEFAULT_REL_TOL = 1e-8
DEFAULT_MIN_GRID = 4096


class AutocovarianceError(ArithmeticError):
    """Grid-doubling check on the autocovariance did not meet tolerance."""

    def __init__(self, achieved: float, rel_tol: float, grid_size: int):
        self.achieved = achieved
        self.rel_tol = rel_tol
        self.grid_size = grid_size
        super().__init__(
            f"autocovariance truncation error {achieved:.3e} exceeds rel_tol "
            f"{rel_tol:.3e} at grid size {grid_size} (poles too close to the "
            "unit circle; raise the minimum grid size)"
        )


@dataclass(frozen=True)
class RationalFilter:
    """Stable rational filter driven by white noise of variance ``sigma_w2``."""

    num: tuple[float, ...]
    den: tuple[float, ...]
    sigma_w2: float
    fs_hz: float

    def __post_init__(self):
        object.__setattr__(self, "num", tuple(float(b) for b in self.num))
        object.__setattr__(self, "den", tuple(float(a) for a in self.den))
        if not self.num or not any(self.num):
            raise ValueError("numerator must have at least one nonzero coefficient")
        if not self.den or self.den[0] != 1.0:
            raise ValueError("denominator must start with a[0] = 1")
        if not self.sigma_w2 > 0:
            raise ValueError("sigma_w2 must be positive")
        if not self.fs_hz > 0:
            raise ValueError("fs_hz must be positive")
        if not all(math.isfinite(c) for c in self.num + self.den):
            raise ValueError("filter coefficients must be finite")
        radius = self.pole_radius
        if radius >= 1.0:
            raise ValueError(f"filter is unstable: max pole radius {radius:.6g} >= 1")

    @property
    def b(self) -> np.ndarray:
        return np.asarray(self.num)

    @property
    def a(self) -> np.ndarray:
        return np.asarray(self.den)

    @property
    def poles(self) -> np.ndarray:
        # roots of z^Q A(z) are the poles
        if len(self.den) == 1:
            return np.zeros(0, dtype=complex)
        return np.roots(self.den)

    @property
    def pole_radius(self) -> float:
        p = self.poles
        return float(np.max(np.abs(p))) if p.size else 0.0

    @classmethod
    def white(cls, sigma_w2: float = 1.0, fs_hz: float = 1.0) -> "RationalFilter":
        return cls((1.0,), (1.0,), sigma_w2, fs_hz)

    @classmethod
    def ar1(cls, a: float, sigma_w2: float = 1.0, fs_hz: float = 1.0) -> "RationalFilter":
        """``v[n] = a v[n-1] + w[n]``."""
        return cls((1.0,), (1.0, -a), sigma_w2, fs_hz)

    def scaled(self, alpha: float) -> "RationalFilter":
        """Same filter with the input variance multiplied by ``alpha``."""
        return RationalFilter(self.num, self.den, alpha * self.sigma_w2, self.fs_hz)


@dataclass(frozen=True)
class Mode:
    freq_hz: float
    damping_ratio: float
    gain: float = 1.0


@dataclass(frozen=True)
class ModalSpec:
    """Electromechanical mode list for the resonator-bank surrogate."""

    modes: tuple[Mode, ...]

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))

    def validate(self, fs_hz: float) -> list[str]:
        """Return every invariant violation as ``"modes[i].field: message"``."""
        errors = []
        if not self.modes:
            errors.append("modes: at least one mode is required")
        for i, m in enumerate(self.modes):
            if not 0 < m.freq_hz < fs_hz / 2:
                errors.append(
                    f"modes[{i}].freq_hz: {m.freq_hz!r} not in (0, {fs_hz / 2:g})"
                )
            if not 0 < m.damping_ratio < 1:
                errors.append(f"modes[{i}].damping_ratio: {m.damping_ratio!r} not in (0, 1)")
            if not m.gain >= 0:
                errors.append(f"modes[{i}].gain: {m.gain!r} must be >= 0")
        return errors


def default_modal_spec() -> ModalSpec:
    """Inter-area mode at 0.25 Hz plus two weak modes near 0.6 and 0.7 Hz."""
    return ModalSpec((Mode(0.25, 0.05, 1.0), Mode(0.6, 0.08, 0.3), Mode(0.7, 0.08, 0.3)))


def _resonator(mode: Mode, fs_hz: float) -> tuple[np.ndarray, np.ndarray]:
    T = 1.0 / fs_hz
    wn = 2 * np.pi * mode.freq_hz
    radius = np.exp(-mode.damping_ratio * wn * T)
    angle = wn * np.sqrt(1 - mode.damping_ratio**2) * T
    den = np.array([1.0, -2 * radius * np.cos(angle), radius**2])
    num = np.array([mode.gain * (1 - radius)])
    return num, den


def build_surrogate(spec: ModalSpec, sigma_w2: float, fs_hz: float) -> RationalFilter:
    """Parallel bank of second-order digital resonators, one per mode.

    Mode ``m`` places conjugate poles at radius ``exp(-zeta*2*pi*f*T)`` and
    angle ``2*pi*f*sqrt(1 - zeta^2)*T``; its numerator is ``gain*(1 - radius)``.
    The sections are summed over their common denominator.
    """
    errors = spec.validate(fs_hz)
    if errors:
        raise ValueError("; ".join(errors))
    sections = [_resonator(m, fs_hz) for m in spec.modes]
    den = np.array([1.0])
    for _, a in sections:
        den = np.polymul(den, a)
    num = np.zeros(len(den) - 1)
    for i, (b, _) in enumerate(sections):
        others = np.array([1.0])
        for j, (_, a) in enumerate(sections):
            if j != i:
                others = np.polymul(others, a)
        term = np.polymul(b, others)
        num[: len(term)] += term
    filt = RationalFilter(tuple(np.trim_zeros(num, "b")), tuple(den), sigma_w2, fs_hz)
    assert filt.pole_radius < 1.0
    return filt


def _poly_on_circle(coeffs: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Evaluate ``sum_k c[k] exp(-j 2 pi f k)``."""
    k = np.arange(len(coeffs))
    return np.exp(-2j * np.pi * np.outer(f, k)) @ coeffs


def frequency_response(filt: RationalFilter, f0) -> tuple[np.ndarray, np.ndarray]:
    """Magnitude and phase (radians) of ``B/A`` at normalized frequency ``f0``.

    A sinusoid ``A_w cos(2 pi f0 n + phi_w)`` at the filter input appears at the
    output, in steady state, with amplitude ``A_w*magnitude`` and phase
    ``phi_w + phase``.
    """
    f = np.atleast_1d(np.asarray(f0, dtype=float))
    if np.any((f < 0) | (f > 0.5)):
        raise ValueError("normalized frequency must lie in [0, 0.5]")
    h = _poly_on_circle(filt.b, f) / _poly_on_circle(filt.a, f)
    mag, phase = np.abs(h), np.angle(h)
    if np.ndim(f0) == 0:
        return mag[0], phase[0]
    return mag, phase


def psd(filt: RationalFilter, f_grid) -> np.ndarray:
    """Two-sided PSD ``sigma_w2 |B|^2 / |A|^2`` at normalized frequencies in [0, 0.5]."""
    f = np.atleast_1d(np.asarray(f_grid, dtype=float))
    if np.any((f < 0) | (f > 0.5)):
        raise ValueError("normalized frequency grid must lie in [0, 0.5]")
    B = _poly_on_circle(filt.b, f)
    A = _poly_on_circle(filt.a, f)
    s = filt.sigma_w2 * np.abs(B) ** 2 / np.abs(A) ** 2
    return s[0] if np.ndim(f_grid) == 0 else s


@dataclass(frozen=True)
class AutocovarianceSeq:
    """Lags ``r[0..L]`` of a stationary autocovariance; negative lags by symmetry."""

    r: np.ndarray = field(repr=False)
    error_estimate: float = 0.0
    grid_size: int = 0

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if r.ndim != 1 or r.size < 1:
            raise ValueError("autocovariance must be a non-empty 1-D sequence")
        if not r[0] > 0:
            raise ValueError("r[0] must be positive")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @property
    def max_lag(self) -> int:
        return self.r.size - 1

    def __len__(self):
        return self.r.size

    def scaled(self, alpha: float) -> "AutocovarianceSeq":
        return AutocovarianceSeq(alpha * self.r, self.error_estimate, self.grid_size)


def _circle_autocov(filt: RationalFilter, m: int, max_lag: int) -> np.ndarray:
    # FFT of the zero-padded coefficients samples B, A at f = k/m on the full circle
    B = np.fft.fft(filt.b, m)
    A = np.fft.fft(filt.a, m)
    s = filt.sigma_w2 * np.abs(B) ** 2 / np.abs(A) ** 2
    return np.fft.ifft(s).real[: max_lag + 1]


def autocovariance(
    filt: RationalFilter,
    max_lag: int,
    rel_tol: float = DEFAULT_REL_TOL,
    min_grid: int = DEFAULT_MIN_GRID,
) -> AutocovarianceSeq:
    """Autocovariance ``r[0..max_lag]`` of the filter output by inverse DFT of the PSD.

    The PSD is sampled on ``M`` points of the unit circle, ``M`` the smallest
    power of two ``>= max(8*max_lag, min_grid)``.  Aliasing is estimated by
    recomputing on ``2M`` points; the finer result is returned when
    ``max_k |r_M[k] - r_2M[k]| / r[0] <= rel_tol``.

    Raises
    ------
    AutocovarianceError
        If the doubling check fails.
    """
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    m = 1 << max(int(math.ceil(math.log2(max(8 * max_lag, min_grid)))), 0)
    coarse = _circle_autocov(filt, m, max_lag)
    fine = _circle_autocov(filt, 2 * m, max_lag)
    err = float(np.max(np.abs(coarse - fine)) / fine[0])
    if not err <= rel_tol:
        raise AutocovarianceError(err, rel_tol, m)
    return AutocovarianceSeq(fine, err, 2 * m)


def impulse_energy_length(filt: RationalFilter, fraction: float = 0.99) -> int:
    """Smallest ``K`` such that ``sum_{k<K} h[k]^2 >= fraction * sum h^2``."""
    from scipy.signal import lfilter

    total = autocovariance(filt, 1).r[0] / filt.sigma_w2
    length = 256
    while True:
        impulse = np.zeros(length)
        impulse[0] = 1.0
        h = lfilter(filt.b, filt.a, impulse)
        energy = np.cumsum(h**2)
        hit = np.nonzero(energy >= fraction * total)[0]
        if hit.size:
            return int(hit[0]) + 1
        length *= 2
