"""Fisher information and Cramer-Rao bounds for a sinusoid in Gaussian noise."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .covariance import ToeplitzCovariance
from .fo_signal import FoParams, jacobian

__all__ = [
    "CrlbBounds",
    "FisherMatrix",
    "IllConditionedWarning",
    "SingularFisher",
    "bounds_for",
    "crlb",
    "fisher",
    "white_noise_asymptotic",
]

ILL_CONDITIONED = 1e12
_DET_FLOOR = 1e-300


class SingularFisher(np.linalg.LinAlgError):
    """The Fisher matrix is singular or not positive definite."""


class IllConditionedWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class FisherMatrix:
    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError("Fisher matrix must be 3 x 3")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)


@dataclass(frozen=True)
class CrlbBounds:
    var_amp: float
    var_f0: float
    var_phi: float
    fs_hz: float = 1.0
    condition_estimate: float = math.nan

    @property
    def variances(self) -> np.ndarray:
        return np.array([self.var_amp, self.var_f0, self.var_phi])

    @property
    def std_amp(self) -> float:
        return math.sqrt(self.var_amp)

    @property
    def std_f0(self) -> float:
        return math.sqrt(self.var_f0)

    @property
    def std_phi(self) -> float:
        return math.sqrt(self.var_phi)

    @property
    def std_freq_hz(self) -> float:
        return self.fs_hz * self.std_f0

    @property
    def ill_conditioned(self) -> bool:
        return self.condition_estimate > ILL_CONDITIONED


def fisher(p: FoParams, cov: ToeplitzCovariance) -> FisherMatrix:
    """``J^T C^{-1} J`` with one factorization shared by the three columns."""
    jac = jacobian(p, cov.n).matrix
    z = cov.solve(jac)
    m = jac.T @ z
    return FisherMatrix(0.5 * (m + m.T))


def _adjugate(m: np.ndarray) -> tuple[np.ndarray, float]:
    a, b, c = m[0]
    d, e, f = m[1]
    g, h, i = m[2]
    cof = np.array(
        [
            [e * i - f * h, -(d * i - f * g), d * h - e * g],
            [-(b * i - c * h), a * i - c * g, -(a * h - b * g)],
            [b * f - c * e, -(a * f - c * d), a * e - b * d],
        ]
    )
    det = a * cof[0, 0] + b * cof[0, 1] + c * cof[0, 2]
    return cof.T, det


def crlb(fim: FisherMatrix, fs_hz: float = 1.0) -> CrlbBounds:
    """Variance bounds: the diagonal of the inverse Fisher matrix.

    The 3 x 3 inverse is taken by adjugate and cross-checked against a
    pivoted factorized solve; the factorized result is used when the two
    disagree beyond roundoff.  A condition number above 1e12 triggers
    :class:`IllConditionedWarning`; at ``1/eps`` the matrix is treated as
    singular.
    """
    m = fim.m
    # equilibrate so the determinant test is scale-free; exact in binary
    scale = 2.0 ** -np.round(np.log2(np.sqrt(np.abs(np.diag(m)) + _DET_FLOOR)))
    ms = m * np.outer(scale, scale)
    adj, det = _adjugate(ms)
    if not np.isfinite(det) or det <= _DET_FLOOR:
        raise SingularFisher(f"Fisher matrix determinant {det:.3e} is not positive")
    inv_s = adj / det
    try:
        np.linalg.cholesky(ms)
    except np.linalg.LinAlgError as exc:
        raise SingularFisher("Fisher matrix is not positive definite") from exc
    eig = np.linalg.eigvalsh(m)
    cond = float(eig[-1] / eig[0]) if eig[0] > 0 else math.inf
    if cond * np.finfo(float).eps >= 1.0:
        raise SingularFisher(f"Fisher matrix is numerically singular (condition {cond:.3e})")
    check = np.linalg.solve(ms, np.eye(3))
    if not np.allclose(inv_s, check, rtol=1e-8, atol=0.0):
        inv_s = check
    diag = np.diag(inv_s) * scale**2
    if np.any(diag <= 0) or not np.all(np.isfinite(diag)):
        raise SingularFisher("inverse Fisher matrix has non-positive diagonal")
    if cond > ILL_CONDITIONED:
        warnings.warn(
            f"Fisher matrix condition estimate {cond:.3e} exceeds {ILL_CONDITIONED:.0e}",
            IllConditionedWarning,
            stacklevel=2,
        )
    return CrlbBounds(float(diag[0]), float(diag[1]), float(diag[2]), fs_hz, cond)


def bounds_for(p: FoParams, cov: ToeplitzCovariance, fs_hz: float = 1.0) -> CrlbBounds:
    return crlb(fisher(p, cov), fs_hz)


def white_noise_asymptotic(
    amp: float, sigma2: float, n_samples: int, fs_hz: float = 1.0
) -> CrlbBounds:
    """Large-N bounds for a real sinusoid in white noise of variance ``sigma2``.

    With per-sample SNR ``eta = amp^2 / (2 sigma2)``::

        var_amp = 2 sigma2 / N
        var_f0  = 12 / ((2 pi)^2 eta N (N^2 - 1))
        var_phi = 2 (2N - 1) / (eta N (N + 1))

    Valid when the double-frequency cross terms are negligible, i.e. ``f0``
    not within a few bins of 0 or 0.5; ``n_samples`` must be at least 64.
    """
    if n_samples < 64:
        raise ValueError("asymptotic formulas need n_samples >= 64")
    N = n_samples
    var_amp = 2 * sigma2 / N
    eta = amp**2 / (2 * sigma2)
    var_f0 = 12 / ((2 * np.pi) ** 2 * eta * N * (N**2 - 1))
    var_phi = 2 * (2 * N - 1) / (eta * N * (N + 1))
    n = np.arange(N)
    # the matching Fisher matrix, used only for the condition estimate
    fim = np.array(
        [
            [N / 2, 0, 0],
            [0, 2 * np.pi**2 * amp**2 * np.sum(n**2.0), np.pi * amp**2 * np.sum(n)],
            [0, np.pi * amp**2 * np.sum(n), N * amp**2 / 2],
        ]
    ) / sigma2
    eig = np.linalg.eigvalsh(fim)
    return CrlbBounds(var_amp, var_f0, var_phi, fs_hz, float(eig[-1] / eig[0]))
