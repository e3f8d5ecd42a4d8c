"""Toeplitz covariance of a stationary noise record and its Cholesky factor."""

from __future__ import annotations

from functools import cached_property

import numpy as np
from scipy.linalg import lapack, solve_triangular

from .noise_model import AutocovarianceSeq

__all__ = ["NotPositiveDefinite", "ToeplitzCovariance", "build", "solve_spd", "whiten"]


class NotPositiveDefinite(np.linalg.LinAlgError):
    """Cholesky factorization broke down at ``leading_minor_index`` (1-based)."""

    def __init__(self, leading_minor_index: int):
        self.leading_minor_index = leading_minor_index
        super().__init__(
            f"covariance is not positive definite: leading minor of order "
            f"{leading_minor_index} is not positive"
        )


class ToeplitzCovariance:
    """N x N covariance ``C[i, j] = r[|i - j|]`` built lazily from lags.

    The dense matrix and its lower Cholesky factor are created on first use
    and then shared by every solve, whitening and log-determinant call.
    No regularization is applied unless ``jitter`` is given explicitly; it is
    added to ``r[0]`` only.
    """

    def __init__(self, r: AutocovarianceSeq | np.ndarray, n: int, jitter: float = 0.0):
        lags = r.r if isinstance(r, AutocovarianceSeq) else np.asarray(r, dtype=float)
        if n < 1:
            raise ValueError("n must be >= 1")
        if lags.size < n:
            raise ValueError(
                f"need lags up to {n - 1} for n={n}, got max lag {lags.size - 1}"
            )
        if jitter < 0:
            raise ValueError("jitter must be >= 0")
        lags = np.array(lags[:n], dtype=float)
        lags[0] += jitter
        lags.setflags(write=False)
        self.lags = lags
        self.n = n

    def __repr__(self):
        return f"ToeplitzCovariance(n={self.n}, r0={self.lags[0]:.6g})"

    def scaled(self, alpha: float) -> "ToeplitzCovariance":
        return ToeplitzCovariance(alpha * self.lags, self.n)

    @cached_property
    def dense(self) -> np.ndarray:
        idx = np.arange(self.n)
        c = self.lags[np.abs(idx[:, None] - idx[None, :])]
        c.setflags(write=False)
        return c

    @cached_property
    def cholesky(self) -> np.ndarray:
        """Lower factor ``L`` with ``C = L L^T``."""
        c, info = lapack.dpotrf(self.dense, lower=1, clean=1)
        if info > 0:
            raise NotPositiveDefinite(int(info))
        if info < 0:
            raise ValueError(f"dpotrf: illegal argument {-info}")
        c.setflags(write=False)
        return c

    @cached_property
    def logdet(self) -> float:
        return float(2.0 * np.sum(np.log(np.diag(self.cholesky))))

    def solve(self, rhs) -> np.ndarray:
        rhs = self._check(rhs)
        low = self.cholesky
        z = solve_triangular(low, rhs, lower=True, check_finite=False)
        return solve_triangular(low, z, lower=True, trans="T", check_finite=False)

    def whiten(self, y) -> np.ndarray:
        return solve_triangular(self.cholesky, self._check(y), lower=True, check_finite=False)

    def unwhiten(self, u) -> np.ndarray:
        return self.cholesky @ self._check(u)

    def _check(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.n:
            raise ValueError(f"expected leading dimension {self.n}, got {v.shape[0]}")
        return v


def build(r: AutocovarianceSeq, n: int, jitter: float = 0.0) -> ToeplitzCovariance:
    return ToeplitzCovariance(r, n, jitter)


def solve_spd(cov: ToeplitzCovariance, rhs) -> tuple[np.ndarray, float]:
    """Solve ``C x = rhs`` (one vector or columns of a matrix).

    Returns the solution and ``log det C`` from the same factorization.
    """
    return cov.solve(rhs), cov.logdet


def whiten(cov: ToeplitzCovariance, y) -> np.ndarray:
    """``L^{-1} y``; unit-covariance output when ``y`` has covariance ``C``."""
    return cov.whiten(y)
