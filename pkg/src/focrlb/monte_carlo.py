"""Monte Carlo check of the bounds with a whitened least-squares estimator.

Random streams
--------------
Trial ``k`` of a batch seeded with ``seed`` draws from
``numpy.random.Generator(PCG64(SeedSequence(seed, spawn_key=(k,))))``.
A trial is therefore fully determined by ``(seed, k)`` and results do not
depend on scheduling or the number of workers.  Streams are reproducible for
a fixed numpy version.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.signal import lfilter

from .covariance import ToeplitzCovariance
from .crlb_engine import CrlbBounds, bounds_for
from .fo_signal import FoParams, waveform, wrap_phase
from .noise_model import RationalFilter, autocovariance, impulse_energy_length

__all__ = [
    "DegenerateFit",
    "FoEstimator",
    "McConfig",
    "McResult",
    "ParamStats",
    "estimate_fo",
    "generate_ambient",
    "min_burn_in",
    "run_mc",
    "trial_rng",
]

_GOLDEN = (math.sqrt(5) - 1) / 2


class DegenerateFit(ArithmeticError):
    """The concentrated objective is flat, so no frequency can be picked."""


def trial_rng(seed: int, run_index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(run_index,)))
    )


def min_burn_in(filt: RationalFilter) -> int:
    """Ten times the 99%-energy length of the impulse response."""
    return 10 * impulse_energy_length(filt, 0.99)


def generate_ambient(
    filt: RationalFilter, n_samples: int, burn_in: int, stream: np.random.Generator
) -> np.ndarray:
    """Filter ``burn_in + n_samples`` white Gaussian draws and keep the tail."""
    w = math.sqrt(filt.sigma_w2) * stream.standard_normal(burn_in + n_samples)
    if len(filt.den) == 1 and len(filt.num) == 1 and filt.num[0] == 1.0:
        v = w
    else:
        v = lfilter(filt.b, filt.a, w)
    return v[burn_in:]


class FoEstimator:
    """Whitened nonlinear least squares for one sinusoid in known Gaussian noise.

    The whitened regressors on the coarse frequency grid depend only on the
    covariance, so they are computed once and reused for every record.
    """

    def __init__(
        self,
        cov: ToeplitzCovariance,
        freq_grid_oversample: int = 8,
        refine_tol: float = 1e-10,
    ):
        if freq_grid_oversample < 1:
            raise ValueError("freq_grid_oversample must be >= 1")
        self.cov = cov
        self.n = cov.n
        self.oversample = int(freq_grid_oversample)
        self.refine_tol = refine_tol
        size = self.oversample * self.n
        # interior points of (0, 0.5)
        self.grid = 0.5 * np.arange(1, size) / size
        self.step = 0.5 / size

    @cached_property
    def _coarse(self):
        n = np.arange(self.n)
        arg = 2 * np.pi * np.outer(n, self.grid)
        cw = self.cov.whiten(np.cos(arg))
        sw = self.cov.whiten(np.sin(arg))
        gram = np.stack(
            [np.sum(cw * cw, 0), np.sum(cw * sw, 0), np.sum(sw * sw, 0)], axis=-1
        )
        return cw, sw, gram

    def _regressors(self, f: float) -> np.ndarray:
        arg = 2 * np.pi * f * np.arange(self.n)
        return self.cov.whiten(np.column_stack([np.cos(arg), np.sin(arg)]))

    @staticmethod
    def _projection(a, b, gram) -> np.ndarray:
        gcc, gcs, gss = gram[..., 0], gram[..., 1], gram[..., 2]
        det = gcc * gss - gcs**2
        with np.errstate(divide="ignore", invalid="ignore"):
            proj = (gss * a**2 - 2 * gcs * a * b + gcc * b**2) / det
        return np.where(det > 0, proj, -np.inf)

    def _fit(self, f: float, yw: np.ndarray) -> tuple[float, np.ndarray]:
        x = self._regressors(f)
        coef, *_ = np.linalg.lstsq(x, yw, rcond=None)
        resid = yw - x @ coef
        return float(resid @ resid), coef

    def residual(self, f: float, y) -> float:
        """Whitened residual energy of the best sinusoid at frequency ``f``."""
        return self._fit(f, self.cov.whiten(y))[0]

    def coarse(self, y) -> float:
        """Frequency maximizing the whitened projection on the coarse grid."""
        yw = self.cov.whiten(y)
        cw, sw, gram = self._coarse
        proj = self._projection(yw @ cw, yw @ sw, gram)
        k = int(np.argmax(proj))
        if not proj[k] > 1e-300 * max(float(yw @ yw), 1e-300) or not yw.any():
            raise DegenerateFit("whitened projection is flat; record carries no sinusoid")
        return float(self.grid[k])

    def estimate(self, y) -> FoParams:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.n,):
            raise ValueError(f"expected a record of length {self.n}")
        f_grid = self.coarse(y)
        yw = self.cov.whiten(y)
        lo = max(f_grid - self.step, 0.5 * self.step)
        hi = min(f_grid + self.step, 0.5 - 0.5 * self.step)
        f_ref = _golden_min(lambda f: self._fit(f, yw)[0], lo, hi, self.refine_tol)
        r_grid, c_grid = self._fit(f_grid, yw)
        r_ref, c_ref = self._fit(f_ref, yw)
        f, (alpha, beta) = (f_ref, c_ref) if r_ref <= r_grid else (f_grid, c_grid)
        amp = math.hypot(alpha, beta)
        if amp == 0:
            raise DegenerateFit("fitted amplitude is zero")
        return FoParams(amp, f, math.atan2(-beta, alpha))


def _golden_min(fun, lo: float, hi: float, tol: float) -> float:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fun(d)
    return c if fc <= fd else d


def estimate_fo(
    y, cov: ToeplitzCovariance, freq_grid_oversample: int = 8, refine_tol: float = 1e-10
) -> FoParams:
    """Estimate amplitude, frequency and phase of one sinusoid in ``y``.

    Coarse search over ``freq_grid_oversample * N`` frequencies, golden-section
    refinement to ``refine_tol`` cycles/sample, then weighted linear least
    squares for ``q = alpha cos + beta sin``.
    """
    return FoEstimator(cov, freq_grid_oversample, refine_tol).estimate(y)


@dataclass(frozen=True)
class McConfig:
    runs: int
    seed: int
    n_samples: int
    filter: RationalFilter
    truth: FoParams
    burn_in: int | None = None
    freq_grid_oversample: int = 8
    refine_tol: float = 1e-10
    rel_tol: float = 1e-8
    min_grid: int = 4096
    jitter: float = 0.0

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.n_samples < 8:
            raise ValueError("n_samples must be >= 8")
        required = min_burn_in(self.filter)
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", required)
        elif self.burn_in < required:
            raise ValueError(
                f"burn_in {self.burn_in} is shorter than 10x the impulse-response "
                f"99% energy length ({required})"
            )


@dataclass(frozen=True)
class ParamStats:
    name: str
    truth: float
    sample_mean: float
    sample_var: float
    crlb_var: float

    @property
    def bias(self) -> float:
        return self.sample_mean - self.truth

    @property
    def ratio(self) -> float:
        return self.sample_var / self.crlb_var


@dataclass(frozen=True)
class McResult:
    amp: ParamStats
    f0: ParamStats
    phi: ParamStats
    runs: int
    failed_runs: int
    bounds: CrlbBounds
    estimates: np.ndarray = field(repr=False, compare=False)

    @property
    def params(self) -> tuple[ParamStats, ParamStats, ParamStats]:
        return self.amp, self.f0, self.phi


def _trial(cfg: McConfig, est: FoEstimator, q: np.ndarray, k: int) -> np.ndarray:
    v = generate_ambient(cfg.filter, cfg.n_samples, cfg.burn_in, trial_rng(cfg.seed, k))
    try:
        p = est.estimate(q + v)
    except (DegenerateFit, ValueError, np.linalg.LinAlgError):
        return np.full(3, np.nan)
    return p.as_array()


def run_mc(config: McConfig, jobs: int = 1) -> McResult:
    """Run independent trials and compare sample variances with the bounds.

    Failed trials are counted, not raised.  Phase errors are wrapped to
    (-pi, pi] before the statistics are taken.
    """
    cfg = config
    r = autocovariance(cfg.filter, max(cfg.n_samples - 1, 1), cfg.rel_tol, cfg.min_grid)
    cov = ToeplitzCovariance(r, cfg.n_samples, cfg.jitter)
    bounds = bounds_for(cfg.truth, cov, cfg.filter.fs_hz)
    est = FoEstimator(cov, cfg.freq_grid_oversample, cfg.refine_tol)
    est._coarse  # build shared state before any worker threads start
    q = waveform(cfg.truth, cfg.n_samples)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda k: _trial(cfg, est, q, k), range(cfg.runs)))
    else:
        rows = [_trial(cfg, est, q, k) for k in range(cfg.runs)]
    estimates = np.array(rows)
    ok = np.all(np.isfinite(estimates), axis=1)
    good = estimates[ok]
    failed = int(cfg.runs - ok.sum())

    truth = cfg.truth.as_array()
    err = good - truth
    # map [-pi, pi) onto (-pi, pi]
    err[:, 2] = -wrap_phase(-err[:, 2])
    ddof = 1 if len(good) > 1 else 0
    stats = []
    for j, name in enumerate(("amp", "f0", "phi")):
        if len(good):
            mean = float(truth[j] + np.mean(err[:, j]))
            var = float(np.var(err[:, j], ddof=ddof))
        else:
            mean = var = math.nan
        stats.append(ParamStats(name, float(truth[j]), mean, var, float(bounds.variances[j])))
    return McResult(*stats, runs=cfg.runs, failed_runs=failed, bounds=bounds, estimates=estimates)
