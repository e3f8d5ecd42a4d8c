"""Sweep, PSD and Monte Carlo drivers that produce CSV rows."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from functools import lru_cache

import numpy as np

from .config import Config, SweepSpec
from .covariance import NotPositiveDefinite, ToeplitzCovariance
from .crlb_engine import SingularFisher, bounds_for
from .fo_signal import FoParams
from .monte_carlo import McConfig, McResult, min_burn_in, run_mc
from .noise_model import AutocovarianceSeq, RationalFilter, autocovariance, psd

__all__ = [
    "MC_COLUMNS",
    "PSD_COLUMNS",
    "SWEEP_COLUMNS",
    "format_csv",
    "mc_rows",
    "run_montecarlo",
    "run_psd",
    "run_sweep",
]

SWEEP_COLUMNS = ("swept_value", "std_amp", "std_freq_hz", "std_f0", "std_phase_rad", "fim_condition", "error")
PSD_COLUMNS = ("f_hz", "psd_two_sided", "psd_one_sided")
MC_COLUMNS = ("param", "truth", "sample_mean", "sample_var", "crlb_var", "ratio", "runs", "failed_runs")


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.17g}"


def format_csv(columns, rows, comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


@lru_cache(maxsize=32)
def _cached_autocov(filt: RationalFilter, max_lag: int, rel_tol: float, min_grid: int) -> AutocovarianceSeq:
    return autocovariance(filt, max_lag, rel_tol, min_grid)


@lru_cache(maxsize=32)
def _cached_cov(filt: RationalFilter, n: int, rel_tol: float, min_grid: int, jitter: float) -> ToeplitzCovariance:
    cov = ToeplitzCovariance(_cached_autocov(filt, max(n - 1, 1), rel_tol, min_grid), n, jitter)
    try:
        cov.cholesky  # factor once, before concurrent use
    except NotPositiveDefinite:
        pass
    return cov


def _point(cfg: Config, kind: str, value: float) -> tuple:
    fs = cfg.fs_hz
    fo, n = cfg.fo, cfg.n_samples
    try:
        if kind == "frequency":
            fo = FoParams.from_hz(fo.amp, value, fo.phi, fs)
        elif kind == "amplitude":
            fo = replace(fo, amp=value)
        else:
            n = int(round(value))
        nm = cfg.numerics
        cov = _cached_cov(cfg.filter, n, nm.rel_tol, nm.min_grid, nm.jitter)
        b = bounds_for(fo, cov, fs)
    except (SingularFisher, NotPositiveDefinite, ArithmeticError, ValueError) as exc:
        return (value, "", "", "", "", "", f"{type(exc).__name__}: {exc}")
    return (value, b.std_amp, b.std_freq_hz, b.std_f0, b.std_phi, b.condition_estimate, "")


def run_sweep(cfg: Config, spec: SweepSpec, jobs: int = 1) -> list[tuple]:
    """One row per grid point, in grid order; failures land in ``error``."""
    if spec.kind == "length":
        # cover the longest record once so every N reuses the same lags
        nm = cfg.numerics
        _cached_autocov(cfg.filter, int(max(spec.grid)) - 1, nm.rel_tol, nm.min_grid)
    else:
        _point(cfg, spec.kind, spec.grid[0])

    def task(v):
        return _point(cfg, spec.kind, v)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(task, spec.grid))
    return [task(v) for v in spec.grid]


def run_psd(filt: RationalFilter, grid_size: int) -> list[tuple]:
    """``grid_size`` uniform points on [0, Fs/2] as PSD densities per Hz."""
    fs = filt.fs_hz
    f = np.linspace(0.0, 0.5, grid_size)
    two = psd(filt, f) / fs
    one = np.where((f > 0) & (f < 0.5), 2 * two, two)
    return [(fi * fs, t, o) for fi, t, o in zip(f, two, one)]


def run_montecarlo(cfg: Config, jobs: int = 1) -> McResult:
    burn = int(math.ceil(cfg.mc.burn_in_factor / 10 * min_burn_in(cfg.filter)))
    mc = McConfig(
        runs=cfg.mc.runs,
        seed=cfg.mc.seed,
        n_samples=cfg.n_samples,
        filter=cfg.filter,
        truth=cfg.fo,
        burn_in=burn,
        freq_grid_oversample=cfg.mc.freq_grid_oversample,
        refine_tol=cfg.mc.refine_tol,
        rel_tol=cfg.numerics.rel_tol,
        min_grid=cfg.numerics.min_grid,
        jitter=cfg.numerics.jitter,
    )
    return run_mc(mc, jobs=jobs)


def mc_rows(res: McResult, fs_hz: float) -> list[tuple]:
    rows = []
    for p, name, unit in ((res.amp, "amp", 1.0), (res.f0, "freq_hz", fs_hz), (res.phi, "phase_rad", 1.0)):
        rows.append(
            (name, p.truth * unit, p.sample_mean * unit, p.sample_var * unit**2,
             p.crlb_var * unit**2, p.ratio, res.runs, res.failed_runs)
        )
    return rows
