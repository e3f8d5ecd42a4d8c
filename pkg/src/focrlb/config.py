"""JSON run configuration: parsing and validation.

Every key is optional; an empty document ``{}`` yields the paper settings
(N=100, Fs=5 samples/s, A=0.01, F0=0.3 Hz, phase pi/6) on the default modal
surrogate.  Layout::

    {
      "model": {"modes": [{"freq_hz": .., "damping_ratio": .., "gain": ..}, ...]
                 | "rational": {"num": [..], "den": [..]},
                "sigma_w2": 1e-4, "fs_hz": 5.0},
      "fo": {"amp": 0.01, "freq_hz": 0.3, "phase_rad": 0.5235987755982988},
      "n_samples": 100,
      "sweep": {"kind": "frequency", "grid": [..] | {"start": .., "stop": .., "count": ..}},
      "mc": {"runs": 1000, "seed": 12345, "burn_in_factor": 10,
             "freq_grid_oversample": 8, "refine_tol": 1e-10},
      "numerics": {"rel_tol": 1e-8, "min_grid": 4096, "jitter": 0.0},
      "psd": {"grid_size": 1025}
    }
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .fo_signal import FoParams
from .noise_model import (
    ModalSpec,
    Mode,
    RationalFilter,
    build_surrogate,
    default_modal_spec,
)

__all__ = ["Config", "ConfigError", "McSettings", "Numerics", "SweepSpec", "load_config", "parse_config"]

SWEEP_KINDS = ("frequency", "amplitude", "length")
DEFAULT_SIGMA_W2 = 1e-4
DEFAULT_FS_HZ = 5.0


class ConfigError(ValueError):
    """All validation failures of one config document, each with a field path."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid config:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class SweepSpec:
    kind: str
    grid: tuple[float, ...]


@dataclass(frozen=True)
class McSettings:
    runs: int = 1000
    seed: int = 12345
    burn_in_factor: float = 10.0
    freq_grid_oversample: int = 8
    refine_tol: float = 1e-10


@dataclass(frozen=True)
class Numerics:
    rel_tol: float = 1e-8
    min_grid: int = 4096
    jitter: float = 0.0


@dataclass(frozen=True)
class Config:
    model: ModalSpec | RationalFilter
    filter: RationalFilter
    fo: FoParams
    n_samples: int
    sweep: SweepSpec | None = None
    mc: McSettings = field(default_factory=McSettings)
    numerics: Numerics = field(default_factory=Numerics)
    psd_grid_size: int = 1025

    @property
    def fs_hz(self) -> float:
        return self.filter.fs_hz


def default_grid(kind: str, fs_hz: float) -> tuple[float, ...]:
    if kind == "frequency":
        step = 0.05
        count = int(math.floor((fs_hz / 2) / step - 1e-9))
        return tuple(round(step * k, 10) for k in range(1, count + 1))
    if kind == "amplitude":
        return tuple(round(0.005 * k, 10) for k in range(1, 11))
    return (20.0, 50.0, 100.0, 200.0, 300.0, 400.0, 500.0)


class _Checker:
    def __init__(self):
        self.errors: list[str] = []

    def section(self, doc: dict, key: str, path: str = "") -> dict:
        val = doc.get(key, {})
        if not isinstance(val, dict):
            self.errors.append(f"{path}{key}: expected an object")
            return {}
        return val

    def number(self, doc, key, path, default, *, check=None, msg="", integer=False):
        if key not in doc:
            return default
        val = doc[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            self.errors.append(f"{path}{key}: expected a finite number, got {val!r}")
            return None
        if integer and val != int(val):
            self.errors.append(f"{path}{key}: expected an integer, got {val!r}")
            return None
        if check is not None and not check(val):
            self.errors.append(f"{path}{key}: {val!r} {msg}")
            return None
        return int(val) if integer else float(val)

    def unknown(self, doc: dict, allowed: set, path: str):
        for key in sorted(set(doc) - allowed):
            self.errors.append(f"{path}{key}: unknown key")


def _number_list(chk: _Checker, val, path: str) -> list[float] | None:
    if not isinstance(val, list) or not val:
        chk.errors.append(f"{path}: expected a non-empty list of numbers")
        return None
    out = []
    for i, v in enumerate(val):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            chk.errors.append(f"{path}[{i}]: expected a finite number, got {v!r}")
            return None
        out.append(float(v))
    return out


def _parse_model(chk: _Checker, doc: dict):
    m = chk.section(doc, "model")
    chk.unknown(m, {"modes", "rational", "sigma_w2", "fs_hz"}, "model.")
    sigma_w2 = chk.number(m, "sigma_w2", "model.", DEFAULT_SIGMA_W2, check=lambda v: v > 0, msg="must be > 0")
    fs_hz = chk.number(m, "fs_hz", "model.", DEFAULT_FS_HZ, check=lambda v: v > 0, msg="must be > 0")
    if "modes" in m and "rational" in m:
        chk.errors.append("model: give either 'modes' or 'rational', not both")
        return None, None, fs_hz

    if "rational" in m:
        rat = m["rational"]
        if not isinstance(rat, dict):
            chk.errors.append("model.rational: expected an object")
            return None, None, fs_hz
        chk.unknown(rat, {"num", "den"}, "model.rational.")
        num = _number_list(chk, rat.get("num"), "model.rational.num")
        den = _number_list(chk, rat.get("den"), "model.rational.den")
        if num is None or den is None or sigma_w2 is None or fs_hz is None:
            return None, None, fs_hz
        try:
            filt = RationalFilter(tuple(num), tuple(den), sigma_w2, fs_hz)
        except ValueError as exc:
            chk.errors.append(f"model.rational: {exc}")
            return None, None, fs_hz
        return filt, filt, fs_hz

    if "modes" in m:
        raw = m["modes"]
        if not isinstance(raw, list):
            chk.errors.append("model.modes: expected a list")
            return None, None, fs_hz
        modes, ok = [], True
        for i, md in enumerate(raw):
            p = f"model.modes[{i}]."
            if not isinstance(md, dict):
                chk.errors.append(f"model.modes[{i}]: expected an object")
                ok = False
                continue
            chk.unknown(md, {"freq_hz", "damping_ratio", "gain"}, p)
            missing = [k for k in ("freq_hz", "damping_ratio") if k not in md]
            for k in missing:
                chk.errors.append(f"{p}{k}: required")
            hi = fs_hz / 2 if fs_hz else math.inf
            f = chk.number(md, "freq_hz", p, None, check=lambda v: 0 < v < hi, msg=f"not in (0, {hi:g})")
            z = chk.number(md, "damping_ratio", p, None, check=lambda v: 0 < v < 1, msg="not in (0, 1)")
            g = chk.number(md, "gain", p, 1.0, check=lambda v: v >= 0, msg="must be >= 0")
            if f is None or z is None or g is None:
                ok = False
                continue
            modes.append(Mode(f, z, g))
        if not raw:
            chk.errors.append("model.modes: at least one mode is required")
            ok = False
        if not ok or sigma_w2 is None or fs_hz is None:
            return None, None, fs_hz
        spec = ModalSpec(tuple(modes))
    else:
        spec = default_modal_spec()
        if sigma_w2 is None or fs_hz is None:
            return None, None, fs_hz
        bad = spec.validate(fs_hz)
        if bad:
            chk.errors.extend(f"model.{e}" for e in bad)
            return None, None, fs_hz
    return spec, build_surrogate(spec, sigma_w2, fs_hz), fs_hz


def _parse_grid(chk: _Checker, s: dict, kind: str, fs_hz: float | None):
    if "grid" not in s:
        return default_grid(kind, fs_hz or DEFAULT_FS_HZ)
    g = s["grid"]
    if isinstance(g, dict):
        chk.unknown(g, {"start", "stop", "count"}, "sweep.grid.")
        start = chk.number(g, "start", "sweep.grid.", None)
        stop = chk.number(g, "stop", "sweep.grid.", None)
        count = chk.number(g, "count", "sweep.grid.", None, integer=True, check=lambda v: v >= 1, msg="must be >= 1")
        for k in ("start", "stop", "count"):
            if k not in g:
                chk.errors.append(f"sweep.grid.{k}: required")
        if None in (start, stop, count):
            return None
        values = [float(v) for v in np.linspace(start, stop, count)]
    else:
        values = _number_list(chk, g, "sweep.grid")
        if values is None:
            return None
    if any(b <= a for a, b in zip(values, values[1:])):
        chk.errors.append("sweep.grid: values must be strictly increasing")
    if kind == "frequency" and fs_hz:
        bad = [v for v in values if not 0 < v < fs_hz / 2]
        if bad:
            chk.errors.append(f"sweep.grid: frequencies {bad} not in (0, {fs_hz / 2:g}) Hz")
    elif kind == "amplitude":
        if any(v <= 0 for v in values):
            chk.errors.append("sweep.grid: amplitudes must be > 0")
    elif kind == "length":
        if any(v != round(v) or v < 8 for v in values):
            chk.errors.append("sweep.grid: record lengths must be integers >= 8")
    return tuple(values)


def load_config(doc: dict[str, Any]) -> Config:
    """Validate a parsed JSON document and build the domain objects."""
    if not isinstance(doc, dict):
        raise ConfigError(["<root>: expected a JSON object"])
    chk = _Checker()
    chk.unknown(doc, {"model", "fo", "n_samples", "sweep", "mc", "numerics", "psd"}, "")
    model, filt, fs_hz = _parse_model(chk, doc)

    fo = chk.section(doc, "fo")
    chk.unknown(fo, {"amp", "freq_hz", "phase_rad"}, "fo.")
    amp = chk.number(fo, "amp", "fo.", 0.01, check=lambda v: v > 0, msg="must be > 0")
    nyq = fs_hz / 2 if fs_hz else math.inf
    freq_hz = chk.number(fo, "freq_hz", "fo.", 0.3, check=lambda v: 0 < v < nyq, msg=f"not in (0, {nyq:g}) Hz (Nyquist)")
    phase = chk.number(fo, "phase_rad", "fo.", math.pi / 6)
    n_samples = chk.number(doc, "n_samples", "", 100, integer=True, check=lambda v: v >= 8, msg="must be >= 8")

    sweep = None
    if "sweep" in doc:
        s = chk.section(doc, "sweep")
        chk.unknown(s, {"kind", "grid"}, "sweep.")
        kind = s.get("kind")
        if kind not in SWEEP_KINDS:
            chk.errors.append(f"sweep.kind: {kind!r} not one of {list(SWEEP_KINDS)}")
        else:
            grid = _parse_grid(chk, s, kind, fs_hz)
            if grid is not None:
                sweep = SweepSpec(kind, grid)

    m = chk.section(doc, "mc")
    chk.unknown(m, {"runs", "seed", "burn_in_factor", "freq_grid_oversample", "refine_tol"}, "mc.")
    mc = McSettings(
        runs=chk.number(m, "runs", "mc.", 1000, integer=True, check=lambda v: v >= 1, msg="must be >= 1"),
        seed=chk.number(m, "seed", "mc.", 12345, integer=True, check=lambda v: 0 <= v < 2**64, msg="must be a 64-bit unsigned integer"),
        burn_in_factor=chk.number(m, "burn_in_factor", "mc.", 10.0, check=lambda v: v >= 10, msg="must be >= 10"),
        freq_grid_oversample=chk.number(m, "freq_grid_oversample", "mc.", 8, integer=True, check=lambda v: v >= 1, msg="must be >= 1"),
        refine_tol=chk.number(m, "refine_tol", "mc.", 1e-10, check=lambda v: v > 0, msg="must be > 0"),
    )

    nm = chk.section(doc, "numerics")
    chk.unknown(nm, {"rel_tol", "min_grid", "jitter"}, "numerics.")
    numerics = Numerics(
        rel_tol=chk.number(nm, "rel_tol", "numerics.", 1e-8, check=lambda v: v > 0, msg="must be > 0"),
        min_grid=chk.number(nm, "min_grid", "numerics.", 4096, integer=True, check=lambda v: v >= 16, msg="must be >= 16"),
        jitter=chk.number(nm, "jitter", "numerics.", 0.0, check=lambda v: v >= 0, msg="must be >= 0"),
    )

    ps = chk.section(doc, "psd")
    chk.unknown(ps, {"grid_size"}, "psd.")
    grid_size = chk.number(ps, "grid_size", "psd.", 1025, integer=True, check=lambda v: v >= 2, msg="must be >= 2")

    if chk.errors:
        raise ConfigError(chk.errors)
    return Config(
        model=model,
        filter=filt,
        fo=FoParams.from_hz(amp, freq_hz, phase, fs_hz),
        n_samples=n_samples,
        sweep=sweep,
        mc=mc,
        numerics=numerics,
        psd_grid_size=grid_size,
    )


def parse_config(path: str | Path) -> Config:
    """Read and validate a single-document JSON config file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<root>: JSON parse error: {exc}"]) from exc
    return load_config(doc)
