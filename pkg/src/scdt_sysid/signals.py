"""Uniformly sampled time series and their on-disk format.

A signal is stored as a raw little-endian float64 array (``<base>.f64``)
plus a JSON sidecar header (``<base>.json``) with at least ``n``, ``t0``
and ``dt``.  Extra header fields (e.g. simulation parameters) are
preserved on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def _frozen_array(x, dtype=np.float64) -> np.ndarray:
    a = np.array(x, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Signal:
    """A real time series sampled at t0 + n*dt, n = 0..N-1."""

    samples: np.ndarray
    t0: float = 0.0
    dt: float = 1.0

    def __post_init__(self):
        samples = _frozen_array(self.samples)
        if samples.ndim != 1 or samples.size < 2:
            raise ValueError("signal needs at least 2 samples")
        if not np.all(np.isfinite(samples)):
            raise ValueError("signal samples must be finite")
        if not (self.dt > 0):
            raise ValueError("dt must be positive")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (self.n - 1)

    def l1(self) -> float:
        """Discrete l1 norm, sum of |samples| (no dt factor)."""
        return float(np.sum(np.abs(self.samples)))

    def scaled(self, factor: float) -> "Signal":
        return Signal(self.samples * factor, self.t0, self.dt)


def time_axis_params(t: np.ndarray) -> tuple[float, float]:
    """(t0, dt) of a uniform time grid; raises if spacing is not uniform."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ValueError("time grid needs at least 2 points")
    dt = (t[-1] - t[0]) / (t.size - 1)
    if dt <= 0 or not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-12 * max(1.0, abs(dt))):
        raise ValueError("time grid must be uniform and increasing")
    return float(t[0]), float(dt)


def save_signal(sig: Signal, base: str | Path, extra: dict | None = None) -> None:
    base = Path(base)
    base.parent.mkdir(parents=True, exist_ok=True)
    sig.samples.astype("<f8").tofile(base.with_suffix(".f64"))
    header = {"n": sig.n, "t0": sig.t0, "dt": sig.dt}
    if extra:
        header.update(extra)
    base.with_suffix(".json").write_text(json.dumps(header, indent=1, sort_keys=True))


def load_signal(base: str | Path) -> tuple[Signal, dict]:
    """Load a signal; returns (signal, full header dict)."""
    base = Path(base)
    header = json.loads(base.with_suffix(".json").read_text())
    raw = np.fromfile(base.with_suffix(".f64"), dtype="<f8")
    if raw.size != int(header["n"]):
        raise ValueError(
            f"{base}: header says n={header['n']} but file holds {raw.size} samples"
        )
    return Signal(raw, float(header["t0"]), float(header["dt"])), header
