"""Seeded turbulent wind generation and wind-profile CSV I/O.

Turbulence is white noise shaped by a first-order low-pass filter
(10 s time constant), then rescaled so the sample statistics hit the
requested mean and turbulence intensity exactly.  Identical arguments
always reproduce bit-identical samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

FILTER_TIME_CONSTANT = 10.0   # s
WIND_FLOOR = 0.1              # m/s


@dataclass(frozen=True)
class WindProfile:
    samples: np.ndarray    # m/s
    dt: float
    mean: float
    turbulence_intensity: float
    seed: int

    @property
    def duration(self) -> float:
        return (len(self.samples) - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.dt


def gen_wind_profile(mean: float, ti: float, duration: float, dt: float,
                     seed: int) -> WindProfile:
    """Generate a hub-height wind speed series with the given sample mean
    and turbulence intensity (std/mean)."""
    if mean <= 0.0:
        raise ValueError("mean wind must be positive")
    if not 0.0 <= ti < 0.5:
        raise ValueError("turbulence intensity must lie in [0, 0.5)")
    if duration <= 0.0 or dt <= 0.0:
        raise ValueError("duration and dt must be positive")
    n = int(round(duration / dt)) + 1
    if ti == 0.0:
        samples = np.full(n, mean)
        return WindProfile(samples, dt, mean, ti, seed)
    rng = np.random.Generator(np.random.PCG64(seed))
    alpha = math.exp(-dt / FILTER_TIME_CONSTANT)
    # pre-roll several time constants so the filter state is stationary
    burn = int(round(5.0 * FILTER_TIME_CONSTANT / dt))
    noise = rng.standard_normal(burn + n)
    x = lfilter([1.0 - alpha], [1.0, -alpha], noise)[burn:]
    std = x.std()
    if std == 0.0:
        samples = np.full(n, mean)
    else:
        samples = mean + (x - x.mean()) / std * (ti * mean)
    samples = np.maximum(samples, WIND_FLOOR)
    return WindProfile(samples, dt, mean, ti, seed)


def save_wind_csv(profile: WindProfile, path) -> None:
    """Write `time_s,wind_ms` rows at 9 significant digits."""
    with open(path, "w") as fh:
        fh.write("time_s,wind_ms\n")
        for t, w in zip(profile.times, profile.samples):
            fh.write(f"{t:.9g},{w:.9g}\n")


def load_wind_csv(path, mean: float = 0.0, ti: float = 0.0,
                  seed: int = -1) -> WindProfile:
    """Read a wind CSV back; metadata fields default to sentinel values
    unless supplied by the caller."""
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 2:
        raise ValueError(f"malformed wind CSV: {path}")
    times, samples = data[:, 0], data[:, 1]
    dt = float(times[1] - times[0])
    if mean == 0.0:
        mean = float(samples.mean())
    return WindProfile(samples, dt, mean, ti, seed)
