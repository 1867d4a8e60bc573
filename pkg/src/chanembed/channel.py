"""Channel responses in the time and frequency domains.

A time-domain response holds complex taps ``h[n]`` sampled every ``T`` seconds
starting at ``t0``; a frequency-domain response holds complex samples ``H[l]``
on the grid ``f0 + l*df``. The two are linked by

    H(f) = sum_n h[n] * exp(-j 2 pi f t_n)                    (forward)
    h(t) = T * df * sum_l H[l] * exp(+j 2 pi f_l t)           (inverse)

where ``T`` in the inverse is the step of the requested time grid. The forward
transform is unnormalized. The ``T * df`` factor in the inverse equals ``1/N``
when the grids are matched (same length ``N`` and ``T * df * N == 1``), so a
forward/inverse round trip on matched grids returns the input.

Both directions use direct summation, which works on any uniform grid. When
the grids are matched an FFT path with explicit phase corrections is used
instead; it agrees with direct summation to rounding error.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MATCH_RTOL = 1e-12


def _frozen_complex(values, name):
    arr = np.array(values, dtype=np.complex128).reshape(-1)
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class UniformGrid:
    """``count`` points ``start + i*step``; used for both time and frequency axes."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"grid step must be positive, got {self.step}")
        if self.count < 1:
            raise ValueError(f"grid needs at least one point, got {self.count}")

    def points(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)


@dataclass(frozen=True, eq=False)
class TimeDomainResponse:
    taps: np.ndarray
    sampling_period: float
    start_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "taps", _frozen_complex(self.taps, "taps"))
        if not self.sampling_period > 0:
            raise ValueError("sampling_period must be positive")
        object.__setattr__(self, "sampling_period", float(self.sampling_period))
        object.__setattr__(self, "start_time", float(self.start_time))

    def __len__(self):
        return self.taps.size

    @property
    def times(self) -> np.ndarray:
        return self.start_time + self.sampling_period * np.arange(self.taps.size)

    @property
    def grid(self) -> UniformGrid:
        return UniformGrid(self.start_time, self.sampling_period, self.taps.size)

    def scaled(self, gain) -> "TimeDomainResponse":
        return TimeDomainResponse(self.taps * gain, self.sampling_period, self.start_time)

    def delayed(self, delta_t: float) -> "TimeDomainResponse":
        return TimeDomainResponse(self.taps, self.sampling_period, self.start_time + delta_t)


@dataclass(frozen=True, eq=False)
class FrequencyDomainResponse:
    samples: np.ndarray
    start_frequency: float
    frequency_step: float

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen_complex(self.samples, "samples"))
        if not self.frequency_step > 0:
            raise ValueError("frequency_step must be positive")
        object.__setattr__(self, "start_frequency", float(self.start_frequency))
        object.__setattr__(self, "frequency_step", float(self.frequency_step))

    def __len__(self):
        return self.samples.size

    @property
    def frequencies(self) -> np.ndarray:
        return self.start_frequency + self.frequency_step * np.arange(self.samples.size)

    @property
    def bandwidth(self) -> float:
        return (self.samples.size - 1) * self.frequency_step

    @property
    def grid(self) -> UniformGrid:
        return UniformGrid(self.start_frequency, self.frequency_step, self.samples.size)

    def scaled(self, gain) -> "FrequencyDomainResponse":
        return FrequencyDomainResponse(self.samples * gain, self.start_frequency, self.frequency_step)


@dataclass(frozen=True, eq=False)
class PowerDelayProfile:
    powers: np.ndarray
    sampling_period: float
    start_time: float = 0.0

    def __post_init__(self):
        arr = np.array(self.powers, dtype=np.float64).reshape(-1)
        if arr.size == 0:
            raise ValueError("powers must be non-empty")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("powers must be finite and non-negative")
        arr.flags.writeable = False
        object.__setattr__(self, "powers", arr)
        if not self.sampling_period > 0:
            raise ValueError("sampling_period must be positive")

    def __len__(self):
        return self.powers.size

    @property
    def times(self) -> np.ndarray:
        return self.start_time + self.sampling_period * np.arange(self.powers.size)


def matched_frequency_grid(h: TimeDomainResponse, start_frequency: float = 0.0) -> UniformGrid:
    """Frequency grid of the same length as ``h`` with ``df = 1/(N*T)``."""
    n = len(h)
    return UniformGrid(start_frequency, 1.0 / (n * h.sampling_period), n)


def matched_time_grid(H: FrequencyDomainResponse, start_time: float = 0.0) -> UniformGrid:
    n = len(H)
    return UniformGrid(start_time, 1.0 / (n * H.frequency_step), n)


def _is_matched(n_src, n_dst, step_product):
    return n_src == n_dst and abs(step_product * n_src - 1.0) <= MATCH_RTOL


def _phasor(sign, x):
    # exp(sign * j2pi x) with x reduced modulo 1 to keep the argument small
    return np.exp(sign * 2j * np.pi * (x - np.round(x)))


def _check_grid(grid, what):
    if grid.count < 2:
        raise ValueError(f"{what} grid needs at least 2 points")


def to_frequency_domain(h: TimeDomainResponse, grid: UniformGrid, use_fft: bool = True) -> FrequencyDomainResponse:
    """Evaluate ``H(f) = sum_n h[n] exp(-j2pi f t_n)`` on ``grid``."""
    _check_grid(grid, "frequency")
    t0, T = h.start_time, h.sampling_period
    f0, df = grid.start, grid.step
    n = len(h)
    if use_fft and _is_matched(n, grid.count, T * df):
        idx = np.arange(n)
        pre = h.taps * _phasor(-1, f0 * T * idx)
        post = _phasor(-1, f0 * t0 + df * t0 * idx)
        samples = post * np.fft.fft(pre)
    else:
        phase = np.outer(grid.points(), h.times)
        samples = _phasor(-1, phase) @ h.taps
    return FrequencyDomainResponse(samples, f0, df)


def to_time_domain(H: FrequencyDomainResponse, grid: UniformGrid, use_fft: bool = True) -> TimeDomainResponse:
    """Evaluate ``h(t) = T*df * sum_l H[l] exp(+j2pi f_l t)`` on ``grid``."""
    _check_grid(grid, "time")
    f0, df = H.start_frequency, H.frequency_step
    t0, T = grid.start, grid.step
    m = len(H)
    scale = T * df
    if use_fft and _is_matched(m, grid.count, T * df):
        idx = np.arange(m)
        pre = H.samples * _phasor(1, df * t0 * idx)
        post = _phasor(1, f0 * t0 + f0 * T * idx)
        taps = scale * m * post * np.fft.ifft(pre)
    else:
        phase = np.outer(grid.points(), H.frequencies)
        taps = scale * (_phasor(1, phase) @ H.samples)
    return TimeDomainResponse(taps, T, t0)


def power_delay_profile(h: TimeDomainResponse) -> PowerDelayProfile:
    powers = h.taps.real ** 2 + h.taps.imag ** 2
    return PowerDelayProfile(powers, h.sampling_period, h.start_time)


# serialization -------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def write_response(path, response) -> None:
    """Write ``path`` (CSV ``index,re,im``) plus a JSON sidecar next to it."""
    path = Path(path)
    if isinstance(response, TimeDomainResponse):
        values = response.taps
        meta = {"domain": "time", "step": response.sampling_period, "start": response.start_time}
    elif isinstance(response, FrequencyDomainResponse):
        values = response.samples
        meta = {"domain": "frequency", "step": response.frequency_step, "start": response.start_frequency}
    else:
        raise TypeError(f"cannot serialize {type(response).__name__}")
    meta["count"] = int(values.size)
    with open(path, "w", newline="") as fh:
        fh.write("index,re,im\n")
        for i, v in enumerate(values):
            fh.write(f"{i},{_fmt(v.real)},{_fmt(v.imag)}\n")
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_suffix(".json")


def read_response(path):
    path = Path(path)
    meta = json.loads(sidecar_path(path).read_text())
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    rows.sort(key=lambda r: int(r["index"]))
    values = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
    if meta.get("count", values.size) != values.size:
        raise ValueError(f"{path}: sidecar count {meta['count']} != {values.size} rows")
    if meta["domain"] == "time":
        return TimeDomainResponse(values, meta["step"], meta["start"])
    if meta["domain"] == "frequency":
        return FrequencyDomainResponse(values, meta["start"], meta["step"])
    raise ValueError(f"{path}: unknown domain tag {meta['domain']!r}")
