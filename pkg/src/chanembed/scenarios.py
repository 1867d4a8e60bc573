"""Synthetic scenario datasets and delay/attenuation post-processing.

Four parametric archetypes stand in for measured environments:

``anechoic``     one line-of-sight tap plus a weak complex-Gaussian floor
``reverberant``  sparse taps with exponentially decaying Rayleigh power
``indoor``       dense (every sample) exponentially decaying Rayleigh taps
``outdoor``      one tap at a long time of arrival with high path loss

Responses live on a 651-sample time grid whose matched frequency grid spans
24.25-27.5 GHz in 5 MHz steps. ``mean_path_loss`` fixes the total tap power
(in dB) of each channel before gain jitter, so for single-tap archetypes it is
also the frequency-averaged path loss.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .channel import (
    TimeDomainResponse,
    UniformGrid,
    power_delay_profile,
    read_response,
    to_frequency_domain,
    write_response,
)
from .features import path_loss

ARCHETYPES = ("anechoic", "reverberant", "indoor", "outdoor")

N_SAMPLES = 651
START_FREQUENCY = 24.25e9
FREQUENCY_STEP = 5e6
SAMPLING_PERIOD = 1.0 / (N_SAMPLES * FREQUENCY_STEP)
SPEED_OF_LIGHT = 299_792_458.0

# calibrated so the extracted features fall in distinct, qualitatively plausible ranges
ARCHETYPE_DEFAULTS = {
    "anechoic": dict(toa=5.33e-9, mean_path_loss=-50.0, decay_constant=None, tap_spacing=None,
                     floor_db=-75.0, toa_jitter=0.05e-9, gain_jitter_db=3.0, position_spread=0.0,
                     decay_jitter=0.0, floor_jitter_db=5.0),
    "reverberant": dict(toa=20.0e-9, mean_path_loss=-60.0, decay_constant=15.0e-9, tap_spacing=2.0e-9,
                        floor_db=None, toa_jitter=0.1e-9, gain_jitter_db=3.0, position_spread=0.5,
                        decay_jitter=0.4, floor_jitter_db=0.0),
    "indoor": dict(toa=20.0e-9, mean_path_loss=-66.0, decay_constant=30.0e-9, tap_spacing=None,
                   floor_db=None, toa_jitter=0.3e-9, gain_jitter_db=3.0, position_spread=0.5,
                   decay_jitter=0.4, floor_jitter_db=0.0),
    "outdoor": dict(toa=26.66e-9, mean_path_loss=-93.0, decay_constant=None, tap_spacing=None,
                    floor_db=-75.0, toa_jitter=0.05e-9, gain_jitter_db=1.0, position_spread=0.0,
                    decay_jitter=0.0, floor_jitter_db=5.0),
}


def default_frequency_grid() -> UniformGrid:
    return UniformGrid(START_FREQUENCY, FREQUENCY_STEP, N_SAMPLES)


@dataclass(frozen=True)
class ScenarioSpec:
    archetype: str
    count: int = 150
    seed: int = 0
    label: str | None = None
    toa: float | None = None
    mean_path_loss: float | None = None
    decay_constant: float | None = None
    tap_spacing: float | None = None  # None: a tap on every sample
    floor_db: float | None = None  # per-tap floor power relative to the peak tap
    toa_jitter: float | None = None
    gain_jitter_db: float | None = None
    position_spread: float | None = None  # distance drawn uniformly from toa*(1 +/- spread)
    decay_jitter: float | None = None  # decay constant drawn uniformly from decay*(1 +/- jitter)
    floor_jitter_db: float | None = None  # floor level drawn uniformly from floor_db +/- jitter
    n_samples: int = N_SAMPLES
    sampling_period: float = SAMPLING_PERIOD

    def __post_init__(self):
        if self.archetype not in ARCHETYPES:
            raise ValueError(f"unknown archetype {self.archetype!r}; choose from {ARCHETYPES}")
        # unset fields take the archetype default (for indoor a None spacing means every sample)
        for name, value in ARCHETYPE_DEFAULTS[self.archetype].items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, value)
        if self.decay_constant is not None and not self.decay_constant > 0:
            raise ValueError("decay_constant must be positive")
        if self.label is None:
            object.__setattr__(self, "label", self.archetype)
        if self.toa < 0:
            raise ValueError("toa must be non-negative")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not (0 <= self.position_spread < 1 and 0 <= self.decay_jitter < 1):
            raise ValueError("position_spread and decay_jitter must lie in [0, 1)")
        if self.floor_jitter_db < 0:
            raise ValueError("floor_jitter_db must be non-negative")
        if self.toa_jitter < 0 or self.gain_jitter_db < 0:
            raise ValueError("jitter parameters must be non-negative")
        if self.tap_spacing is not None and not self.tap_spacing > 0:
            raise ValueError("tap_spacing must be positive")
        if self.n_samples < 2 or not self.sampling_period > 0:
            raise ValueError("time grid needs >= 2 samples and a positive period")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario fields: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


def _complex_gaussian(rng, size, power):
    return np.sqrt(power / 2.0) * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def _one_channel(spec: ScenarioSpec, rng) -> TimeDomainResponse:
    n, T = spec.n_samples, spec.sampling_period
    t = T * np.arange(n)
    # free-space scaling with a random TX-RX distance: ToA ~ d, path loss ~ 20 log10 d
    scale = 1.0 + spec.position_spread * (2.0 * rng.random() - 1.0)
    toa = max(0.0, spec.toa * scale + spec.toa_jitter * rng.standard_normal())
    n0 = min(int(round(toa / T)), n - 1)
    taps = np.zeros(n, dtype=np.complex128)
    if spec.decay_constant is not None:
        if spec.tap_spacing is None:
            pos = np.arange(n0, n)
        else:
            steps = np.arange(0, (n - 1 - n0) * T / spec.tap_spacing + 1)
            pos = np.unique(n0 + np.round(steps * spec.tap_spacing / T).astype(int))
            pos = pos[pos < n]
        decay = spec.decay_constant * (1.0 + spec.decay_jitter * (2.0 * rng.random() - 1.0))
        power = np.exp(-(t[pos] - t[n0]) / decay)
        taps[pos] = _complex_gaussian(rng, pos.size, power)
    else:
        taps[n0] = np.exp(2j * np.pi * rng.random())
    if spec.floor_db is not None:
        peak = np.max(np.abs(taps) ** 2)
        floor_db = spec.floor_db + spec.floor_jitter_db * (2.0 * rng.random() - 1.0)
        taps = taps + _complex_gaussian(rng, n, peak * 10.0 ** (floor_db / 10.0))
    target_db = spec.mean_path_loss - 20.0 * math.log10(scale) + spec.gain_jitter_db * rng.standard_normal()
    taps *= math.sqrt(10.0 ** (target_db / 10.0) / np.sum(np.abs(taps) ** 2))
    return TimeDomainResponse(taps, T, 0.0)


def channel_rng(seed: int, index: int):
    """Independent stream for channel ``index``; serial and parallel runs agree."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def generate_dataset(spec: ScenarioSpec):
    """``spec.count`` channels as a list of ``(TimeDomainResponse, label)``."""
    return [(_one_channel(spec, channel_rng(spec.seed, i)), spec.label) for i in range(spec.count)]


# post-processing ------------------------------------------------------------

@dataclass(frozen=True)
class ModificationSpec:
    extra_delay: float = 0.0
    target_mean_path_loss: float | None = None
    attenuation_db: float | None = None  # explicit gain in dB; ignored if a target is set

    def __post_init__(self):
        if self.extra_delay < 0:
            raise ValueError("extra_delay must be non-negative")


def apply_delay(h: TimeDomainResponse, delta_t: float, method: str = "offset") -> TimeDomainResponse:
    """Delay a response by ``delta_t`` seconds.

    ``method="offset"`` moves the time origin; taps are untouched, so delay
    moments shift exactly and the magnitude spectrum is unchanged.
    ``method="resample"`` keeps the time grid: whole samples are shifted in
    with zeros at the front (the tail is dropped) and the sub-sample residue
    is applied as a circular phase ramp across the band.
    """
    if delta_t < 0:
        raise ValueError("delta_t must be non-negative")
    if delta_t == 0:
        return h
    if method == "offset":
        return h.delayed(delta_t)
    if method != "resample":
        raise ValueError(f"unknown delay method {method!r}")
    T = h.sampling_period
    whole = int(math.floor(delta_t / T))
    frac = delta_t - whole * T
    n = len(h)
    taps = np.zeros(n, dtype=np.complex128)
    if whole < n:
        taps[whole:] = h.taps[: n - whole]
    if frac > 0:
        f = np.fft.fftfreq(n, T)
        taps = np.fft.ifft(np.fft.fft(taps) * np.exp(-2j * np.pi * f * frac))
    return TimeDomainResponse(taps, T, h.start_time)


def mean_path_loss(freq_responses, average: str = "db") -> float:
    return math.fsum(path_loss(H, average) for H in freq_responses) / len(freq_responses)


def attenuation_gain(freq_responses, target_pl: float) -> float:
    """Linear amplitude gain moving the dataset-mean path loss to ``target_pl``."""
    if len(freq_responses) == 0:
        raise ValueError("dataset is empty")
    return 10.0 ** ((target_pl - mean_path_loss(freq_responses)) / 20.0)


def apply_attenuation_to_target(freq_responses, target_pl: float):
    """Scale every response by one global gain; returns ``(responses, gain)``."""
    g = attenuation_gain(freq_responses, target_pl)
    if g == 1.0:
        return list(freq_responses), g
    return [H.scaled(g) for H in freq_responses], g


def emulate_scenario(source: "ChannelDataset", mod: ModificationSpec, delay_method: str = "offset"):
    """Delay then attenuate every channel of ``source``.

    The attenuation gain is computed on the delayed channels' frequency
    responses. Labels become ``<label>-modified`` and the provenance records
    the modification and the gain that was applied.
    """
    delayed = [apply_delay(h, mod.extra_delay, delay_method) for h in source.channels]
    if mod.target_mean_path_loss is not None:
        freq = [to_frequency_domain(h, source.frequency_grid) for h in delayed]
        g = attenuation_gain(freq, mod.target_mean_path_loss)
    elif mod.attenuation_db is not None:
        g = 10.0 ** (mod.attenuation_db / 20.0)
    else:
        g = 1.0
    channels = delayed if g == 1.0 else [h.scaled(g) for h in delayed]
    provenance = {
        "source": source.provenance,
        "modification": {**asdict(mod), "delay_method": delay_method, "gain": g},
    }
    return ChannelDataset(channels, [f"{lab}-modified" for lab in source.labels],
                          source.frequency_grid, provenance)


def pdp_peak_time(h: TimeDomainResponse) -> float:
    pdp = power_delay_profile(h)
    return float(pdp.times[int(np.argmax(pdp.powers))])


# persistence ------------------------------------------------------------------

MANIFEST = "manifest.json"
PACKED = "channels.csv"


@dataclass
class ChannelDataset:
    channels: list
    labels: list
    frequency_grid: UniformGrid = field(default_factory=default_frequency_grid)
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.channels)

    def frequency_responses(self):
        return [to_frequency_domain(h, self.frequency_grid) for h in self.channels]

    def save(self, directory, packed: bool = False) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        entries = []
        if packed:
            with open(directory / PACKED, "w", newline="") as fh:
                fh.write("channel,label,index,re,im\n")
                for i, (h, label) in enumerate(zip(self.channels, self.labels)):
                    cid = f"ch{i:05d}"
                    for k, v in enumerate(h.taps):
                        fh.write(f"{cid},{label},{k},{float(v.real)!r},{float(v.imag)!r}\n")
                    entries.append({"id": cid, "label": label, "step": h.sampling_period,
                                    "start": h.start_time, "count": len(h)})
        else:
            for i, (h, label) in enumerate(zip(self.channels, self.labels)):
                cid = f"ch{i:05d}"
                write_response(directory / f"{cid}.csv", h)
                entries.append({"id": cid, "label": label, "file": f"{cid}.csv"})
        g = self.frequency_grid
        manifest = {
            "format": "chanembed-dataset",
            "version": 1,
            "layout": "packed" if packed else "per-channel",
            "frequency_grid": {"start": g.start, "step": g.step, "count": g.count},
            "provenance": self.provenance,
            "channels": entries,
        }
        (directory / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, directory) -> "ChannelDataset":
        directory = Path(directory)
        manifest = json.loads((directory / MANIFEST).read_text())
        fg = manifest["frequency_grid"]
        grid = UniformGrid(fg["start"], fg["step"], int(fg["count"]))
        entries = manifest["channels"]
        if manifest.get("layout") == "packed":
            taps = {}
            with open(directory / PACKED, newline="") as fh:
                for rec in csv.DictReader(fh):
                    taps.setdefault(rec["channel"], []).append(
                        (int(rec["index"]), complex(float(rec["re"]), float(rec["im"]))))
            channels = []
            for e in entries:
                vals = [v for _, v in sorted(taps[e["id"]])]
                channels.append(TimeDomainResponse(vals, e["step"], e["start"]))
        else:
            channels = [read_response(directory / e["file"]) for e in entries]
        return cls(channels=channels, labels=[e["label"] for e in entries], frequency_grid=grid,
                   provenance=manifest.get("provenance", {}))
