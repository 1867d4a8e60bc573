"""Wideband channel features.

Each channel is summarised by six numbers: K factor, RMS delay spread, mean
delay, raw second delay moment, frequency-averaged path loss and
frequency-averaged spectral efficiency. Delay moments come from the power
delay profile; the last two come from the frequency response.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    FrequencyDomainResponse,
    PowerDelayProfile,
    TimeDomainResponse,
    power_delay_profile,
)
from .errors import DominantOnlyError, InvalidSnrError, ZeroMagnitudeError, ZeroPowerError

FEATURE_NAMES = ("k_factor", "tau_rms", "tau_mean", "tau_var", "path_loss", "spectral_efficiency")
CSV_COLUMNS = ("k_factor_db", "tau_rms_s", "tau_mean_s", "tau_var_s2", "path_loss_db", "spectral_eff_bpshz")

DEFAULT_SNR = 10.0  # linear, i.e. 10 dB
DEFAULT_K_CLAMP_DB = 60.0


@dataclass(frozen=True)
class FeatureVector:
    k_factor: float
    tau_rms: float
    tau_mean: float
    tau_var: float
    path_loss: float
    spectral_efficiency: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=np.float64)


@dataclass(frozen=True)
class LabeledObservation:
    features: FeatureVector
    label: str
    metadata: dict = field(default_factory=dict)


def _weights(pdp):
    # powers normalized to a unit peak, so tiny absolute powers do not underflow in the moments
    peak = float(np.max(pdp.powers))
    if peak <= 0.0:
        raise ZeroPowerError("power delay profile has zero total power")
    w = pdp.powers / peak
    return w, float(np.sum(w))


def k_factor(pdp: PowerDelayProfile) -> float:
    """Dominant tap power over the summed power of every other tap, in dB."""
    p = pdp.powers
    n_max = int(np.argmax(p))
    peak = p[n_max]
    if peak <= 0.0:
        raise ZeroPowerError("power delay profile has zero total power")
    rest = float(np.sum(p[:n_max]) + np.sum(p[n_max + 1:]))
    if rest <= 0.0:
        raise DominantOnlyError("all power sits in a single tap; K factor is unbounded")
    return 10.0 * math.log10(peak / rest)


def tau_mean(pdp: PowerDelayProfile) -> float:
    w, total = _weights(pdp)
    return float(np.sum(pdp.times * w)) / total


def tau_var(pdp: PowerDelayProfile) -> float:
    """Raw (non-central) second moment of the delays, in s^2."""
    w, total = _weights(pdp)
    t = pdp.times
    return float(np.sum(t * t * w)) / total


def tau_rms(pdp: PowerDelayProfile) -> float:
    w, total = _weights(pdp)
    t = pdp.times
    mean = float(np.sum(t * w)) / total
    dev = t - mean
    return math.sqrt(float(np.sum(dev * dev * w)) / total)


def _magnitudes(H):
    mag = np.abs(H.samples)
    if np.any(mag == 0.0):
        raise ZeroMagnitudeError(f"{int(np.sum(mag == 0.0))} frequency samples have zero magnitude")
    return mag


def path_loss(H: FrequencyDomainResponse, average: str = "db") -> float:
    """Frequency-averaged ``20 log10 |H(f)|``.

    ``average="db"`` (default) averages the dB values over frequency;
    ``average="magnitude"`` takes the dB value of the mean magnitude instead.
    """
    mag = _magnitudes(H)
    if average == "db":
        return float(np.mean(20.0 * np.log10(mag)))
    if average == "magnitude":
        return 20.0 * math.log10(float(np.mean(mag)))
    raise ValueError(f"unknown path-loss averaging {average!r}")


def spectral_efficiency(H: FrequencyDomainResponse, snr: float = DEFAULT_SNR) -> float:
    """Mean over frequency of ``log2(1 + snr |H(f)|^2)`` in bps/Hz; ``snr`` is linear."""
    if not snr > 0:
        raise InvalidSnrError(f"SNR must be positive (linear), got {snr}")
    gain = H.samples.real ** 2 + H.samples.imag ** 2
    return float(np.mean(np.log1p(snr * gain) / math.log(2.0)))


def apply_noise_floor(pdp: PowerDelayProfile, threshold_db: float | None) -> PowerDelayProfile:
    """Zero every tap more than ``threshold_db`` below the peak."""
    if threshold_db is None:
        return pdp
    p = pdp.powers
    keep = p >= p.max() * 10.0 ** (-threshold_db / 10.0)
    return PowerDelayProfile(np.where(keep, p, 0.0), pdp.sampling_period, pdp.start_time)


def extract_features(
    h: TimeDomainResponse,
    H: FrequencyDomainResponse,
    snr: float = DEFAULT_SNR,
    *,
    k_clamp_db: float | None = DEFAULT_K_CLAMP_DB,
    noise_floor_db: float | None = None,
    path_loss_average: str = "db",
) -> FeatureVector:
    """Compute the six-element feature vector of one channel.

    ``k_clamp_db`` is returned as the K factor when all power sits in one tap;
    pass ``None`` to raise :class:`DominantOnlyError` instead (strict mode).
    """
    pdp = apply_noise_floor(power_delay_profile(h), noise_floor_db)
    _weights(pdp)
    try:
        k = k_factor(pdp)
    except DominantOnlyError:
        if k_clamp_db is None:
            raise
        k = float(k_clamp_db)
    return FeatureVector(
        k_factor=k,
        tau_rms=tau_rms(pdp),
        tau_mean=tau_mean(pdp),
        tau_var=tau_var(pdp),
        path_loss=path_loss(H, average=path_loss_average),
        spectral_efficiency=spectral_efficiency(H, snr),
    )


def write_feature_table(path, labels, X) -> None:
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(("label",) + CSV_COLUMNS) + "\n")
        for label, row in zip(labels, X):
            fh.write(",".join([str(label)] + [repr(float(v)) for v in row]) + "\n")


def read_feature_table(path):
    """Return ``(labels, X)`` from a feature CSV."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != ("label",) + CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected feature header {header}")
        labels, rows = [], []
        for rec in reader:
            labels.append(rec[0])
            rows.append([float(v) for v in rec[1:]])
    return labels, np.array(rows, dtype=np.float64).reshape(-1, len(CSV_COLUMNS))
