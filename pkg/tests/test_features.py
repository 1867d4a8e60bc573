import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chanembed.channel import FrequencyDomainResponse, PowerDelayProfile, TimeDomainResponse
from chanembed.errors import DominantOnlyError, InvalidSnrError, ZeroMagnitudeError, ZeroPowerError
from chanembed.features import (
    CSV_COLUMNS,
    apply_noise_floor,
    extract_features,
    k_factor,
    path_loss,
    read_feature_table,
    spectral_efficiency,
    tau_mean,
    tau_rms,
    tau_var,
    write_feature_table,
)
from chanembed.scenarios import ScenarioSpec, default_frequency_grid, generate_dataset
from chanembed.channel import to_frequency_domain

NS = 1e-9


def pdp(powers, T=1 * NS, t0=0.0):
    return PowerDelayProfile(np.asarray(powers, dtype=float), T, t0)


def flat(mag, n=8, phase=0.3):
    return FrequencyDomainResponse(np.full(n, mag * np.exp(1j * phase)), 24.25e9, 5e6)


@pytest.mark.parametrize("powers,expected", [([1.0, 0.01], 20.0), ([0.5, 0.5], 0.0), ([1, 0.05, 0.05], 10.0)])
def test_k_factor_examples(powers, expected):
    assert k_factor(pdp(powers)) == pytest.approx(expected, abs=1e-12)


def test_k_factor_errors():
    with pytest.raises(DominantOnlyError):
        k_factor(pdp([0, 2.0, 0]))
    with pytest.raises(ZeroPowerError):
        k_factor(pdp([0.0, 0.0]))


def test_delay_moment_examples():
    two = pdp([1.0] + [0] * 9 + [1.0])  # equal taps at 0 and 10 ns
    assert tau_mean(two) == pytest.approx(5 * NS, rel=1e-14)
    assert tau_var(two) == pytest.approx(50 * NS ** 2, rel=1e-14)
    assert tau_rms(two) == pytest.approx(5 * NS, rel=1e-14)

    weighted = pdp([3.0, 0, 0, 0, 1.0])  # powers 3, 1 at 0, 4 ns
    assert tau_mean(weighted) == pytest.approx(1 * NS, rel=1e-14)
    assert tau_var(weighted) == pytest.approx(4 * NS ** 2, rel=1e-14)
    assert tau_rms(weighted) == pytest.approx(math.sqrt(3) * NS, rel=1e-14)

    single = PowerDelayProfile([2.0], 1 * NS, 26.66 * NS)
    assert tau_mean(single) == pytest.approx(26.66 * NS, rel=1e-14)
    assert tau_rms(single) == 0.0
    assert tau_var(pdp([1.0, 0.0])) == 0.0


def test_delay_moments_of_zero_profile_raise():
    for fn in (tau_mean, tau_var, tau_rms):
        with pytest.raises(ZeroPowerError):
            fn(pdp([0.0, 0.0]))


def test_path_loss_examples():
    assert path_loss(flat(0.1)) == pytest.approx(-20.0, abs=1e-12)
    assert path_loss(flat(1.0)) == pytest.approx(0.0, abs=1e-12)
    half = FrequencyDomainResponse([1, 1, 0.1, 0.1], 0.0, 1.0)
    assert path_loss(half) == pytest.approx(-10.0, abs=1e-12)
    # the magnitude-average alternative differs: 20 log10(0.55)
    assert path_loss(half, average="magnitude") == pytest.approx(20 * math.log10(0.55), abs=1e-12)
    with pytest.raises(ZeroMagnitudeError):
        path_loss(FrequencyDomainResponse([1, 0], 0.0, 1.0))


def test_spectral_efficiency_examples():
    assert spectral_efficiency(flat(1.0), snr=1) == pytest.approx(1.0, abs=1e-14)
    assert spectral_efficiency(flat(0.0), snr=1) == 0.0
    assert spectral_efficiency(flat(1.0), snr=3) == pytest.approx(2.0, abs=1e-14)
    for bad in (0.0, -1.0, float("nan")):
        with pytest.raises(InvalidSnrError):
            spectral_efficiency(flat(1.0), snr=bad)


def test_extract_unit_tap():
    h = TimeDomainResponse([1.0], 1 * NS)
    fv = extract_features(h, flat(1.0, phase=0.0), snr=1)
    assert fv.as_array().tolist() == [60.0, 0.0, 0.0, 0.0, 0.0, 1.0]
    with pytest.raises(DominantOnlyError):
        extract_features(h, flat(1.0), snr=1, k_clamp_db=None)
    with pytest.raises(ZeroPowerError):
        extract_features(TimeDomainResponse([0, 0], 1 * NS), flat(1.0))


def test_reverberant_channels_have_finite_features():
    grid = default_frequency_grid()
    for h, _ in generate_dataset(ScenarioSpec("reverberant", count=20, seed=4)):
        assert np.all(np.isfinite(extract_features(h, to_frequency_domain(h, grid)).as_array()))


def test_noise_floor():
    p = pdp([1.0, 1e-3, 1e-5, 0.5])
    cut = apply_noise_floor(p, 40.0)
    assert cut.powers.tolist() == [1.0, 1e-3, 0.0, 0.5]
    assert apply_noise_floor(p, None) is p


power_arrays = arrays(np.float64, st.integers(2, 40),
                      elements=st.floats(0.0, 1e3, allow_nan=False, allow_subnormal=False)).filter(
    lambda a: np.count_nonzero(a) >= 2)


@settings(max_examples=300, deadline=None)
@given(power_arrays, st.floats(0.05, 5.0), st.floats(0.0, 100.0))
def test_rms_identity(powers, T_ns, t0_ns):
    p = pdp(powers, T_ns * NS, t0_ns * NS)
    lhs = tau_rms(p) ** 2
    rhs = tau_var(p) - tau_mean(p) ** 2
    assert abs(lhs - rhs) <= 1e-12 * tau_var(p)


@settings(max_examples=300, deadline=None)
@given(power_arrays, st.floats(1e-6, 1e6))
def test_power_scale_invariance(powers, c):
    p, q = pdp(powers), pdp(powers * c)
    assert k_factor(q) == pytest.approx(k_factor(p), rel=1e-12, abs=1e-12)
    for fn in (tau_mean, tau_var, tau_rms):
        assert fn(q) == pytest.approx(fn(p), rel=1e-12, abs=1e-30)


@settings(max_examples=300, deadline=None)
@given(power_arrays, st.floats(0.0, 50.0))
def test_time_shift_covariance(powers, dt_ns):
    p = pdp(powers)
    dt = dt_ns * NS
    q = PowerDelayProfile(p.powers, p.sampling_period, dt)
    assert tau_mean(q) == pytest.approx(tau_mean(p) + dt, rel=1e-12, abs=1e-24)
    assert tau_rms(q) == pytest.approx(tau_rms(p), rel=1e-9, abs=1e-21)
    expected_var = tau_var(p) + dt ** 2 + 2 * dt * tau_mean(p)
    assert tau_var(q) == pytest.approx(expected_var, rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(arrays(np.complex128, st.integers(1, 30),
              elements=st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False)),
       st.floats(1e-5, 1e5))
def test_amplitude_scaling_shifts_path_loss(samples, c):
    H = FrequencyDomainResponse(samples, 0.0, 1.0)
    assert path_loss(H.scaled(c)) - path_loss(H) == pytest.approx(20 * math.log10(c), abs=1e-9)


def test_features_table_round_trip(tmp_path):
    X = np.random.default_rng(0).normal(size=(5, 6))
    write_feature_table(tmp_path / "f.csv", list("abcde"), X)
    labels, Y = read_feature_table(tmp_path / "f.csv")
    assert labels == list("abcde")
    assert np.array_equal(X, Y)
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == ",".join(("label",) + CSV_COLUMNS)
