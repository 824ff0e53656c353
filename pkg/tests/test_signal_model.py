"""Rotation-signal model: resonance shape, photon flux, shot-noise synthesis."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from amorsim.config import AtomConfig, ConfigError, FieldConfig
from amorsim.signal_model import (
    ResonanceParams,
    RotationTimeSeries,
    larmor_doubled_freq,
    lorentzian_quadratures,
    photon_flux,
    rotation_from_csv,
    rotation_to_csv,
    shot_noise_angle_density,
    synthesize_rotation,
)


def complex_quadrature_oracle(delta, phi0, gamma_fwhm):
    """Independent route to the same quadratures: one complex Lorentzian.

    z = phi0 * (G/2) / (G/2 + i*delta) with G = 2*pi*gamma_fwhm packs the
    absorptive part into Re(z) and the dispersive part into Im(z).
    """
    hw = math.pi * gamma_fwhm
    z = phi0 * hw / (hw + 1j * np.asarray(delta, dtype=float))
    return z.real, z.imag


def resolved_field(b_field=7.6e-6, atom=None):
    return FieldConfig(b_field=b_field).resolve(atom or AtomConfig())


# ---------------------------------------------------------------------------
# Resonant frequency
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("b_field, expected_hz", [
    (7.6e-6, 70914.307579755),
    (75e-6, 699812.2458528453),
])
def test_larmor_doubled_freq_reference_points(b_field, expected_hz):
    freq = larmor_doubled_freq(b_field, AtomConfig())
    assert freq == pytest.approx(expected_hz, rel=1e-12)


def test_larmor_doubled_freq_scales_linearly():
    atom = AtomConfig()
    base = larmor_doubled_freq(1e-6, atom)
    assert larmor_doubled_freq(3e-6, atom) == pytest.approx(3 * base, rel=1e-12)
    heavier = AtomConfig(g_f=0.5)
    assert larmor_doubled_freq(1e-6, heavier) == pytest.approx(
        base * 0.5 / atom.g_f, rel=1e-12)


def test_larmor_doubled_freq_rejects_negative_field():
    with pytest.raises(ValueError, match="b_field"):
        larmor_doubled_freq(-1e-6, AtomConfig())


# ---------------------------------------------------------------------------
# Quadrature line shape
# ---------------------------------------------------------------------------

def test_quadratures_match_complex_oracle():
    res = ResonanceParams(phi0=2.5e-3, gamma_fwhm=60.0, center_freq=70914.3)
    delta = np.linspace(-8e3, 8e3, 401)
    phi_p, phi_q = lorentzian_quadratures(delta, res)
    want_p, want_q = complex_quadrature_oracle(delta, res.phi0, res.gamma_fwhm)
    np.testing.assert_allclose(phi_p, want_p, rtol=1e-12)
    np.testing.assert_allclose(phi_q, want_q, rtol=1e-12)


def test_quadratures_peak_and_half_width():
    res = ResonanceParams(phi0=1.7e-3, gamma_fwhm=42.0, center_freq=1e5)
    hw = math.pi * res.gamma_fwhm  # Gamma/2 in rad/s
    phi_p0, phi_q0 = lorentzian_quadratures(0.0, res)
    assert phi_p0 == pytest.approx(res.phi0, rel=1e-14)
    assert phi_q0 == 0.0
    # absorptive part reaches half its peak exactly one half-width out,
    # where the dispersive part has the same magnitude
    for sign in (+1.0, -1.0):
        phi_p, phi_q = lorentzian_quadratures(sign * hw, res)
        assert phi_p == pytest.approx(0.5 * res.phi0, rel=1e-12)
        assert phi_q == pytest.approx(-sign * 0.5 * res.phi0, rel=1e-12)


def test_quadratures_scalar_and_array_forms():
    res = ResonanceParams(phi0=1e-3, gamma_fwhm=60.0, center_freq=7e4)
    p, q = lorentzian_quadratures(120.0, res)
    assert isinstance(p, float) and isinstance(q, float)
    parr, qarr = lorentzian_quadratures(np.array([120.0, -120.0]), res)
    assert parr.shape == (2,) and qarr.shape == (2,)
    assert parr[0] == pytest.approx(p) and qarr[0] == pytest.approx(q)


@given(
    phi0=st.floats(1e-6, 1.0),
    gamma=st.floats(1e-2, 1e5),
    delta=st.floats(-1e7, 1e7),
)
def test_quadrature_symmetry_and_circle_identity(phi0, gamma, delta):
    res = ResonanceParams(phi0=phi0, gamma_fwhm=gamma, center_freq=1e5)
    phi_p, phi_q = lorentzian_quadratures(delta, res)
    mirror_p, mirror_q = lorentzian_quadratures(-delta, res)
    assert mirror_p == pytest.approx(phi_p, rel=1e-12, abs=1e-300)
    assert mirror_q == pytest.approx(-phi_q, rel=1e-12, abs=1e-300)
    # both quadratures lie on a circle through the origin with diameter phi0
    assert phi_p ** 2 + phi_q ** 2 == pytest.approx(
        phi0 * phi_p, rel=1e-10, abs=1e-300)
    assert 0.0 < phi_p <= phi0 * (1 + 1e-12)


@pytest.mark.parametrize("bad", [
    ResonanceParams(phi0=-1e-3, gamma_fwhm=60.0, center_freq=1e5),
    ResonanceParams(phi0=1e-3, gamma_fwhm=0.0, center_freq=1e5),
    ResonanceParams(phi0=1e-3, gamma_fwhm=60.0, center_freq=-1.0),
])
def test_quadratures_reject_bad_parameters(bad):
    with pytest.raises(ValueError):
        lorentzian_quadratures(0.0, bad)


# ---------------------------------------------------------------------------
# Photon flux and shot-noise density
# ---------------------------------------------------------------------------

def test_photon_flux_reference_point():
    assert photon_flux(80.5e-6, 795e-9) == pytest.approx(
        322170875031314.56, rel=1e-12)


def test_photon_flux_linear_in_power_and_wavelength():
    base = photon_flux(1e-6, 795e-9)
    assert photon_flux(5e-6, 795e-9) == pytest.approx(5 * base, rel=1e-12)
    assert photon_flux(1e-6, 1590e-9) == pytest.approx(2 * base, rel=1e-12)
    assert photon_flux(0.0, 795e-9) == 0.0


@pytest.mark.parametrize("power, wavelength", [(-1e-6, 795e-9), (1e-6, 0.0)])
def test_photon_flux_rejects_bad_inputs(power, wavelength):
    with pytest.raises(ValueError):
        photon_flux(power, wavelength)


def test_shot_noise_density_reference_point():
    flux = photon_flux(80.5e-6, 795e-9)
    assert math.sqrt(shot_noise_angle_density(flux)) == pytest.approx(
        3.939506885109299e-08, rel=1e-12)


def test_shot_noise_density_inverse_in_flux():
    assert shot_noise_angle_density(2e14) == pytest.approx(
        0.5 * shot_noise_angle_density(1e14), rel=1e-12)
    with pytest.raises(ValueError):
        shot_noise_angle_density(0.0)


# ---------------------------------------------------------------------------
# Time-series synthesis
# ---------------------------------------------------------------------------

def quick_field(mod_freq=1000.0, delta=0.0):
    """Pre-resolved field for cheap low-rate synthesis tests."""
    return FieldConfig(b_field=None, modulation_freq=mod_freq,
                       detuning_delta=delta)


def test_synthesize_deterministic_part_on_resonance():
    res = ResonanceParams(phi0=2.5e-3, gamma_fwhm=60.0, center_freq=1000.0)
    ts = synthesize_rotation(res, quick_field(), duration=0.5,
                             sample_rate=8000.0, power=1e-4, shot_noise=False)
    t = np.arange(ts.samples.size) / ts.sample_rate
    np.testing.assert_allclose(
        ts.samples, res.phi0 * np.cos(2 * np.pi * 1000.0 * t), rtol=0, atol=1e-15)
    assert np.all(ts.noise_samples == 0.0)


def test_synthesize_deterministic_part_detuned():
    res = ResonanceParams(phi0=2.5e-3, gamma_fwhm=60.0, center_freq=1000.0)
    delta = 2 * np.pi * 30.0
    ts = synthesize_rotation(res, quick_field(delta=delta), duration=0.25,
                             sample_rate=8000.0, power=1e-4, shot_noise=False)
    phi_p, phi_q = lorentzian_quadratures(delta, res)
    t = np.arange(ts.samples.size) / ts.sample_rate
    expected = (phi_p * np.cos(2 * np.pi * 1000.0 * t)
                + phi_q * np.sin(2 * np.pi * 1000.0 * t))
    np.testing.assert_allclose(ts.samples, expected, rtol=0, atol=1e-15)


def test_synthesize_is_seed_deterministic():
    res = ResonanceParams(phi0=1e-3, gamma_fwhm=60.0, center_freq=1000.0)
    kwargs = dict(duration=0.1, sample_rate=8000.0, power=1e-4)
    a = synthesize_rotation(res, quick_field(), rng_seed=42, **kwargs)
    b = synthesize_rotation(res, quick_field(), rng_seed=42, **kwargs)
    c = synthesize_rotation(res, quick_field(), rng_seed=43, **kwargs)
    np.testing.assert_array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_synthesize_sample_count_and_metadata():
    res = ResonanceParams(phi0=1e-3, gamma_fwhm=60.0, center_freq=1000.0)
    ts = synthesize_rotation(res, quick_field(), duration=0.123,
                             sample_rate=8000.0, power=2e-6, rng_seed=7)
    assert ts.samples.size == round(0.123 * 8000.0)
    assert ts.mean_optical_power == 2e-6
    assert ts.photon_flux == pytest.approx(photon_flux(2e-6, 795e-9))
    assert ts.modulation_freq == 1000.0
    assert ts.rng_seed == 7
    assert ts.duration == pytest.approx(ts.samples.size / 8000.0)
    np.testing.assert_allclose(
        ts.samples - ts.noise_samples,
        synthesize_rotation(res, quick_field(), duration=0.123,
                            sample_rate=8000.0, power=2e-6,
                            shot_noise=False).samples,
        rtol=0, atol=1e-15)


def test_synthesize_noise_variance_matches_density():
    # per-sample variance of white noise with one-sided PSD S is S * fs / 2
    res = ResonanceParams(phi0=0.0, gamma_fwhm=60.0, center_freq=1000.0)
    fs, duration, power = 8000.0, 16.0, 80.5e-6
    ts = synthesize_rotation(res, quick_field(), duration=duration,
                             sample_rate=fs, power=power, rng_seed=11)
    s_phi = shot_noise_angle_density(photon_flux(power, 795e-9))
    expected_var = s_phi * fs / 2.0
    n = ts.noise_samples.size
    assert np.var(ts.noise_samples) == pytest.approx(
        expected_var, rel=6.0 * math.sqrt(2.0 / n))
    assert np.mean(ts.noise_samples) == pytest.approx(
        0.0, abs=6.0 * math.sqrt(expected_var / n))


def test_synthesize_noise_psd_is_flat_at_shot_level():
    from scipy.signal import periodogram

    res = ResonanceParams(phi0=0.0, gamma_fwhm=60.0, center_freq=1000.0)
    fs, power = 8000.0, 50e-6
    ts = synthesize_rotation(res, quick_field(), duration=8.0,
                             sample_rate=fs, power=power, rng_seed=3)
    freqs, psd = periodogram(ts.noise_samples, fs=fs, window="boxcar",
                             detrend=False)
    s_phi = shot_noise_angle_density(photon_flux(power, 795e-9))
    # averaging the raw periodogram over all interior bins beats down the
    # chi-squared scatter to well under a percent
    assert np.mean(psd[1:-1]) == pytest.approx(s_phi, rel=0.05)
    lo = np.mean(psd[(freqs > 100) & (freqs < 1900)])
    hi = np.mean(psd[(freqs > 2100) & (freqs < 3900)])
    assert lo == pytest.approx(hi, rel=0.1)


def test_synthesize_zero_power_is_silent():
    res = ResonanceParams(phi0=1e-3, gamma_fwhm=60.0, center_freq=1000.0)
    ts = synthesize_rotation(res, quick_field(), duration=0.1,
                             sample_rate=8000.0, power=0.0, rng_seed=1)
    assert ts.photon_flux == 0.0
    assert np.all(ts.noise_samples == 0.0)


def test_synthesize_requires_resolved_field():
    res = ResonanceParams(phi0=1e-3, gamma_fwhm=60.0, center_freq=1000.0)
    with pytest.raises(ConfigError, match="resolve"):
        synthesize_rotation(res, FieldConfig(b_field=7.6e-6), duration=0.1,
                            sample_rate=320e3, power=1e-4)


@pytest.mark.parametrize("duration, sample_rate", [
    (0.1, 3900.0),   # below the 4x modulation-frequency guard
    (0.0, 8000.0),
    (1e-4, 8000.0),  # fewer than 2 samples
])
def test_synthesize_rejects_bad_timing(duration, sample_rate):
    res = ResonanceParams(phi0=1e-3, gamma_fwhm=60.0, center_freq=1000.0)
    with pytest.raises(ValueError):
        synthesize_rotation(res, quick_field(), duration=duration,
                            sample_rate=sample_rate, power=1e-4)


def test_rotation_series_nyquist_guard():
    with pytest.raises(ValueError, match="Nyquist"):
        RotationTimeSeries(samples=np.zeros(10), sample_rate=1000.0,
                           mean_optical_power=1e-6, photon_flux=1e12,
                           modulation_freq=600.0)


def test_rotation_series_shape_mismatch():
    with pytest.raises(ValueError, match="shape"):
        RotationTimeSeries(samples=np.zeros(10), sample_rate=1000.0,
                           mean_optical_power=1e-6, photon_flux=1e12,
                           noise_samples=np.zeros(9))


# ---------------------------------------------------------------------------
# CSV round-trip
# ---------------------------------------------------------------------------

def test_rotation_csv_round_trip(tmp_path):
    res = ResonanceParams(phi0=2.5e-3, gamma_fwhm=60.0, center_freq=1000.0)
    ts = synthesize_rotation(res, quick_field(), duration=0.05,
                             sample_rate=8000.0, power=80.5e-6, rng_seed=9)
    path = tmp_path / "rotation.csv"
    rotation_to_csv(ts, path)
    back = rotation_from_csv(path)
    np.testing.assert_array_equal(back.samples, ts.samples)
    assert back.sample_rate == ts.sample_rate
    assert back.mean_optical_power == ts.mean_optical_power
    assert back.photon_flux == ts.photon_flux
    assert back.modulation_freq == ts.modulation_freq
    assert back.rng_seed == 9
    # the file stores only the total signal; the noise split is not persisted
    assert np.all(back.noise_samples == 0.0)


def test_rotation_csv_none_modulation(tmp_path):
    ts = RotationTimeSeries(samples=np.array([1e-3, -1e-3]), sample_rate=100.0,
                            mean_optical_power=1e-6, photon_flux=4e12)
    path = tmp_path / "bare.csv"
    rotation_to_csv(ts, path)
    back = rotation_from_csv(path)
    assert back.modulation_freq is None
    np.testing.assert_array_equal(back.samples, ts.samples)
