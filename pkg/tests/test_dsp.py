"""Window, filter design, mixer, and decimator tests."""

import numpy as np
import pytest
from scipy.signal import lfilter

from sdrtrx.dsp import (
    Decimator,
    FilterSpec,
    FirFilter,
    WindowKind,
    design_lowpass,
    mix,
    window,
)
from sdrtrx.iqio import IqBlock


def measured_peak_sidelobe_db(w: np.ndarray, pad: int = 1 << 20) -> float:
    """Oracle: zero-padded FFT, skip the main lobe, return the max beyond."""
    spec = np.abs(np.fft.rfft(w, pad))
    mag = 20.0 * np.log10(np.maximum(spec / spec[0], 1e-300))
    i = 1
    while i < len(mag) - 1 and not (mag[i] < mag[i - 1] and mag[i] <= mag[i + 1]):
        i += 1
    return float(mag[i:].max())


class TestWindows:
    @pytest.mark.parametrize("kind", list(WindowKind))
    def test_symmetry(self, kind):
        w = window(kind, 257)
        np.testing.assert_allclose(w, w[::-1], atol=1e-15)

    def test_blackman_center_is_one(self):
        w = window(WindowKind.BLACKMAN, 101)
        assert w[50] == pytest.approx(1.0, abs=1e-12)

    def test_bh4_center_is_one(self):
        w = window(WindowKind.BLACKMAN_HARRIS_4, 101)
        assert w[50] == pytest.approx(1.0, abs=1e-12)

    def test_blackman_endpoint_zero(self):
        w = window(WindowKind.BLACKMAN, 65)
        assert abs(w[0]) <= 1e-12

    def test_bh4_endpoint(self):
        w = window(WindowKind.BLACKMAN_HARRIS_4, 65)
        assert w[0] == pytest.approx(6.0e-5, abs=1e-9)

    @pytest.mark.parametrize(
        "kind,limit_db",
        [
            (WindowKind.BLACKMAN, -57.0),
            (WindowKind.BLACKMAN_HARRIS_4, -90.0),
            (WindowKind.BLACKMAN_HARRIS_7, -150.0),
        ],
    )
    def test_peak_sidelobes(self, kind, limit_db):
        assert measured_peak_sidelobe_db(window(kind, 1025)) <= limit_db

    def test_minimum_length(self):
        with pytest.raises(ValueError):
            window(WindowKind.BLACKMAN, 1)


class TestDesignLowpass:
    def test_unit_dc_gain(self):
        taps = design_lowpass(FilterSpec(order=100, cutoff_hz=1000.0), 48000.0)
        assert np.sum(taps) == pytest.approx(1.0, abs=1e-9)

    def test_symmetric_linear_phase(self):
        taps = design_lowpass(FilterSpec(order=144, cutoff_hz=2000.0), 48000.0)
        np.testing.assert_allclose(taps, taps[::-1], atol=1e-15)

    def test_frequency_response(self):
        # oracle: evaluate the tap FFT at the band edges
        fs = 8.0
        spec = FilterSpec(order=200, cutoff_hz=1.0, window=WindowKind.BLACKMAN_HARRIS_4)
        taps = design_lowpass(spec, fs)
        n = 1 << 16
        resp = np.abs(np.fft.rfft(taps, n))
        freqs = np.fft.rfftfreq(n, 1.0 / fs)
        passband = resp[np.argmin(np.abs(freqs - 0.9 * spec.cutoff_hz))]
        stopband = resp[freqs >= 2.0 * spec.cutoff_hz].max()
        assert abs(20 * np.log10(passband)) <= 0.5
        assert 20 * np.log10(stopband) <= -60.0

    def test_cutoff_at_nyquist_rejected(self):
        with pytest.raises(ValueError, match="Nyquist"):
            design_lowpass(FilterSpec(order=64, cutoff_hz=24000.0), 48000.0)


class TestFirFilter:
    def test_impulse_response_is_taps(self):
        taps = design_lowpass(FilterSpec(order=32, cutoff_hz=1000.0), 48000.0)
        f = FirFilter(taps)
        x = np.zeros(64, dtype=complex)
        x[0] = 1.0
        np.testing.assert_allclose(f.process(x)[:33], taps, atol=1e-15)

    def test_dc_gain(self):
        taps = design_lowpass(FilterSpec(order=64, cutoff_hz=1000.0), 48000.0)
        f = FirFilter(taps)
        y = f.process(np.ones(512, dtype=complex))
        assert abs(y[-1] - 1.0) <= 1e-6

    def test_split_equals_whole(self, rng):
        taps = design_lowpass(FilterSpec(order=100, cutoff_hz=4000.0), 48000.0)
        x = rng.normal(size=2048) + 1j * rng.normal(size=2048)
        whole = FirFilter(taps).process(x)
        f = FirFilter(taps)
        split = np.concatenate([f.process(x[:700]), f.process(x[700:701]), f.process(x[701:])])
        assert np.max(np.abs(whole - split)) <= 1e-12


class TestMix:
    def _block(self, x, fs=2.4e6, start=0):
        return IqBlock(samples=x, sample_rate_hz=fs, start_index=start)

    def test_tone_lands_at_dc(self):
        fs = 96000.0
        k = np.arange(8192)
        x = np.exp(2j * np.pi * 10000.0 * k / fs)
        y = mix(self._block(x, fs), 10000.0).samples
        spec = np.abs(np.fft.fft(y))
        assert np.argmax(spec) == 0

    def test_magnitude_preserved(self, rng):
        x = rng.normal(size=1024) + 1j * rng.normal(size=1024)
        y = mix(self._block(x), 977.5).samples
        np.testing.assert_allclose(np.abs(y), np.abs(x), rtol=1e-12)

    def test_energy_preserved(self, rng):
        x = rng.normal(size=4096) + 1j * rng.normal(size=4096)
        y = mix(self._block(x), 12500.0).samples
        assert np.sum(np.abs(y) ** 2) == pytest.approx(np.sum(np.abs(x) ** 2), rel=1e-12)

    def test_composition(self, rng):
        x = rng.normal(size=8192) + 1j * rng.normal(size=8192)
        blk = self._block(x, start=54321)
        a = mix(mix(blk, 10000.0), 2500.0).samples
        b = mix(blk, 12500.0).samples
        rms = np.sqrt(np.mean(np.abs(a - b) ** 2))
        assert rms <= 1e-9

    def test_inverse(self, rng):
        x = rng.normal(size=8192) + 1j * rng.normal(size=8192)
        blk = self._block(x)
        back = mix(mix(blk, 31250.0), -31250.0).samples
        assert np.sqrt(np.mean(np.abs(back - x) ** 2)) <= 1e-9

    def test_phase_continuity_across_blocks(self):
        fs = 2.4e6
        shift = 12500.0
        x = np.ones(20000, dtype=complex)
        whole = mix(self._block(x, fs), shift).samples
        parts = [
            mix(self._block(x[:7000], fs, start=0), shift).samples,
            mix(self._block(x[7000:13000], fs, start=7000), shift).samples,
            mix(self._block(x[13000:], fs, start=13000), shift).samples,
        ]
        np.testing.assert_allclose(np.concatenate(parts), whole, atol=1e-12)

    def test_irrational_ratio_fallback(self):
        x = np.ones(4096, dtype=complex)
        y = mix(self._block(x, 48000.0), np.pi * 1000).samples
        np.testing.assert_allclose(np.abs(y), 1.0, rtol=1e-12)

    def test_out_of_range_shift(self):
        with pytest.raises(ValueError, match="out of range"):
            mix(self._block(np.ones(4, complex), 48000.0), 24000.0)


class TestDecimator:
    def test_factor_one_equals_fir(self, rng):
        taps = design_lowpass(FilterSpec(order=48, cutoff_hz=6000.0), 48000.0)
        x = rng.normal(size=1000) + 1j * rng.normal(size=1000)
        a = Decimator(taps, 1).process_array(x)
        b = FirFilter(taps).process(x)
        assert np.max(np.abs(a - b)) <= 1e-12

    def test_output_length(self):
        taps = design_lowpass(FilterSpec(order=100, cutoff_hz=100e3), 2.4e6)
        d = Decimator(taps, 4)
        out = d.process_array(np.ones(65536, dtype=complex))
        assert len(out) == 16384

    @pytest.mark.parametrize("factor", [2, 3, 5, 10])
    def test_polyphase_matches_naive_reference(self, factor, rng):
        # oracle: full-rate filtering then downsampling
        taps = design_lowpass(FilterSpec(order=120, cutoff_hz=0.04), 1.0)
        x = rng.normal(size=10007) + 1j * rng.normal(size=10007)
        ref = lfilter(taps, 1.0, x)[::factor]
        out = Decimator(taps, factor).process_array(x)
        assert len(out) == len(ref)
        assert np.sqrt(np.mean(np.abs(out - ref) ** 2)) <= 1e-9

    def test_split_invariance_preserves_count(self, rng):
        taps = design_lowpass(FilterSpec(order=90, cutoff_hz=0.03), 1.0)
        x = rng.normal(size=5000) + 1j * rng.normal(size=5000)
        whole = Decimator(taps, 7).process_array(x)
        d = Decimator(taps, 7)
        pieces = [d.process_array(c) for c in np.array_split(x, 13)]
        split = np.concatenate(pieces)
        assert len(split) == len(whole)
        assert np.max(np.abs(split - whole)) <= 1e-12

    def test_block_rate_metadata(self):
        taps = design_lowpass(FilterSpec(order=40, cutoff_hz=0.04), 1.0)
        d = Decimator(taps, 4)
        blk = IqBlock(samples=np.ones(100, complex), sample_rate_hz=96000.0, start_index=0)
        out = d.process(blk)
        assert out.sample_rate_hz == 24000.0
        assert out.start_index == 0
        out2 = d.process(blk)
        assert out2.start_index == len(out)

    def test_zero_factor_rejected(self):
        with pytest.raises(ValueError):
            Decimator(np.ones(3), 0)
