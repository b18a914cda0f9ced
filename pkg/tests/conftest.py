"""Shared test helpers."""

import numpy as np
import pytest


def band_noise(n: int, rate: float, lo: float = 300.0, hi: float = 3000.0, seed: int = 0,
               peak: float = 0.7) -> np.ndarray:
    """Band-limited Gaussian noise, peak-normalized; the standard test audio."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    spec = np.fft.rfft(x)
    f = np.fft.rfftfreq(n, 1.0 / rate)
    spec[(f < lo) | (f > hi)] = 0.0
    y = np.fft.irfft(spec, n)
    return peak * y / np.max(np.abs(y))


def tone(n: int, rate: float, freq: float, amplitude: float = 0.8) -> np.ndarray:
    k = np.arange(n, dtype=np.float64)
    return amplitude * np.sin(2.0 * np.pi * freq * k / rate)


def dominant_frequency(x: np.ndarray, rate: float, above_hz: float = 50.0) -> float:
    """Frequency of the strongest spectral line (Hann-windowed FFT)."""
    x = np.asarray(x, dtype=np.float64)
    x = x - np.mean(x)
    spec = np.abs(np.fft.rfft(x * np.hanning(len(x))))
    freqs = np.fft.rfftfreq(len(x), 1.0 / rate)
    sel = freqs >= above_hz
    return float(freqs[sel][np.argmax(spec[sel])])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
