"""Transmit-side waveform generation.

Complex-baseband modulators mirror the demodulators (the loopback oracle
for the whole receive chain), and `GpioFmTransmitter` models the
clock-pin FM transmitter: a two-level +/-1 waveform whose instantaneous
frequency is carrier + deviation * audio, i.e. the sign of the phase
accumulator's sine.  The square wave costs odd harmonics (third at
-9.5 dB), which the tests measure.

Modulators are streaming: feed audio in chunks, get phase-continuous
I/Q out.  Audio at a different rate (WAV files at 48 kHz) is linearly
interpolated up to the output sample rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .demod import DemodMode
from .dsp import FilterSpec, FirFilter, WindowKind, design_lowpass, mix
from .errors import ConfigError
from .iqio import AUDIO_RATE_HZ, IqBlock


@dataclass(frozen=True)
class TxConfig:
    """Transmit parameters.

    carrier_hz is the offset within the output baseband for the complex
    modulators, and the actual two-level clock frequency for the GPIO
    model.  depth is the AM modulation index in (0, 1].
    """

    mode: DemodMode
    sample_rate_hz: float
    carrier_hz: float = 0.0
    deviation_hz: float = 2500.0
    am_depth: float = 0.5

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ConfigError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if self.mode in (DemodMode.NFM, DemodMode.WFM):
            if not (0 < self.deviation_hz < self.sample_rate_hz / 2):
                raise ValueError(
                    f"deviation {self.deviation_hz:g} Hz must be in (0, Nyquist) "
                    f"for fs {self.sample_rate_hz:g} Hz"
                )
        if self.mode is DemodMode.AM and not (0 < self.am_depth <= 1):
            raise ValueError(f"am_depth must be in (0, 1], got {self.am_depth}")


class _AudioUpsampler:
    """Linear interpolation from the audio rate to the I/Q rate."""

    def __init__(self, audio_rate_hz: float, out_rate_hz: float):
        self.ratio = out_rate_hz / audio_rate_hz
        if self.ratio < 1 or abs(self.ratio - round(self.ratio)) > 1e-9:
            raise ConfigError(
                f"output rate {out_rate_hz:g} must be an integer multiple of "
                f"audio rate {audio_rate_hz:g}"
            )
        self.ratio = int(round(self.ratio))
        self._last = 0.0

    def process(self, audio: np.ndarray) -> np.ndarray:
        if self.ratio == 1:
            return np.asarray(audio, dtype=np.float64)
        if len(audio) == 0:
            return np.zeros(0)
        knots = np.concatenate([[self._last], np.asarray(audio, dtype=np.float64)])
        self._last = float(audio[-1])
        # one audio sample of latency so every input lands exactly on the
        # output grid (integer delay keeps downstream alignment clean)
        pos = np.arange(0, len(audio) * self.ratio, dtype=np.float64) / self.ratio
        return np.interp(pos, np.arange(len(knots), dtype=np.float64), knots)


class Modulator:
    """Base streaming modulator producing IqBlocks at config.sample_rate_hz."""

    def __init__(self, config: TxConfig, audio_rate_hz: float = AUDIO_RATE_HZ):
        self.config = config
        self._up = _AudioUpsampler(audio_rate_hz, config.sample_rate_hz)
        self._index = 0

    def process(self, audio: np.ndarray) -> IqBlock:
        a = np.clip(self._up.process(audio), -1.0, 1.0)
        z = self._synthesize(a)
        block = IqBlock(
            samples=z,
            sample_rate_hz=self.config.sample_rate_hz,
            center_hz=0.0,
            start_index=self._index,
        )
        self._index += len(z)
        return block

    def _synthesize(self, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class FmModulator(Modulator):
    """Phase-accumulator FM: unit-magnitude exp(j phi)."""

    def __init__(self, config: TxConfig, audio_rate_hz: float = AUDIO_RATE_HZ):
        super().__init__(config, audio_rate_hz)
        self._phase = 0.0  # cycles, kept in [0, 1)

    def _synthesize(self, a: np.ndarray) -> np.ndarray:
        if len(a) == 0:
            return np.zeros(0, dtype=np.complex128)
        fs = self.config.sample_rate_hz
        inst = (self.config.carrier_hz + self.config.deviation_hz * a) / fs
        phases = (self._phase + np.cumsum(inst)) % 1.0
        # output sample k uses the phase *before* the k-th increment
        current = np.concatenate([[self._phase], phases[:-1]])
        self._phase = float(phases[-1])
        return np.exp(2j * np.pi * current)


class AmModulator(Modulator):
    def _synthesize(self, a: np.ndarray) -> np.ndarray:
        env = 1.0 + self.config.am_depth * a
        return self._carrier(env)

    def _carrier(self, env: np.ndarray) -> np.ndarray:
        f = self.config.carrier_hz
        if f == 0.0:
            return env.astype(np.complex128)
        base = IqBlock(
            samples=env.astype(np.complex128),
            sample_rate_hz=self.config.sample_rate_hz,
            start_index=self._index,
        )
        return mix(base, -f).samples


class DsbModulator(AmModulator):
    def _synthesize(self, a: np.ndarray) -> np.ndarray:
        return self._carrier(a.astype(np.float64))


class SsbModulator(Modulator):
    """Single sideband: DSB -> mix -> low-pass -> mix-back, scaled by 2.

    The factor 2 restores the tone amplitude lost to discarding one
    sideband, so a unit tone modulates to a unit-power complex line.
    """

    def __init__(self, config: TxConfig, audio_rate_hz: float = AUDIO_RATE_HZ,
                 audio_bandwidth_hz: float = 5000.0):
        super().__init__(config, audio_rate_hz)
        self._upper = config.mode is DemodMode.SSB_USB
        fs = config.sample_rate_hz
        self._half = audio_bandwidth_hz / 2.0
        transition = max(200.0, audio_bandwidth_hz * 0.08)
        order = int(min(np.ceil(8.0 * fs / transition), 6000))
        self._select = FirFilter(
            design_lowpass(FilterSpec(order=order, cutoff_hz=self._half + transition / 2), fs)
        )

    def _synthesize(self, a: np.ndarray) -> np.ndarray:
        dsb = IqBlock(
            samples=a.astype(np.complex128),
            sample_rate_hz=self.config.sample_rate_hz,
            start_index=self._index,
        )
        shift = self._half if self._upper else -self._half
        centered = mix(dsb, shift)
        filtered = IqBlock(
            samples=self._select.process(centered.samples),
            sample_rate_hz=centered.sample_rate_hz,
            start_index=centered.start_index,
        )
        out = 2.0 * mix(filtered, -shift).samples
        if self.config.carrier_hz:
            carrier = IqBlock(
                samples=out,
                sample_rate_hz=self.config.sample_rate_hz,
                start_index=self._index,
            )
            out = mix(carrier, -self.config.carrier_hz).samples
        return out


class GpioFmTransmitter:
    """Two-level clock-pin FM model: sign of the accumulator's sine.

    Output samples are exactly -1 or +1; instantaneous frequency is
    carrier_hz + deviation_hz * audio.  carrier_hz must leave at least
    8 samples per cycle so the square wave is representable.
    """

    def __init__(self, config: TxConfig, audio_rate_hz: float = AUDIO_RATE_HZ):
        if config.carrier_hz > config.sample_rate_hz / 8:
            raise ValueError(
                f"carrier {config.carrier_hz:g} Hz too high for fs "
                f"{config.sample_rate_hz:g} Hz (limit fs/8)"
            )
        if config.carrier_hz <= 0:
            raise ValueError("GPIO model needs a positive carrier frequency")
        self.config = config
        self._up = _AudioUpsampler(audio_rate_hz, config.sample_rate_hz)
        self._phase = 0.0

    def process(self, audio: np.ndarray) -> np.ndarray:
        a = np.clip(self._up.process(audio), -1.0, 1.0)
        fs = self.config.sample_rate_hz
        inst = (self.config.carrier_hz + self.config.deviation_hz * a) / fs
        phases = (self._phase + np.cumsum(inst)) % 1.0
        current = np.concatenate([[self._phase], phases[:-1]]) if len(a) else phases
        if len(phases):
            self._phase = float(phases[-1])
        # sin(2 pi phase) >= 0 -> +1, else -1; exact two-level output
        return np.where(current % 1.0 < 0.5, 1.0, -1.0)


_MOD_CLASSES = {
    DemodMode.AM: AmModulator,
    DemodMode.DSB: DsbModulator,
    DemodMode.SSB_USB: SsbModulator,
    DemodMode.SSB_LSB: SsbModulator,
    DemodMode.NFM: FmModulator,
    DemodMode.WFM: FmModulator,
}


def make_modulator(
    config: TxConfig, audio_rate_hz: float = AUDIO_RATE_HZ
) -> Modulator:
    """Build the complex-baseband modulator matching config.mode."""
    return _MOD_CLASSES[config.mode](config, audio_rate_hz)
