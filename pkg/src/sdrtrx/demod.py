"""Demodulators: complex baseband in, 48 kHz mono audio out.

Every demodulator is a streaming object: feed it IqBlocks of any size and
it produces the same audio as it would for the whole stream at once.  The
input must already be tuned (signal centered at 0 Hz) and its sample rate
must be an integer multiple of 48 kHz; the front-end decimator in the
session chain is responsible for arranging that.

Detection strategies:
  FM   - quadrature discriminator arg(z[k] conj(z[k-1])), scaled so that a
         tone at +deviation reads 1.0; WFM then applies single-pole
         de-emphasis; audio low-pass and resampling happen in one
         polyphase decimation.
  AM   - envelope |z| with a running-mean DC estimate subtracted.
  DSB  - product detection Re(z) with DC removal (assumes exact tuning).
  SSB  - sideband selection by mix -> low-pass -> mix-back, then Re(z).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .dsp import Decimator, FilterSpec, FirFilter, SinglePoleLowpass, WindowKind, design_lowpass, mix
from .errors import ConfigError
from .iqio import AUDIO_RATE_HZ, AudioBlock, IqBlock


class DemodMode(Enum):
    AM = "AM"
    DSB = "DSB"
    SSB_USB = "SSB_USB"
    SSB_LSB = "SSB_LSB"
    NFM = "NFM"
    WFM = "WFM"

    @classmethod
    def parse(cls, text: str) -> "DemodMode":
        key = text.strip().upper().replace("-", "_")
        aliases = {"USB": "SSB_USB", "LSB": "SSB_LSB", "FM": "NFM"}
        key = aliases.get(key, key)
        try:
            return cls[key]
        except KeyError:
            raise ConfigError(
                f"unknown mode {text!r}; choose one of {[m.value for m in cls]}"
            ) from None


DEFAULT_DEVIATION_HZ = {DemodMode.NFM: 2500.0, DemodMode.WFM: 75000.0}
DEFAULT_AUDIO_CUTOFF_HZ = {DemodMode.WFM: 15000.0}
FALLBACK_AUDIO_CUTOFF_HZ = 5000.0

# Hard ceiling for the audio band: must stay below the 48 kHz Nyquist with
# room for the anti-alias transition.
MAX_AUDIO_CUTOFF_HZ = 21000.0

# Output amplitude ceiling; keeps noise-driven excursions bounded without
# shaving normal program material.
AUDIO_CLIP = 1.0


@dataclass(frozen=True)
class DemodConfig:
    """Demodulator parameters; None fields resolve to per-mode defaults.

    dc_window_s sets the running-mean window for AM/DSB DC removal; the
    default (0.1 s) is ten periods of a 100 Hz lowest audio component.
    """

    mode: DemodMode
    deviation_hz: float | None = None
    deemphasis_us: float = 50.0
    audio_cutoff_hz: float | None = None
    dc_window_s: float = 0.1

    def resolved(self) -> "DemodConfig":
        dev = self.deviation_hz
        if dev is None:
            dev = DEFAULT_DEVIATION_HZ.get(self.mode)
        cutoff = self.audio_cutoff_hz
        if cutoff is None:
            cutoff = DEFAULT_AUDIO_CUTOFF_HZ.get(self.mode, FALLBACK_AUDIO_CUTOFF_HZ)
        if self.mode in (DemodMode.NFM, DemodMode.WFM) and (dev is None or dev <= 0):
            raise ConfigError("FM modes need a positive deviation_hz")
        return replace(self, deviation_hz=dev, audio_cutoff_hz=cutoff)

    @property
    def effective_cutoff_hz(self) -> float:
        assert self.audio_cutoff_hz is not None
        return min(self.audio_cutoff_hz, MAX_AUDIO_CUTOFF_HZ)


def _decimator_for(
    fs: float, out_rate: float, passband_hz: float, upstream_delay: int = 0
) -> Decimator:
    """Polyphase decimator whose anti-alias filter is flat to passband_hz.

    The design cutoff sits at the middle of passband_hz .. output Nyquist
    and the order is sized so the whole transition fits in that gap: flat
    audio below the cutoff, aliases suppressed above it.

    upstream_delay is the detector's own delay in input samples (the FM
    discriminator lags one sample); the order is nudged so the total group
    delay lands on an integer number of *output* samples, keeping every
    chain free of fractional-sample skew.
    """
    factor = int(round(fs / out_rate))
    if factor < 1 or abs(fs - factor * out_rate) > 1e-6:
        raise ConfigError(
            f"sample rate {fs:g} is not an integer multiple of {out_rate:g}; "
            "decimate the stream to a multiple first"
        )
    transition = out_rate / 2 - passband_hz
    if transition <= 0:
        raise ConfigError(f"passband {passband_hz:g} Hz does not fit below {out_rate / 2:g} Hz")
    order = int(min(max(64, np.ceil(8.0 * fs / transition)), 6000))
    while order % 2 or (order // 2 + upstream_delay) % factor:
        order += 1
    taps = design_lowpass(
        FilterSpec(
            order=order,
            cutoff_hz=passband_hz + transition / 2,
            window=WindowKind.BLACKMAN_HARRIS_4,
        ),
        fs,
    )
    return Decimator(taps, factor)


def _audio_lowpass(cutoff_hz: float) -> FirFilter:
    """Audio-band selectivity FIR at 48 kHz, flat to cutoff_hz."""
    transition = min(max(0.2 * cutoff_hz, 300.0), AUDIO_RATE_HZ / 2 - cutoff_hz - 50.0)
    if transition <= 0:
        raise ConfigError(f"audio cutoff {cutoff_hz:g} Hz leaves no transition band")
    order = int(np.ceil(8.0 * AUDIO_RATE_HZ / transition))
    order += order % 2
    taps = design_lowpass(
        FilterSpec(order=order, cutoff_hz=cutoff_hz + transition / 2), AUDIO_RATE_HZ
    )
    return FirFilter(taps)


class _DcRemover:
    """Running-mean DC estimate (one-pole) subtracted from the signal.

    Seeded from the first sample only: that keeps the output a pure
    function of the stream, so any block split produces identical audio.
    """

    def __init__(self, window_s: float, fs: float):
        self._lp = SinglePoleLowpass(window_s, fs)
        self._primed = False

    def process(self, x: np.ndarray) -> np.ndarray:
        if len(x) == 0:
            return x
        if not self._primed:
            self._lp.seed(float(np.real(x[0])))
            self._primed = True
        return x - self._lp.process(x)


class Demodulator:
    """Base streaming demodulator; subclasses implement _detect."""

    def __init__(self, config: DemodConfig, input_rate_hz: float):
        self.config = config.resolved()
        self.input_rate_hz = float(input_rate_hz)
        self.output_rate_hz = float(AUDIO_RATE_HZ)

    def process(self, block: IqBlock) -> AudioBlock:
        audio = self._detect(block)
        return AudioBlock(
            samples=np.clip(audio, -AUDIO_CLIP, AUDIO_CLIP), rate_hz=self.output_rate_hz
        )

    def _detect(self, block: IqBlock) -> np.ndarray:
        raise NotImplementedError


class FmDemodulator(Demodulator):
    def __init__(self, config: DemodConfig, input_rate_hz: float):
        super().__init__(config, input_rate_hz)
        cfg = self.config
        self._scale = input_rate_hz / (2.0 * np.pi * cfg.deviation_hz)
        self._prev = np.complex128(0.0)
        self._deemph = None
        if cfg.mode is DemodMode.WFM and cfg.deemphasis_us > 0:
            self._deemph = SinglePoleLowpass(cfg.deemphasis_us * 1e-6, input_rate_hz)
        self._resample = _decimator_for(
            input_rate_hz, AUDIO_RATE_HZ, cfg.effective_cutoff_hz, upstream_delay=1
        )
        self._post = _audio_lowpass(cfg.effective_cutoff_hz)

    def _detect(self, block: IqBlock) -> np.ndarray:
        z = block.samples
        if len(z) == 0:
            return np.zeros(0)
        delayed = np.concatenate([[self._prev], z[:-1]])
        self._prev = z[-1]
        y = np.angle(z * np.conj(delayed)) * self._scale
        if self._deemph is not None:
            y = self._deemph.process(y)
        return self._post.process(self._resample.process_array(y)).real


class AmDemodulator(Demodulator):
    def __init__(self, config: DemodConfig, input_rate_hz: float):
        super().__init__(config, input_rate_hz)
        cutoff = self.config.effective_cutoff_hz
        self._pre = _decimator_for(input_rate_hz, AUDIO_RATE_HZ, min(MAX_AUDIO_CUTOFF_HZ, cutoff * 2.2))
        self._dc = _DcRemover(self.config.dc_window_s, AUDIO_RATE_HZ)
        self._post = _audio_lowpass(cutoff)

    def _detect(self, block: IqBlock) -> np.ndarray:
        z = self._pre.process_array(block.samples)
        env = np.abs(z)
        return self._post.process(self._dc.process(env)).real


class DsbDemodulator(Demodulator):
    def __init__(self, config: DemodConfig, input_rate_hz: float):
        super().__init__(config, input_rate_hz)
        cutoff = self.config.effective_cutoff_hz
        self._pre = _decimator_for(input_rate_hz, AUDIO_RATE_HZ, min(MAX_AUDIO_CUTOFF_HZ, cutoff * 2.2))
        self._dc = _DcRemover(self.config.dc_window_s, AUDIO_RATE_HZ)
        self._post = _audio_lowpass(cutoff)

    def _detect(self, block: IqBlock) -> np.ndarray:
        z = self._pre.process_array(block.samples)
        return self._post.process(self._dc.process(z.real)).real


class SsbDemodulator(Demodulator):
    """Selects one sideband of the tuned signal and product-detects it.

    The selection is mix(-/+B/2) -> low-pass(B/2) -> mix(+/-B/2): USB keeps
    [0, B], LSB keeps [-B, 0].  The low-pass transition is kept narrow so
    the opposite sideband leaks at well under -30 dB.
    """

    def __init__(self, config: DemodConfig, input_rate_hz: float):
        super().__init__(config, input_rate_hz)
        cfg = self.config
        if cfg.mode not in (DemodMode.SSB_USB, DemodMode.SSB_LSB):
            raise ConfigError(f"SsbDemodulator cannot handle mode {cfg.mode}")
        self._upper = cfg.mode is DemodMode.SSB_USB
        cutoff = cfg.effective_cutoff_hz
        self._pre = _decimator_for(input_rate_hz, AUDIO_RATE_HZ, min(MAX_AUDIO_CUTOFF_HZ, cutoff * 2.2))
        self._half = cutoff / 2.0
        transition = max(200.0, cutoff * 0.08)
        order = int(min(np.ceil(8.0 * AUDIO_RATE_HZ / transition), 4000))
        self._select = FirFilter(
            design_lowpass(FilterSpec(order=order, cutoff_hz=self._half + transition / 2), AUDIO_RATE_HZ)
        )

    def _detect(self, block: IqBlock) -> np.ndarray:
        pre = self._pre.process(block)
        shift = self._half if self._upper else -self._half
        centered = mix(pre, shift)
        filtered = IqBlock(
            samples=self._select.process(centered.samples),
            sample_rate_hz=centered.sample_rate_hz,
            center_hz=centered.center_hz,
            start_index=centered.start_index,
        )
        return mix(filtered, -shift).samples.real


_DEMOD_CLASSES = {
    DemodMode.AM: AmDemodulator,
    DemodMode.DSB: DsbDemodulator,
    DemodMode.SSB_USB: SsbDemodulator,
    DemodMode.SSB_LSB: SsbDemodulator,
    DemodMode.NFM: FmDemodulator,
    DemodMode.WFM: FmDemodulator,
}


def make_demodulator(config: DemodConfig, input_rate_hz: float) -> Demodulator:
    """Build the demodulator matching config.mode for the given input rate."""
    return _DEMOD_CLASSES[config.mode](config, input_rate_hz)
