"""The tuned receive chain: mix -> decimating channel FIR -> demodulator.

This is the software stand-in for the dongle's tuner/decimator front end:
an NCO shifts the wanted carrier to DC, a windowed-sinc decimating FIR
(window family and order are operator parameters) selects the channel
and drops the rate to an intermediate rate that divides down to 48 kHz,
and the demodulator produces audio.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .demod import DemodConfig, DemodMode, MAX_AUDIO_CUTOFF_HZ, make_demodulator
from .dsp import Decimator, FilterSpec, WindowKind, design_lowpass, mix
from .errors import ConfigError
from .iqio import AUDIO_RATE_HZ, AudioBlock, IqBlock


def snap_to_step(offset_hz: float, step_hz: float) -> float:
    """Quantize to the nearest step multiple, ties toward zero."""
    if step_hz <= 0:
        raise ConfigError(f"step must be positive, got {step_hz}")
    q = offset_hz / step_hz
    n = np.ceil(q - 0.5) if q > 0 else np.floor(q + 0.5)
    return float(n * step_hz)


def channel_halfwidth_hz(mode: DemodMode, baseband_hz: float, deviation_hz: float) -> float:
    """One-sided bandwidth the channel filter must pass for this mode."""
    audio = min(baseband_hz, MAX_AUDIO_CUTOFF_HZ)
    if mode in (DemodMode.NFM, DemodMode.WFM):
        return deviation_hz + audio
    return audio


@dataclass(frozen=True)
class ChainParams:
    """Everything needed to build a receive chain for one station."""

    offset_hz: float
    mode: DemodMode
    baseband_hz: float = 5000.0
    window: WindowKind = WindowKind.BLACKMAN_HARRIS_4
    order: int = 1000
    deviation_hz: float | None = None
    deemphasis_us: float = 50.0
    gain_db: float = 0.0


class RxChain:
    """Streaming receive pipeline from capture-rate I/Q to 48 kHz audio."""

    def __init__(self, input_rate_hz: float, params: ChainParams):
        self.params = params
        self.input_rate_hz = float(input_rate_hz)
        if abs(params.offset_hz) >= input_rate_hz / 2:
            raise ValueError(
                f"offset {params.offset_hz:g} Hz outside the +/-{input_rate_hz / 2:g} Hz band"
            )
        total = input_rate_hz / AUDIO_RATE_HZ
        if abs(total - round(total)) > 1e-6:
            raise ConfigError(
                f"input rate {input_rate_hz:g} Hz is not a multiple of {AUDIO_RATE_HZ} Hz"
            )
        config = DemodConfig(
            mode=params.mode,
            deviation_hz=params.deviation_hz,
            deemphasis_us=params.deemphasis_us,
            audio_cutoff_hz=params.baseband_hz,
        ).resolved()
        half = channel_halfwidth_hz(params.mode, config.audio_cutoff_hz, config.deviation_hz or 0.0)
        self.if_rate_hz = _choose_if_rate(input_rate_hz, half)
        factor = int(round(input_rate_hz / self.if_rate_hz))
        cutoff = min(half * 1.1, 0.45 * self.if_rate_hz)
        taps = design_lowpass(
            FilterSpec(order=params.order, cutoff_hz=cutoff, window=params.window),
            input_rate_hz,
        )
        self._decimator = Decimator(taps, factor)
        self._demod = make_demodulator(config, self.if_rate_hz)
        self._gain = 10.0 ** (params.gain_db / 20.0)

    def set_gain_db(self, gain_db: float) -> None:
        """Adjust gain without touching filter or oscillator state."""
        self.params = replace(self.params, gain_db=gain_db)
        self._gain = 10.0 ** (gain_db / 20.0)

    def process(self, block: IqBlock) -> AudioBlock:
        if block.sample_rate_hz != self.input_rate_hz:
            raise ConfigError(
                f"chain built for {self.input_rate_hz:g} Hz, block is {block.sample_rate_hz:g} Hz"
            )
        tuned = mix(block, self.params.offset_hz)
        if self._gain != 1.0:
            tuned = IqBlock(
                samples=tuned.samples * self._gain,
                sample_rate_hz=tuned.sample_rate_hz,
                center_hz=tuned.center_hz,
                start_index=tuned.start_index,
            )
        return self._demod.process(self._decimator.process(tuned))


def _choose_if_rate(input_rate_hz: float, halfwidth_hz: float) -> float:
    """Largest decimation to a multiple of 48 kHz that still holds the channel.

    The IF rate must give the channel filter some transition room, so we
    require if_rate >= 2.25x the channel halfwidth (on each side of DC).
    """
    total = int(round(input_rate_hz / AUDIO_RATE_HZ))
    best = None
    for d in range(total, 0, -1):
        if total % d:
            continue
        if_rate = input_rate_hz / d
        if if_rate >= 2.0 * halfwidth_hz * 1.125:
            best = if_rate
            break
    if best is None:
        raise ConfigError(
            f"channel halfwidth {halfwidth_hz:g} Hz does not fit in the "
            f"{input_rate_hz:g} Hz capture"
        )
    return best
