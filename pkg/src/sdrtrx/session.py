"""Operator session: the configure/receive/transmit state machine.

The session is pull-driven: `step()` pulls one block from the sample
source, applies any parameter changes queued since the last block (so a
retune takes effect at a block boundary, never mid-block), runs the
receive chain, and returns the audio plus optional telemetry.  The
transport layer (service module) wraps this in a real-time loop; keeping
the core synchronous makes every state transition and retune testable
without threads.

Sources are never hardware: a looping capture file or a regenerating
synthetic scene, so sessions are reproducible end to end.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from .demod import DemodMode
from .dsp import WindowKind
from .errors import ConfigError, StateError
from .iqio import (
    AUDIO_RATE_HZ,
    AudioBlock,
    CaptureMeta,
    DEFAULT_BLOCK_SIZE,
    IqBlock,
    TUNER_MAX_HZ,
    TUNER_MIN_HZ,
    decode_rtl_bytes,
)
from .modulate import Modulator, TxConfig, make_modulator
from .receiver import ChainParams, RxChain, snap_to_step
from .scene import SceneConfig, synthesize_scene


class SessionState(Enum):
    IDLE = "Idle"
    CONFIGURED = "Configured"
    RECEIVING = "Receiving"
    TRANSMITTING = "Transmitting"
    RECEIVING_AND_TRANSMITTING = "ReceivingAndTransmitting"


class SessionEvent(Enum):
    CONFIGURE = "configure"
    START_RX = "start_rx"
    START_TX = "start_tx"
    STOP_RX = "stop_rx"
    STOP_TX = "stop_tx"
    STOP_ALL = "stop_all"
    RETUNE = "retune"


# The declared transition set; any (state, event) pair not listed here is a
# StateError.  This table is the contract the exhaustive safety test checks.
TRANSITIONS: dict[tuple[SessionState, SessionEvent], SessionState] = {
    (SessionState.IDLE, SessionEvent.CONFIGURE): SessionState.CONFIGURED,
    (SessionState.CONFIGURED, SessionEvent.CONFIGURE): SessionState.CONFIGURED,
    (SessionState.CONFIGURED, SessionEvent.START_RX): SessionState.RECEIVING,
    (SessionState.TRANSMITTING, SessionEvent.START_RX): SessionState.RECEIVING_AND_TRANSMITTING,
    (SessionState.CONFIGURED, SessionEvent.START_TX): SessionState.TRANSMITTING,
    (SessionState.RECEIVING, SessionEvent.START_TX): SessionState.RECEIVING_AND_TRANSMITTING,
    (SessionState.RECEIVING, SessionEvent.STOP_RX): SessionState.CONFIGURED,
    (SessionState.RECEIVING_AND_TRANSMITTING, SessionEvent.STOP_RX): SessionState.TRANSMITTING,
    (SessionState.TRANSMITTING, SessionEvent.STOP_TX): SessionState.CONFIGURED,
    (SessionState.RECEIVING_AND_TRANSMITTING, SessionEvent.STOP_TX): SessionState.RECEIVING,
    (SessionState.RECEIVING, SessionEvent.STOP_ALL): SessionState.CONFIGURED,
    (SessionState.TRANSMITTING, SessionEvent.STOP_ALL): SessionState.CONFIGURED,
    (SessionState.RECEIVING_AND_TRANSMITTING, SessionEvent.STOP_ALL): SessionState.CONFIGURED,
    (SessionState.RECEIVING, SessionEvent.RETUNE): SessionState.RECEIVING,
    (SessionState.RECEIVING_AND_TRANSMITTING, SessionEvent.RETUNE): SessionState.RECEIVING_AND_TRANSMITTING,
}


@dataclass(frozen=True)
class TuningParams:
    """Operator-facing tuning state; offset snaps to the step grid."""

    center_hz: float
    offset_hz: float = 0.0
    step_hz: float = 12500.0
    baseband_hz: float = 5000.0
    gain_db: float = 0.0
    mode: DemodMode = DemodMode.NFM
    window: WindowKind = WindowKind.BLACKMAN_HARRIS_4
    order: int = 1000

    def snapped(self) -> "TuningParams":
        return replace(self, offset_hz=snap_to_step(self.offset_hz, self.step_hz))

    def chain_params(self) -> ChainParams:
        return ChainParams(
            offset_hz=self.offset_hz,
            mode=self.mode,
            baseband_hz=self.baseband_hz,
            window=self.window,
            order=self.order,
            gain_db=self.gain_db,
        )


class SampleSource:
    """Endless block source; concrete sources loop their material."""

    sample_rate_hz: float
    center_hz: float
    hardware: bool = False

    def next_block(self) -> IqBlock:
        raise NotImplementedError


class CaptureSource(SampleSource):
    """Loops a raw capture file; start_index keeps running across wraps."""

    def __init__(self, raw_path, meta_path, block_size: int = DEFAULT_BLOCK_SIZE,
                 hardware: bool = False):
        self.meta = CaptureMeta.from_json(Path(meta_path).read_text())
        self.meta.validate(hardware=hardware)
        self.sample_rate_hz = self.meta.sample_rate_hz
        self.center_hz = self.meta.center_hz
        self.hardware = hardware
        self._raw = Path(raw_path).read_bytes()
        if len(self._raw) < 2:
            raise ConfigError(f"capture {raw_path} holds no samples")
        if len(self._raw) % 2:
            self._raw = self._raw[:-1]
        self._block_size = block_size
        self._samples = decode_rtl_bytes(self._raw)
        self._pos = 0
        self._index = 0

    def next_block(self) -> IqBlock:
        n = self._block_size
        out = np.empty(n, dtype=np.complex128)
        filled = 0
        while filled < n:
            take = min(n - filled, len(self._samples) - self._pos)
            out[filled : filled + take] = self._samples[self._pos : self._pos + take]
            filled += take
            self._pos = (self._pos + take) % len(self._samples)
        block = IqBlock(
            samples=out,
            sample_rate_hz=self.sample_rate_hz,
            center_hz=self.center_hz,
            start_index=self._index,
        )
        self._index += n
        return block


class SceneSource(SampleSource):
    """Regenerates a synthetic scene in a loop."""

    def __init__(self, scene: SceneConfig, block_size: int = DEFAULT_BLOCK_SIZE):
        self.scene = scene
        self.sample_rate_hz = scene.sample_rate_hz
        self.center_hz = scene.center_hz
        self.hardware = False
        self._block_size = block_size
        self._gen = self._blocks()
        self._index = 0

    def _blocks(self) -> Iterator[IqBlock]:
        while True:
            yield from synthesize_scene(self.scene, block_size=self._block_size)

    def next_block(self) -> IqBlock:
        inner = next(self._gen)
        block = IqBlock(
            samples=inner.samples,
            sample_rate_hz=self.sample_rate_hz,
            center_hz=self.center_hz,
            start_index=self._index,
        )
        self._index += len(inner)
        return block


class TxPipeline:
    """Transmit side: internally generated audio through a modulator.

    The sink receives each produced IqBlock; None discards (the service
    runs transmitters for their state, captures go through the CLI).
    """

    def __init__(self, config: TxConfig, audio_hz: float = 1000.0,
                 sink: Callable[[IqBlock], None] | None = None):
        self.config = config
        self.modulator: Modulator = make_modulator(config)
        self.sink = sink
        self._audio_hz = audio_hz
        self._audio_pos = 0

    def step(self, duration_s: float) -> IqBlock:
        n = int(round(duration_s * AUDIO_RATE_HZ))
        k = np.arange(self._audio_pos, self._audio_pos + n, dtype=np.float64)
        self._audio_pos += n
        audio = 0.8 * np.sin(2.0 * np.pi * ((self._audio_hz / AUDIO_RATE_HZ) * k % 1.0))
        block = self.modulator.process(audio)
        if self.sink is not None:
            self.sink(block)
        return block


@dataclass
class StepOutput:
    """What one session step produced."""

    raw: IqBlock | None = None
    audio: AudioBlock | None = None
    tx: IqBlock | None = None


class Session:
    """The operator state machine over a sample source."""

    def __init__(self):
        self.state = SessionState.IDLE
        self.params: TuningParams | None = None
        self.source: SampleSource | None = None
        self.tx_config: TxConfig | None = None
        self._chain: RxChain | None = None
        self._tx: TxPipeline | None = None
        self._pending: dict | None = None

    # ------------------------------------------------------------------
    # state machine
    # ------------------------------------------------------------------

    def _transition(self, event: SessionEvent) -> None:
        key = (self.state, event)
        if key not in TRANSITIONS:
            raise StateError(f"{event.value} not allowed in state {self.state.value}")
        self.state = TRANSITIONS[key]

    def configure(self, params: TuningParams, source: SampleSource) -> None:
        if (self.state, SessionEvent.CONFIGURE) not in TRANSITIONS:
            raise StateError(f"configure not allowed in state {self.state.value}")
        if source.hardware and not (TUNER_MIN_HZ <= params.center_hz <= TUNER_MAX_HZ):
            raise ValueError(
                f"center {params.center_hz:g} Hz outside the tuner range "
                f"[{TUNER_MIN_HZ:g}, {TUNER_MAX_HZ:g}] Hz"
            )
        snapped = params.snapped()
        if abs(snapped.offset_hz) >= source.sample_rate_hz / 2:
            raise ValueError(
                f"offset {snapped.offset_hz:g} Hz outside the band "
                f"(+/-{source.sample_rate_hz / 2:g} Hz)"
            )
        # build the chain up front so bad parameters fail here, not in step()
        chain = RxChain(source.sample_rate_hz, snapped.chain_params())
        self.params = snapped
        self.source = source
        self._chain = chain
        self._pending = None
        self._transition(SessionEvent.CONFIGURE)

    def start_rx(self) -> None:
        self._transition(SessionEvent.START_RX)

    def start_tx(self, tx_config: TxConfig) -> None:
        if (self.state, SessionEvent.START_TX) not in TRANSITIONS:
            raise StateError(f"start_tx not allowed in state {self.state.value}")
        self._tx = TxPipeline(tx_config)
        self.tx_config = tx_config
        self._transition(SessionEvent.START_TX)

    def stop(self, which: str = "all") -> None:
        event = {
            "rx": SessionEvent.STOP_RX,
            "tx": SessionEvent.STOP_TX,
            "all": SessionEvent.STOP_ALL,
        }.get(which)
        if event is None:
            raise ConfigError(f"stop target must be rx, tx or all, not {which!r}")
        self._transition(event)
        if event in (SessionEvent.STOP_TX, SessionEvent.STOP_ALL):
            self._tx = None
        return None

    def retune(
        self,
        offset_hz: float | None = None,
        mode: DemodMode | None = None,
        gain_db: float | None = None,
        baseband_hz: float | None = None,
    ) -> TuningParams:
        """Queue new parameters; they apply at the next block boundary.

        Invalid values raise and leave the session untouched.
        """
        if (self.state, SessionEvent.RETUNE) not in TRANSITIONS:
            raise StateError(f"retune not allowed in state {self.state.value}")
        assert self.params is not None and self.source is not None
        params = self.params
        if offset_hz is not None:
            snapped = snap_to_step(offset_hz, params.step_hz)
            if abs(snapped) >= self.source.sample_rate_hz / 2:
                raise ValueError(
                    f"offset {offset_hz:g} Hz outside the band "
                    f"(+/-{self.source.sample_rate_hz / 2:g} Hz)"
                )
            params = replace(params, offset_hz=snapped)
        if mode is not None:
            params = replace(params, mode=mode)
        if baseband_hz is not None:
            if baseband_hz <= 0:
                raise ValueError(f"baseband must be positive, got {baseband_hz}")
            params = replace(params, baseband_hz=baseband_hz)
        if gain_db is not None:
            params = replace(params, gain_db=gain_db)
        # validate by building the chain now; swap happens at the boundary
        rebuild_needed = (
            params.offset_hz != self.params.offset_hz
            or params.mode != self.params.mode
            or params.baseband_hz != self.params.baseband_hz
        )
        pending: dict = {"params": params}
        if rebuild_needed:
            pending["chain"] = RxChain(self.source.sample_rate_hz, params.chain_params())
        self._pending = pending
        self._transition(SessionEvent.RETUNE)
        return params

    # ------------------------------------------------------------------
    # processing
    # ------------------------------------------------------------------

    def _apply_pending(self) -> None:
        if self._pending is None:
            return
        params = self._pending["params"]
        if "chain" in self._pending:
            self._chain = self._pending["chain"]
        elif self._chain is not None:
            # gain-only change: adjust in place, keep all filter/NCO state
            self._chain.set_gain_db(params.gain_db)
        self.params = params
        self._pending = None

    def step(self) -> StepOutput:
        """Process one block: apply queued parameters, run rx and tx."""
        out = StepOutput()
        rx_active = self.state in (
            SessionState.RECEIVING,
            SessionState.RECEIVING_AND_TRANSMITTING,
        )
        tx_active = self.state in (
            SessionState.TRANSMITTING,
            SessionState.RECEIVING_AND_TRANSMITTING,
        )
        if not rx_active and not tx_active:
            raise StateError(f"step needs a running session, state is {self.state.value}")
        if rx_active:
            assert self.source is not None and self._chain is not None
            self._apply_pending()
            block = self.source.next_block()
            out.raw = block
            out.audio = self._chain.process(block)
        if tx_active and self._tx is not None:
            duration = (
                len(out.raw) / self.source.sample_rate_hz
                if out.raw is not None and self.source is not None
                else DEFAULT_BLOCK_SIZE / self._tx.config.sample_rate_hz
            )
            out.tx = self._tx.step(duration)
        return out


def bridge(
    blocks: Iterator[IqBlock],
    rx_params: ChainParams,
    tx_config: TxConfig,
    input_rate_hz: float,
) -> Iterator[IqBlock]:
    """Relay: demodulate at one frequency, re-modulate at another.

    Audio recovered by the receive chain drives the transmit modulator
    block by block, so the end-to-end latency is one block plus filter
    delays.  Bridging a station onto its own frequency is refused (in a
    shared band the relay would sit on top of its own input).
    """
    if rx_params.offset_hz == tx_config.carrier_hz:
        raise ValueError(
            f"bridge input and output are both at {tx_config.carrier_hz:g} Hz; "
            "pick distinct frequencies"
        )
    chain = RxChain(input_rate_hz, rx_params)
    modulator = make_modulator(tx_config)
    for block in blocks:
        audio = chain.process(block)
        yield modulator.process(audio.samples)
