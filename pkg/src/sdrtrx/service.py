"""Streaming control service for the live tuner UI.

Speaks JSON control messages and binary data frames over WebSocket:

  client -> server (text JSON):
    {"type":"configure","center_hz":H,"source":{"kind":"file","raw":P,"meta":M}
                                            | {"kind":"scene","path":S}}
    {"type":"tune","offset_hz":F}
    {"type":"set_mode","mode":"NFM","baseband_hz":B}
    {"type":"set_gain","gain_db":G}
    {"type":"start_rx"} {"type":"start_tx","tx":{...}} {"type":"stop","which":"rx"}

  server -> client:
    text  {"type":"status","state":...,"offset_hz":...,"mode":...,"snr_db":...,"quality":...}
    text  {"type":"error","message":...}
    binary, little-endian:
      0x01  u32 bin_count, f64 center_hz, f64 span_hz, bin_count x f32 dB
      0x02  u32 sample_count, sample_count x i16 PCM @ 48 kHz mono

Every command goes through one serialized handler, so client races cannot
corrupt session state; malformed input produces an error reply and leaves
the stream running.  Fan-out never blocks the DSP loop: spectrum frames
are latest-wins per client, audio is buffered and a client that falls a
whole buffer behind is disconnected rather than fed gapped audio.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import struct
from collections import deque
from dataclasses import dataclass

import numpy as np
import websockets

from .demod import DemodMode
from .errors import SdrError
from .iqio import AudioBlock
from .metrics import SpectrumFrame, classify_quality, estimate_snr, power_spectrum
from .modulate import TxConfig
from .receiver import channel_halfwidth_hz
from .scene import SceneConfig
from .session import (
    CaptureSource,
    SampleSource,
    SceneSource,
    Session,
    SessionState,
    TuningParams,
)

SPECTRUM_TAG = 0x01
AUDIO_TAG = 0x02

_AUDIO_BACKLOG_LIMIT = 64  # blocks; a client this far behind gets dropped


def encode_spectrum_frame(frame: SpectrumFrame) -> bytes:
    head = struct.pack(
        "<BIdd", SPECTRUM_TAG, len(frame.bins), frame.center_hz, frame.span_hz
    )
    return head + np.asarray(frame.bins, dtype="<f4").tobytes()


def encode_audio_frame(audio: AudioBlock) -> bytes:
    pcm = np.clip(np.asarray(audio.samples), -1.0, 1.0)
    pcm = np.floor(pcm * 32767.0 + 0.5).astype("<i2")
    return struct.pack("<BI", AUDIO_TAG, len(pcm)) + pcm.tobytes()


class _ClientFeed:
    """Per-client outbound buffers: latest-wins spectrum, ordered audio."""

    def __init__(self):
        self.audio: deque[bytes] = deque()
        self.spectrum: bytes | None = None
        self.wakeup = asyncio.Event()
        self.overrun = False

    def push_audio(self, payload: bytes) -> None:
        self.audio.append(payload)
        if len(self.audio) > _AUDIO_BACKLOG_LIMIT:
            self.overrun = True
        self.wakeup.set()

    def push_spectrum(self, payload: bytes) -> None:
        self.spectrum = payload  # replacing an unsent frame = drop-oldest
        self.wakeup.set()


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    block_size: int = 65536
    spectrum_fps: float = 15.0
    status_hz: float = 4.0
    fft_size: int = 1024
    realtime: bool = True  # pace the DSP loop to the capture clock


class SessionService:
    """Owns one Session and fans its output out to any number of clients."""

    def __init__(self, config: ServiceConfig = ServiceConfig()):
        self.config = config
        self.session = Session()
        self._feeds: dict = {}
        self._stop = asyncio.Event()
        self._snr_db: float | None = None
        self.port: int | None = None
        self._server_task: asyncio.Task | None = None

    # ------------------------------------------------------------------
    # command handling (transport independent, fuzzable directly)
    # ------------------------------------------------------------------

    def handle_command(self, message: str | dict) -> dict:
        """Apply one control message; always returns a JSON-able reply."""
        try:
            cmd = json.loads(message) if isinstance(message, str) else message
        except json.JSONDecodeError as e:
            return {"type": "error", "message": f"not valid JSON: {e}"}
        if not isinstance(cmd, dict) or "type" not in cmd:
            return {"type": "error", "message": "message must be an object with a 'type'"}
        try:
            return self._dispatch(cmd)
        except SdrError as e:
            return {"type": "error", "message": str(e)}
        except (KeyError, TypeError, ValueError, AttributeError, OSError) as e:
            return {"type": "error", "message": f"bad command: {e}"}

    def _dispatch(self, cmd: dict) -> dict:
        kind = cmd["type"]
        session = self.session
        if kind == "configure":
            source = _build_source(cmd["source"], self.config.block_size)
            params = TuningParams(
                center_hz=float(cmd["center_hz"]),
                offset_hz=float(cmd.get("offset_hz", 0.0)),
                step_hz=float(cmd.get("step_hz", 12500.0)),
                baseband_hz=float(cmd.get("baseband_hz", 5000.0)),
                gain_db=float(cmd.get("gain_db", 0.0)),
                mode=DemodMode.parse(cmd.get("mode", "NFM")),
            )
            session.configure(params, source)
        elif kind == "tune":
            session.retune(offset_hz=float(cmd["offset_hz"]))
        elif kind == "set_mode":
            session.retune(
                mode=DemodMode.parse(cmd["mode"]),
                baseband_hz=float(cmd["baseband_hz"]) if "baseband_hz" in cmd else None,
            )
        elif kind == "set_gain":
            session.retune(gain_db=float(cmd["gain_db"]))
        elif kind == "start_rx":
            session.start_rx()
        elif kind == "start_tx":
            tx = cmd.get("tx") or {}
            default_rate = session.source.sample_rate_hz if session.source else 240000.0
            session.start_tx(
                TxConfig(
                    mode=DemodMode.parse(tx.get("mode", "NFM")),
                    sample_rate_hz=float(tx.get("sample_rate_hz", default_rate)),
                    carrier_hz=float(tx.get("carrier_hz", 0.0)),
                    deviation_hz=float(tx.get("deviation_hz", 2500.0)),
                    am_depth=float(tx.get("am_depth", 0.5)),
                )
            )
        elif kind == "stop":
            session.stop(cmd.get("which", "all"))
        else:
            return {"type": "error", "message": f"unknown command type {kind!r}"}
        return self.status_message()

    def status_message(self) -> dict:
        session = self.session
        return {
            "type": "status",
            "state": session.state.value,
            "offset_hz": session.params.offset_hz if session.params else None,
            "mode": session.params.mode.value if session.params else None,
            "snr_db": None if self._snr_db is None else round(self._snr_db, 1),
            "quality": None if self._snr_db is None else classify_quality(self._snr_db).value,
        }

    # ------------------------------------------------------------------
    # server plumbing
    # ------------------------------------------------------------------

    async def run(self) -> None:
        """Serve until stop() is called."""
        async with websockets.serve(
            self._client_loop, self.config.host, self.config.port
        ) as server:
            self.port = (
                server.sockets[0].getsockname()[1] if server.sockets else self.config.port
            )
            dsp = asyncio.create_task(self._dsp_loop())
            status = asyncio.create_task(self._status_loop())
            await self._stop.wait()
            dsp.cancel()
            status.cancel()
            for task in (dsp, status):
                with contextlib.suppress(asyncio.CancelledError):
                    await task

    def stop(self) -> None:
        self._stop.set()

    async def _client_loop(self, ws) -> None:
        feed = _ClientFeed()
        self._feeds[ws] = feed
        sender = asyncio.create_task(self._send_loop(ws, feed))
        try:
            await ws.send(json.dumps(self.status_message()))
            async for message in ws:
                if isinstance(message, bytes):
                    reply = {"type": "error", "message": "binary messages are not commands"}
                else:
                    reply = self.handle_command(message)
                await ws.send(json.dumps(reply))
        except websockets.ConnectionClosed:
            pass
        finally:
            sender.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await sender
            self._feeds.pop(ws, None)

    async def _send_loop(self, ws, feed: _ClientFeed) -> None:
        try:
            while True:
                await feed.wakeup.wait()
                feed.wakeup.clear()
                if feed.overrun:
                    await ws.close(code=1013, reason="audio backlog")
                    return
                while feed.audio:
                    await ws.send(feed.audio.popleft())
                if feed.spectrum is not None:
                    payload, feed.spectrum = feed.spectrum, None
                    await ws.send(payload)
        except websockets.ConnectionClosed:
            pass

    async def _dsp_loop(self) -> None:
        cfg = self.config
        spectrum_every = None
        blocks_done = 0
        while True:
            session = self.session
            if session.state in (
                SessionState.RECEIVING,
                SessionState.RECEIVING_AND_TRANSMITTING,
            ):
                assert session.source is not None
                fs = session.source.sample_rate_hz
                block_s = cfg.block_size / fs
                if spectrum_every is None:
                    spectrum_every = max(1, int(round(1.0 / (cfg.spectrum_fps * block_s))))
                out = session.step()
                if out.audio is not None and len(out.audio):
                    payload = encode_audio_frame(out.audio)
                    for feed in list(self._feeds.values()):
                        feed.push_audio(payload)
                if out.raw is not None and blocks_done % spectrum_every == 0:
                    frame = power_spectrum(
                        out.raw, fft_size=cfg.fft_size, window_kind=session.params.window
                    )
                    payload = encode_spectrum_frame(frame)
                    for feed in list(self._feeds.values()):
                        feed.push_spectrum(payload)
                    self._update_snr(out.raw)
                blocks_done += 1
                # yield to senders; in realtime mode pace to the capture clock
                await asyncio.sleep(block_s if cfg.realtime else 0)
            else:
                blocks_done = 0
                spectrum_every = None
                await asyncio.sleep(0.02)

    def _update_snr(self, raw) -> None:
        session = self.session
        if session.params is None:
            return
        params = session.params
        try:
            half = channel_halfwidth_hz(params.mode, params.baseband_hz, 2500.0)
            self._snr_db = estimate_snr(
                raw, params.offset_hz, max(2.0 * half, 1000.0), fft_size=self.config.fft_size
            )
        except (ValueError, SdrError):
            self._snr_db = None

    async def _status_loop(self) -> None:
        while True:
            await asyncio.sleep(1.0 / self.config.status_hz)
            if not self._feeds:
                continue
            payload = json.dumps(self.status_message())
            for ws in list(self._feeds):
                with contextlib.suppress(websockets.ConnectionClosed):
                    await ws.send(payload)


def _build_source(spec, block_size: int) -> SampleSource:
    if not isinstance(spec, dict):
        raise ValueError(f"source must be an object, got {type(spec).__name__}")
    kind = spec.get("kind")
    if kind == "file":
        return CaptureSource(
            spec["raw"],
            spec["meta"],
            block_size=block_size,
            hardware=bool(spec.get("hardware", False)),
        )
    if kind == "scene":
        return SceneSource(SceneConfig.load(spec["path"]), block_size=block_size)
    raise ValueError(f"source kind must be 'file' or 'scene', not {kind!r}")


async def serve(config: ServiceConfig = ServiceConfig()) -> SessionService:
    """Start a service and return it once it is accepting connections."""
    service = SessionService(config)
    task = asyncio.create_task(service.run())
    while service.port is None and not task.done():
        await asyncio.sleep(0.01)
    if task.done() and task.exception():
        raise task.exception()
    service._server_task = task
    return service
