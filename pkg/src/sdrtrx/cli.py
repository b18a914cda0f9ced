"""Command-line batch entry points.

One binary, subcommand style.  Machine-readable results go to stdout as
single JSON lines; progress and human commentary go to stderr.  Exit
codes: 0 success, 2 bad flags, 3 I/O or file-format trouble, 4 DSP
precondition failures (offset out of band, rates that do not divide,
and similar).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .demod import DemodConfig, DemodMode, make_demodulator
from .dsp import Decimator, FilterSpec, WindowKind, design_lowpass, mix
from .errors import ConfigError, FormatError, SdrError, StateError
from .iqio import (
    AUDIO_RATE_HZ,
    AudioBlock,
    CaptureMeta,
    IqBlock,
    blocks_from_array,
    concat_blocks,
    encode_rtl_bytes,
    read_capture,
    read_wav,
    write_wav,
)
from .metrics import (
    MatrixSceneTemplate,
    aligned_correlation,
    classify_quality,
    default_grid,
    estimate_snr,
    power_spectrum,
    quality_matrix,
    quality_matrix_csv,
    spectrogram,
)
from .modulate import TxConfig, make_modulator
from .receiver import ChainParams, RxChain, channel_halfwidth_hz, snap_to_step
from .scene import SceneConfig, synthesize_scene
from .session import bridge as bridge_stream

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DSP = 4


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _emit(obj: dict) -> None:
    print(json.dumps(obj), flush=True)


def _load_capture_samples(raw: str, meta: str, hardware: bool) -> tuple[np.ndarray, CaptureMeta]:
    """Read a whole capture; I/O and format trouble exits 3."""
    try:
        meta_obj = CaptureMeta.from_json(Path(meta).read_text())
        meta_obj.validate(hardware=hardware)
        blocks = list(read_capture(raw, meta, hardware=hardware))
    except (OSError, FormatError, ConfigError) as e:
        _log(f"error: {e}")
        raise SystemExit(EXIT_IO) from e
    return concat_blocks(blocks), meta_obj


def _write_capture_normalized(samples: np.ndarray, rate: float, center: float,
                              raw: str, meta: str, gain_db: float = 19.0) -> float:
    """Scale to 95% full scale and write capture + sidecar; returns the scale."""
    peak = float(np.max(np.abs(np.concatenate([samples.real, samples.imag])))) if len(samples) else 0.0
    scale = 0.95 / peak if peak > 0 else 1.0
    try:
        Path(raw).write_bytes(encode_rtl_bytes(samples * scale))
        Path(meta).write_text(
            CaptureMeta(sample_rate_hz=rate, center_hz=center, gain_db=gain_db).to_json()
        )
    except OSError as e:
        _log(f"error: {e}")
        raise SystemExit(EXIT_IO) from e
    return scale


def _band_noise(n: int, rate: float, lo: float, hi: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    spec = np.fft.rfft(x)
    f = np.fft.rfftfreq(n, 1.0 / rate)
    spec[(f < lo) | (f > hi)] = 0.0
    y = np.fft.irfft(spec, n)
    return 0.7 * y / np.max(np.abs(y))


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------


def cmd_rx(args) -> int:
    samples, meta = _load_capture_samples(args.infile, args.meta, args.hardware)
    params = ChainParams(
        offset_hz=snap_to_step(args.offset_hz, args.step_khz * 1000.0),
        mode=DemodMode.parse(args.mode),
        baseband_hz=args.baseband_hz,
        window=WindowKind.parse(args.window),
        order=args.order,
        gain_db=args.gain_db,
    )
    chain = RxChain(meta.sample_rate_hz, params)
    audio_parts = [
        chain.process(b).samples
        for b in blocks_from_array(samples, meta.sample_rate_hz, meta.center_hz)
    ]
    audio = np.concatenate(audio_parts) if audio_parts else np.zeros(0)
    write_wav(AudioBlock(samples=audio), args.out)
    half = channel_halfwidth_hz(params.mode, params.baseband_hz, 2500.0)
    head = samples[: 1 << 20]
    snr = estimate_snr(
        IqBlock(samples=head, sample_rate_hz=meta.sample_rate_hz, center_hz=meta.center_hz),
        params.offset_hz,
        max(2.0 * half, 1000.0),
    )
    _emit(
        {
            "snr_db": round(snr, 2),
            "quality": classify_quality(snr).value,
            "offset_hz": params.offset_hz,
            "mode": params.mode.value,
            "audio_s": round(len(audio) / AUDIO_RATE_HZ, 3),
            "wav": str(args.out),
        }
    )
    return EXIT_OK


def cmd_tx(args) -> int:
    try:
        wav = read_wav(args.audio)
    except (OSError, FormatError) as e:
        _log(f"error: {e}")
        return EXIT_IO
    if wav.rate_hz != AUDIO_RATE_HZ:
        _log(f"error: expected {AUDIO_RATE_HZ} Hz WAV, got {wav.rate_hz:g}")
        return EXIT_IO
    config = TxConfig(
        mode=DemodMode.parse(args.mode),
        sample_rate_hz=args.rate,
        carrier_hz=args.carrier_hz,
        deviation_hz=args.deviation_hz,
        am_depth=args.depth,
    )
    mod = make_modulator(config)
    out = mod.process(np.asarray(wav.samples))
    scale = _write_capture_normalized(
        out.samples, args.rate, args.center_hz, args.out, args.meta_out
    )
    _emit({"samples": len(out), "scale": round(scale, 6), "capture": str(args.out)})
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        scene = SceneConfig.load(args.scene)
    except (OSError, ConfigError) as e:
        _log(f"error: {e}")
        return EXIT_IO
    if args.seed is not None:
        from dataclasses import replace

        scene = replace(scene, seed=args.seed)
    samples = concat_blocks(synthesize_scene(scene))
    scale = _write_capture_normalized(
        samples, scene.sample_rate_hz, scene.center_hz, args.out, args.meta_out,
        gain_db=scene.channel.gain_db or 19.0,
    )
    _emit(
        {
            "samples": len(samples),
            "duration_s": scene.duration_s,
            "stations": len(scene.stations),
            "scale": round(scale, 6),
            "capture": str(args.out),
        }
    )
    return EXIT_OK


def cmd_loopback(args) -> int:
    audio = _band_noise(int(args.duration * AUDIO_RATE_HZ), AUDIO_RATE_HZ, 300.0, 3000.0, args.seed)
    head = int(0.5 * AUDIO_RATE_HZ)  # AM/DSB DC-estimator settle
    tail = int(0.1 * AUDIO_RATE_HZ)
    results = []
    for mode in DemodMode:
        dev = 75000.0 if mode is DemodMode.WFM else 2500.0
        mod = make_modulator(
            TxConfig(mode=mode, sample_rate_hz=args.rate, deviation_hz=dev, am_depth=0.8)
        )
        demod = make_demodulator(DemodConfig(mode=mode), args.rate)
        rec = demod.process(mod.process(audio)).samples
        corr = aligned_correlation(audio[head:-tail], rec[head:-tail])
        results.append({"mode": mode.value, "correlation": round(corr, 5)})
        _log(f"{mode.value:8s} correlation {corr:.5f}")
    _emit({"loopback": results})
    return EXIT_OK


def cmd_quality(args) -> int:
    snrs = [float(s) for s in args.snrs.split(",")]
    template = MatrixSceneTemplate(seed=args.seed)
    cells = quality_matrix(default_grid(), snrs, template=template, order=args.order)
    csv_text = quality_matrix_csv(cells)
    try:
        Path(args.out).write_text(csv_text)
    except OSError as e:
        _log(f"error: {e}")
        return EXIT_IO
    in_band = sum(
        1
        for c in cells
        if c.quality == classify_quality(c.injected_snr_db)
    )
    _emit({"cells": len(cells), "in_band": in_band, "csv": str(args.out)})
    return EXIT_OK


def cmd_spectrum(args) -> int:
    samples, meta = _load_capture_samples(args.infile, args.meta, hardware=False)
    frames = spectrogram(
        IqBlock(samples=samples, sample_rate_hz=meta.sample_rate_hz, center_hz=meta.center_hz),
        fft_size=args.fft,
        hop=args.hop,
        window_kind=WindowKind.parse(args.window),
    )
    if args.frames:
        frames = frames[: args.frames]
    try:
        with open(args.out, "w") as f:
            f.write("frame_index,bin,db\n")
            for t, frame in enumerate(frames):
                for b, db in enumerate(frame.bins):
                    f.write(f"{t},{b},{db:.2f}\n")
    except OSError as e:
        _log(f"error: {e}")
        return EXIT_IO
    _emit({"frames": len(frames), "fft": args.fft, "csv": str(args.out)})
    return EXIT_OK


def cmd_bridge(args) -> int:
    samples, meta = _load_capture_samples(args.infile, args.meta, hardware=False)
    rx = ChainParams(
        offset_hz=args.rx_offset_hz,
        mode=DemodMode.parse(args.mode),
        baseband_hz=args.baseband_hz,
        window=WindowKind.parse(args.window),
        order=args.order,
    )
    tx = TxConfig(
        mode=DemodMode.parse(args.tx_mode or args.mode),
        sample_rate_hz=meta.sample_rate_hz,
        carrier_hz=args.tx_offset_hz,
        deviation_hz=args.deviation_hz,
    )
    out_blocks = bridge_stream(
        blocks_from_array(samples, meta.sample_rate_hz, meta.center_hz),
        rx,
        tx,
        meta.sample_rate_hz,
    )
    out = concat_blocks(out_blocks)
    scale = _write_capture_normalized(
        out, meta.sample_rate_hz, meta.center_hz, args.out, args.meta_out
    )
    _emit(
        {
            "samples": len(out),
            "rx_offset_hz": args.rx_offset_hz,
            "tx_offset_hz": args.tx_offset_hz,
            "scale": round(scale, 6),
            "capture": str(args.out),
        }
    )
    return EXIT_OK


def cmd_serve(args) -> int:
    import asyncio

    from .service import ServiceConfig, SessionService

    config = ServiceConfig(
        host=args.host,
        port=args.port,
        realtime=not args.no_realtime,
        spectrum_fps=args.spectrum_fps,
    )
    service = SessionService(config)
    if args.scene:
        reply = service.handle_command(
            {
                "type": "configure",
                "center_hz": SceneConfig.load(args.scene).center_hz,
                "source": {"kind": "scene", "path": args.scene},
            }
        )
        if reply.get("type") == "error":
            _log(f"error: {reply['message']}")
            return EXIT_DSP
        service.handle_command({"type": "start_rx"})
    _log(f"serving on ws://{args.host}:{args.port}")

    async def _main():
        task = asyncio.create_task(service.run())
        try:
            await task
        except asyncio.CancelledError:
            pass

    try:
        asyncio.run(_main())
    except KeyboardInterrupt:
        _log("interrupted")
    return EXIT_OK


def cmd_bench(args) -> int:
    """Throughput of the standard chain: mix + 1001-tap decimator + NFM demod."""
    fs = args.rate
    block = 65536
    taps = design_lowpass(
        FilterSpec(order=1000, cutoff_hz=fs / 25.0, window=WindowKind.BLACKMAN_HARRIS_4), fs
    )
    decim = Decimator(taps, args.factor)
    demod = make_demodulator(DemodConfig(mode=DemodMode.NFM), fs / args.factor)
    rng = np.random.default_rng(args.seed)
    data = (rng.normal(size=block) + 1j * rng.normal(size=block)) * 0.1
    # warm-up pass so allocation and planning are off the clock
    warm = IqBlock(samples=data, sample_rate_hz=fs, start_index=0)
    demod.process(decim.process(mix(warm, 12500.0)))
    total = 0
    start_index = block
    t0 = time.perf_counter()
    while time.perf_counter() - t0 < args.seconds:
        blk = IqBlock(samples=data, sample_rate_hz=fs, start_index=start_index)
        demod.process(decim.process(mix(blk, 12500.0)))
        total += block
        start_index += block
    dt = time.perf_counter() - t0
    rate = total / dt
    _emit(
        {
            "input_samples": total,
            "elapsed_s": round(dt, 3),
            "samples_per_sec": round(rate),
            "realtime_factor": round(rate / fs, 2),
        }
    )
    _log(f"sustained {rate / 1e6:.2f} Msamples/s ({rate / fs:.1f}x realtime at {fs / 1e6:g} MS/s)")
    return EXIT_OK


# ----------------------------------------------------------------------
# argument wiring
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sdrtrx",
        description="Software radio transceiver toolkit: capture I/O, demodulation, "
        "scene synthesis, quality experiments, and the live tuning service.",
    )
    p.add_argument("--version", action="version", version=f"sdrtrx {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    rx = sub.add_parser("rx", help="demodulate a capture to a 48 kHz WAV")
    rx.add_argument("--in", dest="infile", required=True, help="raw capture path")
    rx.add_argument("--meta", required=True, help="JSON sidecar path")
    rx.add_argument("--offset-hz", type=float, default=0.0, help="tune offset from center (Hz)")
    rx.add_argument("--mode", default="NFM", help="AM|DSB|SSB_USB|SSB_LSB|NFM|WFM")
    rx.add_argument("--baseband-hz", type=float, default=5000.0, help="audio cutoff (Hz)")
    rx.add_argument("--window", default="bh4", help="blackman|bh4|bh7")
    rx.add_argument("--order", type=int, default=1000, help="channel filter order")
    rx.add_argument("--step-khz", type=float, default=12.5, help="tuning step (kHz)")
    rx.add_argument("--gain-db", type=float, default=0.0, help="digital gain (dB)")
    rx.add_argument("--hardware", action="store_true", help="enforce tuner-range limits")
    rx.add_argument("--out", required=True, help="output WAV path")
    rx.set_defaults(func=cmd_rx)

    tx = sub.add_parser("tx", help="modulate a WAV into a capture")
    tx.add_argument("--audio", required=True, help="input 48 kHz mono WAV")
    tx.add_argument("--mode", default="NFM")
    tx.add_argument("--rate", type=float, default=240000.0, help="output sample rate (Hz)")
    tx.add_argument("--carrier-hz", type=float, default=0.0, help="offset within the capture (Hz)")
    tx.add_argument("--center-hz", type=float, default=100e6, help="sidecar center (Hz)")
    tx.add_argument("--deviation-hz", type=float, default=2500.0)
    tx.add_argument("--depth", type=float, default=0.5, help="AM modulation depth")
    tx.add_argument("--out", required=True, help="output raw capture")
    tx.add_argument("--meta-out", required=True, help="output sidecar")
    tx.set_defaults(func=cmd_tx)

    synth = sub.add_parser("synth", help="synthesize a scene JSON into a capture")
    synth.add_argument("--scene", required=True, help="scene JSON path")
    synth.add_argument("--seed", type=int, default=None, help="override the scene seed")
    synth.add_argument("--out", required=True)
    synth.add_argument("--meta-out", required=True)
    synth.set_defaults(func=cmd_synth)

    loop = sub.add_parser("loopback", help="modulate-demodulate correlation per mode")
    loop.add_argument("--rate", type=float, default=240000.0)
    loop.add_argument("--duration", type=float, default=1.5, help="test audio length (s)")
    loop.add_argument("--seed", type=int, default=0)
    loop.set_defaults(func=cmd_loopback)

    qual = sub.add_parser("quality", help="synthetic quality matrix CSV")
    qual.add_argument("--out", required=True, help="output CSV path")
    qual.add_argument("--snrs", default="25,15,5", help="comma-separated injected SNRs (dB)")
    qual.add_argument("--order", type=int, default=1000)
    qual.add_argument("--seed", type=int, default=1234)
    qual.set_defaults(func=cmd_quality)

    spec = sub.add_parser("spectrum", help="spectrogram frames as CSV")
    spec.add_argument("--in", dest="infile", required=True)
    spec.add_argument("--meta", required=True)
    spec.add_argument("--fft", type=int, default=1024)
    spec.add_argument("--hop", type=int, default=512)
    spec.add_argument("--frames", type=int, default=0, help="limit frame count (0 = all)")
    spec.add_argument("--window", default="bh4")
    spec.add_argument("--out", required=True)
    spec.set_defaults(func=cmd_spectrum)

    br = sub.add_parser("bridge", help="relay one station onto another frequency")
    br.add_argument("--in", dest="infile", required=True)
    br.add_argument("--meta", required=True)
    br.add_argument("--rx-offset-hz", type=float, required=True)
    br.add_argument("--tx-offset-hz", type=float, required=True)
    br.add_argument("--mode", default="NFM")
    br.add_argument("--tx-mode", default=None, help="defaults to --mode")
    br.add_argument("--baseband-hz", type=float, default=5000.0)
    br.add_argument("--deviation-hz", type=float, default=2500.0)
    br.add_argument("--window", default="bh4")
    br.add_argument("--order", type=int, default=1000)
    br.add_argument("--out", required=True)
    br.add_argument("--meta-out", required=True)
    br.set_defaults(func=cmd_bridge)

    srv = sub.add_parser("serve", help="run the live tuning service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8765)
    srv.add_argument("--scene", default=None, help="scene JSON to configure and start")
    srv.add_argument("--spectrum-fps", type=float, default=15.0)
    srv.add_argument("--no-realtime", action="store_true", help="run the DSP loop unpaced")
    srv.set_defaults(func=cmd_serve)

    bench = sub.add_parser("bench", help="throughput of mix + decimating FIR + NFM demod")
    bench.add_argument("--rate", type=float, default=2.4e6, help="input sample rate (Hz)")
    bench.add_argument("--factor", type=int, default=10, help="decimation factor")
    bench.add_argument("--seconds", type=float, default=2.0, help="measurement time")
    bench.add_argument("--seed", type=int, default=0)
    bench.set_defaults(func=cmd_bench)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except (StateError, ConfigError, ValueError) as e:
        _log(f"error: {e}")
        return EXIT_DSP
    except OSError as e:
        _log(f"error: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
