"""Synthetic RF scenes: multiple modulated stations in one capture band.

A scene is a list of stations (carrier, mode, audio source, power), a
channel spec (calibrated AWGN, receiver gain and LO offset), and the
band geometry.  Synthesis is deterministic given the scene seed: audio
noise sources and the channel noise come from seeded PCG64 generators
(numpy's default), so the same scene file always produces the same
capture bytes.

SNR convention: the requested snr_db is the ratio of the reference
station's total power to the noise power falling inside that station's
occupied bandwidth.  This makes "15 dB" mean the same reception grade
for a 7 kHz NFM channel and a 180 kHz WFM channel, which is what the
per-mode quality comparisons need.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .demod import DEFAULT_DEVIATION_HZ, DemodMode
from .dsp import FilterSpec, FirFilter, design_lowpass, mix
from .errors import ConfigError
from .iqio import DEFAULT_BLOCK_SIZE, IqBlock, read_wav
from .modulate import TxConfig, make_modulator

# Emulated front-end noise floor: the dongle's ~45 dB dynamic range plus
# its ~3.5 dB noise figure, referenced to full scale.
FRONT_END_FLOOR_DBFS = -41.5

_TONE_AMPLITUDE = 1.0
_NOISE_RMS = 0.25
_FILE_ASSUMED_BANDWIDTH_HZ = 3400.0


@dataclass(frozen=True)
class AudioSourceSpec:
    """Tagged audio source: tone (Hz), file (WAV path), or noise (bandwidth Hz)."""

    kind: str
    value: float | str

    def __post_init__(self):
        if self.kind not in ("tone", "file", "noise"):
            raise ConfigError(f"unknown audio source kind {self.kind!r}")

    @classmethod
    def from_json(cls, obj: dict) -> "AudioSourceSpec":
        if not isinstance(obj, dict) or len(obj) != 1:
            raise ConfigError(f"audio source must be a single-key object, got {obj!r}")
        kind, value = next(iter(obj.items()))
        return cls(kind=kind, value=value)

    def to_json(self) -> dict:
        return {self.kind: self.value}


@dataclass(frozen=True)
class StationConfig:
    """One transmitter in the scene at absolute carrier freq_hz."""

    freq_hz: float
    mode: DemodMode
    audio: AudioSourceSpec
    deviation_hz: float | None = None
    depth: float = 0.5
    power_db: float = 0.0

    @property
    def resolved_deviation_hz(self) -> float:
        if self.deviation_hz is not None:
            return self.deviation_hz
        return DEFAULT_DEVIATION_HZ.get(self.mode, 2500.0)

    @property
    def audio_bandwidth_hz(self) -> float:
        if self.audio.kind == "tone":
            return float(self.audio.value)
        if self.audio.kind == "noise":
            return float(self.audio.value)
        return _FILE_ASSUMED_BANDWIDTH_HZ

    def occupied_bandwidth_hz(self) -> float:
        """Nominal occupied bandwidth: Carson for FM, sideband width otherwise."""
        ab = self.audio_bandwidth_hz
        if self.mode in (DemodMode.NFM, DemodMode.WFM):
            return 2.0 * (self.resolved_deviation_hz + ab)
        if self.mode in (DemodMode.SSB_USB, DemodMode.SSB_LSB):
            return ab
        return 2.0 * ab


@dataclass(frozen=True)
class ChannelSpec:
    """Impairments between the scene and the receiver."""

    snr_db: float | None = None
    reference: int = 0
    freq_offset_hz: float = 0.0
    gain_db: float = 0.0
    front_end_noise: bool = False

    def __post_init__(self):
        if self.snr_db is not None and not np.isfinite(self.snr_db):
            raise ConfigError(f"snr_db must be finite, got {self.snr_db}")


@dataclass(frozen=True)
class SceneConfig:
    center_hz: float
    sample_rate_hz: float
    duration_s: float
    stations: tuple[StationConfig, ...]
    channel: ChannelSpec = ChannelSpec()
    seed: int = 0

    @classmethod
    def from_json(cls, text: str) -> "SceneConfig":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"scene is not valid JSON: {e}") from e
        try:
            stations = tuple(
                StationConfig(
                    freq_hz=float(s["freq_hz"]),
                    mode=DemodMode.parse(s["mode"]),
                    audio=AudioSourceSpec.from_json(s["audio"]),
                    deviation_hz=float(s["deviation_hz"]) if "deviation_hz" in s else None,
                    depth=float(s.get("depth", 0.5)),
                    power_db=float(s.get("power_db", 0.0)),
                )
                for s in obj["stations"]
            )
            ch = obj.get("channel", {})
            channel = ChannelSpec(
                snr_db=float(ch["snr_db"]) if ch.get("snr_db") is not None else None,
                reference=int(ch.get("reference", 0)),
                freq_offset_hz=float(ch.get("freq_offset_hz", 0.0)),
                gain_db=float(ch.get("gain_db", 0.0)),
                front_end_noise=bool(ch.get("front_end_noise", False)),
            )
            return cls(
                center_hz=float(obj["center_hz"]),
                sample_rate_hz=float(obj["sample_rate_hz"]),
                duration_s=float(obj["duration_s"]),
                stations=stations,
                channel=channel,
                seed=int(obj.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"bad scene file: {e}") from e

    def to_json(self) -> str:
        return json.dumps(
            {
                "center_hz": self.center_hz,
                "sample_rate_hz": self.sample_rate_hz,
                "duration_s": self.duration_s,
                "seed": self.seed,
                "stations": [
                    {
                        "freq_hz": s.freq_hz,
                        "mode": s.mode.value,
                        "deviation_hz": s.resolved_deviation_hz,
                        "depth": s.depth,
                        "audio": s.audio.to_json(),
                        "power_db": s.power_db,
                    }
                    for s in self.stations
                ],
                "channel": {
                    "snr_db": self.channel.snr_db,
                    "reference": self.channel.reference,
                    "freq_offset_hz": self.channel.freq_offset_hz,
                    "gain_db": self.channel.gain_db,
                    "front_end_noise": self.channel.front_end_noise,
                },
            },
            indent=2,
        )

    @classmethod
    def load(cls, path: str | Path) -> "SceneConfig":
        return cls.from_json(Path(path).read_text())


class _AudioFeed:
    """Deterministic per-station audio at the scene sample rate."""

    def __init__(self, spec: AudioSourceSpec, fs: float, seed_seq: np.random.SeedSequence):
        self.spec = spec
        self.fs = fs
        self._pos = 0
        if spec.kind == "noise":
            self._rng = np.random.Generator(np.random.PCG64(seed_seq))
            bw = float(spec.value)
            if not (0 < bw < fs / 2):
                raise ConfigError(f"noise bandwidth {bw:g} Hz out of range for fs {fs:g}")
            taps = design_lowpass(FilterSpec(order=400, cutoff_hz=bw), fs)
            self._shape = FirFilter(taps)
            self._scale = _NOISE_RMS / np.sqrt(np.sum(taps**2))
        elif spec.kind == "file":
            wav = read_wav(spec.value)
            self._file = np.asarray(wav.samples, dtype=np.float64)
            if len(self._file) == 0:
                raise ConfigError(f"audio file {spec.value} is empty")
            self._file_rate = wav.rate_hz

    def take(self, n: int) -> np.ndarray:
        i0 = self._pos
        self._pos += n
        if self.spec.kind == "tone":
            k = np.arange(i0, i0 + n, dtype=np.float64)
            return _TONE_AMPLITUDE * np.sin(2.0 * np.pi * ((float(self.spec.value) / self.fs) * k % 1.0))
        if self.spec.kind == "noise":
            white = self._rng.standard_normal(n)
            return np.clip(self._shape.process(white).real * self._scale, -1.0, 1.0)
        # file: looped, linearly interpolated onto the scene clock
        t = np.arange(i0, i0 + n, dtype=np.float64) / self.fs
        pos = (t * self._file_rate) % len(self._file)
        return np.interp(pos, np.arange(len(self._file)), self._file, period=len(self._file))


class _StationSynth:
    """Streaming synthesizer for one station, already mixed to its offset."""

    def __init__(self, station: StationConfig, index: int, scene: SceneConfig):
        offset = station.freq_hz - scene.center_hz
        if abs(offset) >= scene.sample_rate_hz / 2:
            raise ValueError(
                f"station {index} at {station.freq_hz:g} Hz falls outside the band "
                f"(center {scene.center_hz:g} Hz, rate {scene.sample_rate_hz:g} Hz)"
            )
        self.offset = offset
        seed_seq = np.random.SeedSequence(entropy=scene.seed, spawn_key=(index,))
        self.audio = _AudioFeed(station.audio, scene.sample_rate_hz, seed_seq)
        tx = TxConfig(
            mode=station.mode,
            sample_rate_hz=scene.sample_rate_hz,
            deviation_hz=station.resolved_deviation_hz,
            am_depth=station.depth,
        )
        # audio is generated at the scene rate, so no interpolation stage
        self.modulator = make_modulator(tx, audio_rate_hz=scene.sample_rate_hz)
        self.scale = 10.0 ** (station.power_db / 20.0)

    def take(self, n: int) -> np.ndarray:
        block = self.modulator.process(self.audio.take(n))
        if self.offset:
            block = mix(block, -self.offset)
        return block.samples * self.scale


def compose_scene(
    stations: Iterable[StationConfig],
    center_hz: float,
    sample_rate_hz: float,
    duration_s: float,
    seed: int = 0,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> Iterator[IqBlock]:
    """Sum the stations' modulated signals at their band offsets.

    Pure composition: no channel noise or front-end effects.  Emits
    blocks of block_size samples (last one short) totaling
    round(duration_s * sample_rate_hz) samples.
    """
    scene = SceneConfig(
        center_hz=center_hz,
        sample_rate_hz=sample_rate_hz,
        duration_s=duration_s,
        stations=tuple(stations),
        seed=seed,
    )
    if duration_s <= 0:
        raise ValueError(f"duration must be positive, got {duration_s}")
    synths = [_StationSynth(s, i, scene) for i, s in enumerate(scene.stations)]
    total = int(round(duration_s * sample_rate_hz))
    emitted = 0
    while emitted < total:
        n = min(block_size, total - emitted)
        acc = np.zeros(n, dtype=np.complex128)
        for synth in synths:
            acc += synth.take(n)
        yield IqBlock(
            samples=acc,
            sample_rate_hz=sample_rate_hz,
            center_hz=center_hz,
            start_index=emitted,
        )
        emitted += n


def reference_power(scene: SceneConfig, probe_s: float = 0.25) -> float:
    """Mean power of the reference station's signal, measured by synthesis.

    Re-runs the reference station alone over a short probe window; the
    seeded generators make this identical to its contribution in the full
    scene, so the AWGN calibration sees the true signal power.
    """
    idx = scene.channel.reference
    if not (0 <= idx < len(scene.stations)):
        raise ConfigError(f"channel.reference {idx} out of range")
    station = scene.stations[idx]
    synth = _StationSynth(station, idx, scene)
    n = max(4096, int(probe_s * scene.sample_rate_hz))
    return float(np.mean(np.abs(synth.take(n)) ** 2))


def awgn_variance(
    snr_db: float, signal_power: float, occupied_bw_hz: float, sample_rate_hz: float
) -> float:
    """Total complex-noise variance so that signal_power / (in-band noise)
    equals snr_db, with the noise measured in occupied_bw_hz."""
    bw = min(occupied_bw_hz, sample_rate_hz)
    return signal_power * sample_rate_hz / (bw * 10.0 ** (snr_db / 10.0))


def apply_awgn(
    blocks: Iterable[IqBlock],
    noise_variance: float,
    seed: int,
) -> Iterator[IqBlock]:
    """Add complex white Gaussian noise of the given total variance.

    Deterministic per seed and blocking; per-component variance is half
    the total so |noise|^2 averages to noise_variance.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(0xA06,))))
    sigma = np.sqrt(noise_variance / 2.0)
    for block in blocks:
        n = len(block)
        noise = sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        yield IqBlock(
            samples=block.samples + noise,
            sample_rate_hz=block.sample_rate_hz,
            center_hz=block.center_hz,
            start_index=block.start_index,
        )


def apply_front_end(
    blocks: Iterable[IqBlock],
    spec: ChannelSpec,
    seed: int = 0,
) -> Iterator[IqBlock]:
    """Receiver front-end model: gain scaling, LO offset, optional noise floor."""
    scale = 10.0 ** (spec.gain_db / 20.0)
    floor_sigma = 0.0
    if spec.front_end_noise:
        floor_sigma = np.sqrt(10.0 ** (FRONT_END_FLOOR_DBFS / 10.0) / 2.0)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(0xFE,))))
    for block in blocks:
        out = block.samples * scale
        if floor_sigma:
            out = out + floor_sigma * (
                rng.standard_normal(len(out)) + 1j * rng.standard_normal(len(out))
            )
        shifted = IqBlock(
            samples=out,
            sample_rate_hz=block.sample_rate_hz,
            center_hz=block.center_hz,
            start_index=block.start_index,
        )
        if spec.freq_offset_hz:
            shifted = mix(shifted, -spec.freq_offset_hz)
        yield shifted


def synthesize_scene(
    scene: SceneConfig, block_size: int = DEFAULT_BLOCK_SIZE
) -> Iterator[IqBlock]:
    """Full scene synthesis: stations + calibrated AWGN + front end."""
    blocks = compose_scene(
        scene.stations,
        scene.center_hz,
        scene.sample_rate_hz,
        scene.duration_s,
        seed=scene.seed,
        block_size=block_size,
    )
    if scene.channel.snr_db is not None:
        ref = scene.stations[scene.channel.reference]
        var = awgn_variance(
            scene.channel.snr_db,
            reference_power(scene),
            ref.occupied_bandwidth_hz(),
            scene.sample_rate_hz,
        )
        blocks = apply_awgn(blocks, var, scene.seed)
    if (
        scene.channel.gain_db
        or scene.channel.freq_offset_hz
        or scene.channel.front_end_noise
    ):
        blocks = apply_front_end(blocks, scene.channel, seed=scene.seed)
    return blocks
