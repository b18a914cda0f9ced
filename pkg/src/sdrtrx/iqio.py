"""I/Q and audio I/O in the RTL dongle byte format.

The capture format is a headerless stream of 8-bit unsigned bytes,
interleaved I then Q, with values 0..255 mapped affinely onto [-1, +1]
(127.5 is zero).  A JSON sidecar carries sample rate, center frequency,
gain and the format tag.  Audio files are RIFF WAV, PCM-16, mono.
"""

from __future__ import annotations

import json
import struct
import wave
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import ConfigError, FormatError

# Hardware limits of the dongle this format comes from: R820T tuning range
# and the RTL2832U's highest usable sample rate.
TUNER_MIN_HZ = 24e6
TUNER_MAX_HZ = 1850e6
MAX_SAMPLE_RATE_HZ = 2_400_000.0

CAPTURE_FORMAT_TAG = "u8_iq_interleaved"
DEFAULT_BLOCK_SIZE = 65536
DEFAULT_GAIN_DB = 19.0
AUDIO_RATE_HZ = 48000

_SCALE = 127.5


@dataclass(frozen=True)
class IqBlock:
    """A run of complex baseband samples with stream position metadata.

    ``start_index`` is the index of samples[0] counted from the start of the
    stream; downstream oscillators use it to stay phase continuous across
    block boundaries.
    """

    samples: np.ndarray
    sample_rate_hz: float
    center_hz: float = 0.0
    start_index: int = 0

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ConfigError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if self.start_index < 0:
            raise ConfigError(f"start_index must be non-negative, got {self.start_index}")

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class AudioBlock:
    """Mono audio samples, dimensionless amplitudes nominally in [-1, 1]."""

    samples: np.ndarray
    rate_hz: float = float(AUDIO_RATE_HZ)

    def __post_init__(self):
        if self.rate_hz <= 0:
            raise ConfigError(f"rate_hz must be positive, got {self.rate_hz}")

    def __len__(self) -> int:
        return len(self.samples)


@dataclass
class CaptureMeta:
    """Sidecar metadata for a raw capture file."""

    sample_rate_hz: float
    center_hz: float
    gain_db: float = DEFAULT_GAIN_DB
    format: str = CAPTURE_FORMAT_TAG

    def validate(self, hardware: bool = False) -> None:
        """Check the sidecar against format and (optionally) tuner limits.

        ``hardware=True`` marks the capture as coming from the physical
        front end, enforcing the 2.4 MS/s ceiling and the 24-1850 MHz
        tuning range.  Synthetic scenes skip the center check.
        """
        if self.format != CAPTURE_FORMAT_TAG:
            raise ConfigError(
                f"unsupported capture format {self.format!r}, expected {CAPTURE_FORMAT_TAG!r}"
            )
        if self.sample_rate_hz <= 0:
            raise ConfigError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if self.sample_rate_hz > MAX_SAMPLE_RATE_HZ:
            raise ConfigError(
                f"sample_rate_hz {self.sample_rate_hz:g} exceeds the "
                f"{MAX_SAMPLE_RATE_HZ:g} Hz ceiling of the capture format"
            )
        if hardware and not (TUNER_MIN_HZ <= self.center_hz <= TUNER_MAX_HZ):
            raise ConfigError(
                f"center_hz {self.center_hz:g} outside the tuner range "
                f"[{TUNER_MIN_HZ:g}, {TUNER_MAX_HZ:g}]"
            )

    def to_json(self) -> str:
        return json.dumps(
            {
                "sample_rate_hz": self.sample_rate_hz,
                "center_hz": self.center_hz,
                "gain_db": self.gain_db,
                "format": self.format,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "CaptureMeta":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"sidecar is not valid JSON: {e}") from e
        if not isinstance(obj, dict):
            raise ConfigError("sidecar must be a JSON object")
        missing = {"sample_rate_hz", "center_hz", "format"} - obj.keys()
        if missing:
            raise ConfigError(f"sidecar missing fields: {sorted(missing)}")
        return cls(
            sample_rate_hz=float(obj["sample_rate_hz"]),
            center_hz=float(obj["center_hz"]),
            gain_db=float(obj.get("gain_db", DEFAULT_GAIN_DB)),
            format=str(obj["format"]),
        )


def decode_rtl_bytes(data: bytes | np.ndarray) -> np.ndarray:
    """Decode interleaved unsigned I/Q bytes to complex samples in [-1, 1].

    Each byte b maps to (b - 127.5) / 127.5; even offsets are I, odd are Q.
    """
    raw = np.frombuffer(data, dtype=np.uint8) if isinstance(data, (bytes, bytearray)) else np.asarray(data, dtype=np.uint8)
    if len(raw) % 2 != 0:
        raise FormatError(
            f"I/Q byte stream has odd length {len(raw)}: truncated Q byte at offset {len(raw) - 1}"
        )
    scaled = (raw.astype(np.float64) - _SCALE) / _SCALE
    return scaled[0::2] + 1j * scaled[1::2]


def encode_rtl_bytes(samples: np.ndarray) -> bytes:
    """Encode complex samples to interleaved unsigned I/Q bytes.

    Components are clamped to [-1, 1] and quantized with round-half-up.
    """
    z = np.asarray(samples)
    if not np.all(np.isfinite(z)):
        bad = int(np.flatnonzero(~np.isfinite(z))[0])
        raise ValueError(f"non-finite sample at index {bad}")
    flat = np.empty(2 * len(z), dtype=np.float64)
    flat[0::2] = np.real(z)
    flat[1::2] = np.imag(z)
    np.clip(flat, -1.0, 1.0, out=flat)
    # round-half-up: floor(x + 0.5)
    quant = np.floor(flat * _SCALE + _SCALE + 0.5)
    return quant.astype(np.uint8).tobytes()


def read_capture(
    raw_path: str | Path,
    meta_path: str | Path,
    block_size: int = DEFAULT_BLOCK_SIZE,
    hardware: bool = False,
) -> Iterator[IqBlock]:
    """Stream fixed-size blocks from a raw capture plus its JSON sidecar.

    The final block may be short; an empty file yields no blocks.  A
    dangling I byte (odd file length) raises FormatError.
    """
    meta_path = Path(meta_path)
    if not meta_path.exists():
        raise ConfigError(f"sidecar not found: {meta_path}")
    meta = CaptureMeta.from_json(meta_path.read_text())
    meta.validate(hardware=hardware)
    if block_size < 1:
        raise ConfigError(f"block_size must be >= 1, got {block_size}")

    start_index = 0
    with open(raw_path, "rb") as f:
        while True:
            chunk = f.read(2 * block_size)
            if not chunk:
                break
            samples = decode_rtl_bytes(chunk)
            yield IqBlock(
                samples=samples,
                sample_rate_hz=meta.sample_rate_hz,
                center_hz=meta.center_hz,
                start_index=start_index,
            )
            start_index += len(samples)


def write_capture(
    blocks: Iterable[IqBlock],
    raw_path: str | Path,
    meta_path: str | Path,
    meta: CaptureMeta | None = None,
) -> int:
    """Write blocks as raw bytes plus sidecar; returns sample count written.

    Metadata defaults to the first block's rate/center with format defaults.
    """
    total = 0
    with open(raw_path, "wb") as f:
        for block in blocks:
            if meta is None:
                meta = CaptureMeta(
                    sample_rate_hz=block.sample_rate_hz, center_hz=block.center_hz
                )
            f.write(encode_rtl_bytes(block.samples))
            total += len(block)
    if meta is None:
        raise ConfigError("cannot write capture metadata: no blocks and no explicit meta")
    Path(meta_path).write_text(meta.to_json())
    return total


def read_wav(path: str | Path) -> AudioBlock:
    """Read a PCM-16 mono WAV file into an AudioBlock."""
    try:
        with wave.open(str(path), "rb") as w:
            if w.getnchannels() != 1:
                raise FormatError(f"{path}: expected mono WAV, got {w.getnchannels()} channels")
            if w.getsampwidth() != 2:
                raise FormatError(
                    f"{path}: expected 16-bit PCM, got {8 * w.getsampwidth()}-bit"
                )
            if w.getcomptype() != "NONE":
                raise FormatError(f"{path}: compressed WAV not supported")
            rate = w.getframerate()
            frames = w.readframes(w.getnframes())
    except wave.Error as e:
        raise FormatError(f"{path}: not a readable WAV file ({e})") from e
    pcm = np.frombuffer(frames, dtype="<i2")
    return AudioBlock(samples=pcm.astype(np.float64) / 32767.0, rate_hz=float(rate))


def write_wav(block: AudioBlock, path: str | Path) -> None:
    """Write an AudioBlock as PCM-16 mono WAV, clipping to full scale."""
    x = np.clip(np.asarray(block.samples, dtype=np.float64), -1.0, 1.0)
    pcm = np.floor(x * 32767.0 + 0.5).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(round(block.rate_hz)))
        w.writeframes(pcm.tobytes())


def blocks_from_array(
    samples: np.ndarray,
    sample_rate_hz: float,
    center_hz: float = 0.0,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> Iterator[IqBlock]:
    """Split one array into a block stream with running start_index."""
    for i in range(0, len(samples), block_size):
        yield IqBlock(
            samples=samples[i : i + block_size],
            sample_rate_hz=sample_rate_hz,
            center_hz=center_hz,
            start_index=i,
        )


def concat_blocks(blocks: Iterable[IqBlock]) -> np.ndarray:
    """Concatenate a block stream back into one sample array."""
    parts = [b.samples for b in blocks]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.complex128)
