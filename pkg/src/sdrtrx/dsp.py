"""Front-end DSP: NCO mixing, window functions, FIR design, decimation.

Everything here is streaming-safe: filter and decimator objects carry
their delay lines across blocks, and the mixer derives its phase from the
block's absolute sample index, so splitting a stream into blocks of any
size produces the same output as processing it whole.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError
from .iqio import IqBlock


class WindowKind(Enum):
    BLACKMAN = "blackman"
    BLACKMAN_HARRIS_4 = "blackman-harris-4"
    BLACKMAN_HARRIS_7 = "blackman-harris-7"

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def parse(cls, text: str) -> "WindowKind":
        key = text.strip().lower().replace(" ", "-").replace("_", "-")
        aliases = {
            "blackman": cls.BLACKMAN,
            "bh4": cls.BLACKMAN_HARRIS_4,
            "blackman-harris-4": cls.BLACKMAN_HARRIS_4,
            "bh7": cls.BLACKMAN_HARRIS_7,
            "blackman-harris-7": cls.BLACKMAN_HARRIS_7,
        }
        if key not in aliases:
            raise ConfigError(f"unknown window {text!r}; choose blackman, bh4 or bh7")
        return aliases[key]


_LABELS = {
    WindowKind.BLACKMAN: "Blackman",
    WindowKind.BLACKMAN_HARRIS_4: "Blackman-Harris 4",
    WindowKind.BLACKMAN_HARRIS_7: "Blackman-Harris 7",
}

# Cosine-series coefficients a_i; w[k] = sum_i (-1)^i a_i cos(2 pi i k / (N-1)).
# The 4-term set is the classic minimum-sidelobe Blackman-Harris; the 7-term
# set is the published minimum-sidelobe extension (coefficients sum to 1).
_WINDOW_COEFFS = {
    WindowKind.BLACKMAN: (0.42, 0.5, 0.08),
    WindowKind.BLACKMAN_HARRIS_4: (0.35875, 0.48829, 0.14128, 0.01168),
    WindowKind.BLACKMAN_HARRIS_7: (
        0.27105140069342,
        0.43329793923448,
        0.21812299954311,
        0.06592544638803,
        0.01081174209837,
        0.00077658482522,
        0.00001388721735,
    ),
}


def window(kind: WindowKind, n_taps: int) -> np.ndarray:
    """Generate a symmetric cosine-series window of n_taps points."""
    if n_taps < 2:
        raise ValueError(f"window needs at least 2 points, got {n_taps}")
    coeffs = _WINDOW_COEFFS[kind]
    k = np.arange(n_taps, dtype=np.float64)
    w = np.zeros(n_taps, dtype=np.float64)
    for i, a in enumerate(coeffs):
        w += ((-1) ** i) * a * np.cos(2.0 * np.pi * i * k / (n_taps - 1))
    return w


@dataclass(frozen=True)
class FilterSpec:
    """Windowed-sinc low-pass design parameters; tap count is order + 1."""

    order: int
    cutoff_hz: float
    window: WindowKind = WindowKind.BLACKMAN_HARRIS_4

    def __post_init__(self):
        if self.order < 2:
            raise ValueError(f"filter order must be >= 2, got {self.order}")
        if self.cutoff_hz <= 0:
            raise ValueError(f"cutoff_hz must be positive, got {self.cutoff_hz}")


def design_lowpass(spec: FilterSpec, sample_rate_hz: float) -> np.ndarray:
    """Design windowed-sinc low-pass taps, normalized to unit DC gain."""
    if spec.cutoff_hz >= sample_rate_hz / 2:
        raise ValueError(
            f"cutoff {spec.cutoff_hz:g} Hz must be below Nyquist "
            f"({sample_rate_hz / 2:g} Hz)"
        )
    n = spec.order + 1
    m = spec.order / 2.0
    k = np.arange(n, dtype=np.float64)
    taps = 2.0 * spec.cutoff_hz / sample_rate_hz * np.sinc(
        2.0 * spec.cutoff_hz / sample_rate_hz * (k - m)
    )
    taps *= window(spec.window, n)
    return taps / np.sum(taps)


class FirFilter:
    """Streaming FIR filter; the delay line persists across process() calls."""

    def __init__(self, taps: np.ndarray):
        self.taps = np.asarray(taps, dtype=np.float64)
        if len(self.taps) < 1:
            raise ValueError("empty tap vector")
        self._zi = np.zeros(len(self.taps) - 1, dtype=np.complex128)

    def process(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        if len(x) == 0:
            return x
        y, self._zi = lfilter(self.taps, 1.0, x, zi=self._zi)
        return y

    def reset(self) -> None:
        self._zi[:] = 0


_MAX_LO_TABLE = 1 << 21


def _lo_values(shift_hz: float, sample_rate_hz: float, start_index: int, n: int) -> np.ndarray:
    """exp(-2j pi f/fs (start_index + k)) for k in 0..n-1, drift-free.

    When f/fs is exactly rational with a modest denominator (the common
    case: integer rates and step-quantized offsets) the phase is computed
    in exact integer arithmetic, so continuity holds for arbitrarily long
    streams.  Otherwise falls back to float phase reduced mod 1.
    """
    ratio = Fraction(shift_hz) / Fraction(sample_rate_hz)
    if ratio.denominator <= _MAX_LO_TABLE:
        p, q = ratio.numerator, ratio.denominator
        # reduce before multiplying so the int64 product cannot overflow
        idx = ((np.arange(start_index, start_index + n, dtype=np.int64) % q) * (p % q)) % q
        return np.exp((-2j * np.pi / q) * idx)
    cps = shift_hz / sample_rate_hz
    cycles = np.arange(start_index, start_index + n, dtype=np.float64) * cps
    return np.exp(-2j * np.pi * (cycles % 1.0))


def mix(block: IqBlock, shift_hz: float) -> IqBlock:
    """Translate the block's spectrum down by shift_hz.

    A tone at +shift_hz lands at DC.  Phase is tied to the absolute sample
    index, so mixing is continuous across block boundaries.
    """
    fs = block.sample_rate_hz
    if abs(shift_hz) >= fs / 2:
        raise ValueError(f"shift {shift_hz:g} Hz out of range for fs {fs:g} Hz")
    if shift_hz == 0.0:
        return block
    lo = _lo_values(shift_hz, fs, block.start_index, len(block))
    return IqBlock(
        samples=block.samples * lo,
        sample_rate_hz=fs,
        center_hz=block.center_hz,
        start_index=block.start_index,
    )


class Decimator:
    """Streaming polyphase decimator: anti-alias FIR plus downsample by D.

    Output sample m is the full-rate convolution evaluated at input index
    m*D (zero initial state), computed at the output rate only: the taps
    are split into D phases and each phase convolves a stride-D slice of
    the input, so per-output cost is taps/D per phase times D = taps,
    i.e. taps/D work per *input* sample.
    """

    def __init__(self, taps: np.ndarray, factor: int):
        if factor < 1:
            raise ValueError(f"decimation factor must be >= 1, got {factor}")
        self.taps = np.asarray(taps, dtype=np.float64)
        self.factor = int(factor)
        k = len(self.taps)
        self._hist = np.zeros(k - 1, dtype=np.complex128)
        self._consumed = 0  # input samples seen
        self._emitted = 0  # output samples produced

    def process_array(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        k = len(self.taps)
        d = self.factor
        n = len(x)
        if n == 0:
            return x

        m_first = self._emitted
        m_last = (self._consumed + n - 1) // d
        count = m_last - m_first + 1

        if count > 0:
            # Left-pad so the first retained ext sample sits on a multiple
            # of D in absolute input coordinates; the pad zeros only ever
            # meet tap indices >= len(taps) for the outputs we keep.
            pad = (self._consumed - (k - 1)) % d
            ext = np.concatenate([np.zeros(pad, dtype=np.complex128), self._hist, x])
            base = self._consumed - (k - 1) - pad
            j0 = m_first - base // d
            acc = np.zeros((len(ext) + d - 1) // d + (k + d - 1) // d, dtype=np.complex128)
            for p in range(d):
                hp = self.taps[p::d]
                if len(hp) == 0:
                    continue
                if p == 0:
                    up = ext[0::d]
                else:
                    up = np.concatenate([[0.0], ext[d - p :: d]])
                conv = np.convolve(up, hp)
                acc[: len(conv)] += conv
            out = acc[j0 : j0 + count]
        else:
            out = np.zeros(0, dtype=np.complex128)

        combined = np.concatenate([self._hist, x])
        self._hist = combined[len(combined) - (k - 1) :] if k > 1 else combined[:0]
        self._consumed += n
        self._emitted += count
        return out

    def process(self, block: IqBlock) -> IqBlock:
        start = self._emitted
        out = self.process_array(block.samples)
        return IqBlock(
            samples=out,
            sample_rate_hz=block.sample_rate_hz / self.factor,
            center_hz=block.center_hz,
            start_index=start,
        )

    def reset(self) -> None:
        self._hist[:] = 0
        self._consumed = 0
        self._emitted = 0


class SinglePoleLowpass:
    """One-pole IIR low-pass y[n] = (1-a) x[n] + a y[n-1], streaming."""

    def __init__(self, time_constant_s: float, sample_rate_hz: float):
        if time_constant_s <= 0:
            raise ValueError("time constant must be positive")
        self._a = float(np.exp(-1.0 / (time_constant_s * sample_rate_hz)))
        self._b = np.array([1.0 - self._a])
        self._den = np.array([1.0, -self._a])
        self._zi = np.zeros(1, dtype=np.float64)

    def process(self, x: np.ndarray) -> np.ndarray:
        if len(x) == 0:
            return np.asarray(x, dtype=np.float64)
        y, self._zi = lfilter(self._b, self._den, x, zi=self._zi)
        return y

    def seed(self, value: float) -> None:
        """Pretend the filter has been sitting at `value` forever."""
        self._zi[0] = self._a * value
