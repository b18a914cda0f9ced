"""Drive the operator session directly: configure, receive, retune.

The session is pull-driven -- each step() consumes one block from the
source, applies any queued parameter changes at the block boundary, and
emits demodulated audio. The WebSocket service wraps exactly this loop;
here we run it synchronously to watch a retune happen.
"""

import numpy as np

from sdrtrx import (
    AudioSourceSpec,
    DemodMode,
    SceneConfig,
    SceneSource,
    Session,
    StationConfig,
    TuningParams,
)

FS = 960_000.0
CENTER = 100e6

scene = SceneConfig(
    center_hz=CENTER, sample_rate_hz=FS, duration_s=4.0,
    stations=(
        StationConfig(freq_hz=CENTER - 200e3, mode=DemodMode.NFM,
                      audio=AudioSourceSpec("tone", 700.0)),
        StationConfig(freq_hz=CENTER + 200e3, mode=DemodMode.NFM,
                      audio=AudioSourceSpec("tone", 1300.0)),
    ),
    seed=11,
)


def dominant(audio):
    x = audio - audio.mean()
    spec = np.abs(np.fft.rfft(x * np.hanning(len(x))))
    freqs = np.fft.rfftfreq(len(x), 1 / 48000)
    sel = freqs > 100
    return freqs[sel][np.argmax(spec[sel])]


session = Session()
session.configure(
    TuningParams(center_hz=CENTER, offset_hz=-200e3, step_hz=12500.0),
    SceneSource(scene),
)
print("state:", session.state.value)
session.start_rx()
print("state:", session.state.value)

for i in range(3):
    out = session.step()
    print(f"block {i}: tuned {session.params.offset_hz/1e3:+.1f} kHz, "
          f"audio tone {dominant(out.audio.samples):.0f} Hz")

print("\nretune to +200 kHz (applies at the next block boundary)")
session.retune(offset_hz=200e3)
for i in range(3, 6):
    out = session.step()
    print(f"block {i}: tuned {session.params.offset_hz/1e3:+.1f} kHz, "
          f"audio tone {dominant(out.audio.samples):.0f} Hz")

print("\nFor the browser experience: sdrtrx serve --scene <file> and open")
print("the frontend -- every click sends the same commands this script ran.")
