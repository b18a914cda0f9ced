"""Modulate -> demodulate loopback across all six modes.

The modulators and demodulators are exact counterparts, so clean-channel
loopback correlation is the first-order health check of the whole signal
path. AM and DSB need ~0.4 s for the DC estimator to settle, hence the
head guard before correlating.
"""

import numpy as np

from sdrtrx import DemodConfig, DemodMode, TxConfig, aligned_correlation, make_demodulator, make_modulator

FS = 240_000.0
RATE = 48_000


def speech_band_noise(n, seed=3):
    rng = np.random.default_rng(seed)
    spec = np.fft.rfft(rng.normal(size=n))
    f = np.fft.rfftfreq(n, 1.0 / RATE)
    spec[(f < 300) | (f > 3000)] = 0
    y = np.fft.irfft(spec, n)
    return 0.7 * y / np.abs(y).max()


audio = speech_band_noise(RATE * 3 // 2)
head, tail = RATE // 2, RATE // 10

print("mode      correlation")
for mode in DemodMode:
    deviation = 75_000.0 if mode is DemodMode.WFM else 2_500.0
    mod = make_modulator(TxConfig(mode=mode, sample_rate_hz=FS,
                                  deviation_hz=deviation, am_depth=0.8))
    demod = make_demodulator(DemodConfig(mode=mode), FS)
    # stream in chunks: the chains carry state across block boundaries
    rec = np.concatenate([demod.process(mod.process(c)).samples
                          for c in np.array_split(audio, 6)])
    corr = aligned_correlation(audio[head:-tail], rec[head:-tail])
    print(f"{mode.value:8s}  {corr:.5f}")

print("\nWFM sits slightly below the others: the receiver applies 50 us")
print("de-emphasis but the clean-channel transmitter does not pre-emphasize,")
print("so high audio frequencies come back rolled off by design.")
