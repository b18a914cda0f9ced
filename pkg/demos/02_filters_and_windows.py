"""Window families and windowed-sinc filter design.

Three cosine-series windows drive all filtering: Blackman (about -58 dB
sidelobes), Blackman-Harris 4-term (about -92 dB) and the 7-term set
(about -180 dB). Sharper sidelobes cost main-lobe width, which is why
the channel filter's window is an operator-selectable trade-off.

Saves a response plot to filter_response.png when matplotlib is around.
"""

import numpy as np

from sdrtrx import FilterSpec, WindowKind, design_lowpass, window


def peak_sidelobe_db(w):
    spec = np.abs(np.fft.rfft(w, 1 << 18))
    mag = 20 * np.log10(np.maximum(spec / spec[0], 1e-300))
    i = 1
    while i < len(mag) - 1 and not (mag[i] < mag[i - 1] and mag[i] <= mag[i + 1]):
        i += 1
    return mag[i:].max()


for kind in WindowKind:
    w = window(kind, 1025)
    print(f"{kind.label:18s} center {w[512]:.6f}  edge {w[0]:+.2e}  "
          f"peak sidelobe {peak_sidelobe_db(w):7.1f} dB")

# a 1001-tap channel filter like the receive chain builds
fs = 2_400_000.0
taps = design_lowpass(FilterSpec(order=1000, cutoff_hz=100e3,
                                 window=WindowKind.BLACKMAN_HARRIS_4), fs)
print(f"\n1001-tap low-pass: sum {taps.sum():.12f} (unit DC gain), "
      f"symmetric: {np.allclose(taps, taps[::-1])}")

resp = np.abs(np.fft.rfft(taps, 1 << 16))
freqs = np.fft.rfftfreq(1 << 16, 1.0 / fs)
for f in (50e3, 90e3, 200e3, 400e3):
    level = 20 * np.log10(resp[np.argmin(np.abs(freqs - f))])
    print(f"  response at {f/1e3:5.0f} kHz: {level:8.2f} dB")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.figure(figsize=(8, 4))
    plt.plot(freqs / 1e3, 20 * np.log10(np.maximum(resp, 1e-12)))
    plt.xlim(0, 400)
    plt.ylim(-140, 5)
    plt.xlabel("frequency (kHz)")
    plt.ylabel("gain (dB)")
    plt.title("1001-tap Blackman-Harris 4 low-pass, cutoff 100 kHz at 2.4 MS/s")
    plt.grid(True)
    plt.tight_layout()
    plt.savefig("filter_response.png", dpi=120)
    print("\nwrote filter_response.png")
except ImportError:
    print("\n(matplotlib not installed; skipping the plot)")
