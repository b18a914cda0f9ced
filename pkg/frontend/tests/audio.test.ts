import { describe, expect, it } from 'vitest';

import { JITTER_BUFFER_S, PcmPlayer, PlaybackContext, pcmToFloat32 } from '../src/audio';

function goertzelPower(x: Float32Array, freqHz: number, rateHz: number): number {
  const k = Math.round((x.length * freqHz) / rateHz);
  const w = (2 * Math.PI * k) / x.length;
  const coeff = 2 * Math.cos(w);
  let s0 = 0;
  let s1 = 0;
  let s2 = 0;
  for (const sample of x) {
    s0 = sample + coeff * s1 - s2;
    s2 = s1;
    s1 = s0;
  }
  return (s1 * s1 + s2 * s2 - coeff * s1 * s2) / ((x.length * x.length) / 2);
}

describe('PCM decode path', () => {
  it('maps endpoints and zero correctly', () => {
    const out = pcmToFloat32(Int16Array.from([0, 32767, -32767]));
    expect(out[0]).toBe(0);
    expect(out[1]).toBeCloseTo(1.0, 6);
    expect(out[2]).toBeCloseTo(-1.0, 6);
  });

  it('reproduces a 1 kHz tone peak from encoded PCM', () => {
    const rate = 48000;
    const n = 4800;
    const pcm = new Int16Array(n);
    for (let i = 0; i < n; i++) {
      pcm[i] = Math.round(0.6 * 32767 * Math.sin((2 * Math.PI * 1000 * i) / rate));
    }
    const decoded = pcmToFloat32(pcm);
    const atTone = goertzelPower(decoded, 1000, rate);
    const offTone = goertzelPower(decoded, 2300, rate);
    expect(atTone).toBeGreaterThan(0.15); // ~ (0.6^2)/2
    expect(atTone / Math.max(offTone, 1e-12)).toBeGreaterThan(1e4);
  });
});

class FakeContext implements PlaybackContext {
  currentTime = 0;
  scheduled: { at: number; length: number }[] = [];

  schedule(samples: Float32Array, _rate: number, when: number): void {
    this.scheduled.push({ at: when, length: samples.length });
  }
}

describe('jitter buffering', () => {
  it('delays the first frame by at least 100 ms', () => {
    const ctx = new FakeContext();
    const player = new PcmPlayer(ctx);
    player.enqueue(new Int16Array(480));
    expect(ctx.scheduled[0].at).toBeGreaterThanOrEqual(0.1);
    expect(JITTER_BUFFER_S).toBeGreaterThanOrEqual(0.1);
  });

  it('schedules consecutive frames back to back', () => {
    const ctx = new FakeContext();
    const player = new PcmPlayer(ctx);
    player.enqueue(new Int16Array(4800)); // 0.1 s
    player.enqueue(new Int16Array(4800));
    const [a, b] = ctx.scheduled;
    expect(b.at).toBeCloseTo(a.at + 0.1, 9);
  });

  it('rebases after an underrun instead of scheduling in the past', () => {
    const ctx = new FakeContext();
    const player = new PcmPlayer(ctx);
    player.enqueue(new Int16Array(480)); // 10 ms
    ctx.currentTime = 5.0; // long stall
    player.enqueue(new Int16Array(480));
    expect(ctx.scheduled[1].at).toBeGreaterThanOrEqual(5.0 + 0.1);
  });
});
