/** Integration against the live Python service.
 *
 * Spawns `sdrtrx serve` on an ephemeral port with a three-station scene,
 * then checks the three acceptance behaviors end to end: a click's
 * snapped frequency comes back acknowledged, the waterfall shows the
 * three stations at the computed pixel columns, and the audio path
 * carries the tuned station's 1 kHz tone.
 */

import { spawn, ChildProcess } from 'node:child_process';
import { mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import WebSocket from 'ws';

import { decodeFrame, parseServerText, tuneCommand } from '../src/protocol';
import { pcmToFloat32 } from '../src/audio';
import { frequencyToPixel, pixelToOffsetHz, snapToStep } from '../src/tuning';
import { WaterfallModel } from '../src/waterfall';

const CENTER = 100e6;
const SPAN = 960e3;
const PORT = 18793;

const SCENE = {
  center_hz: CENTER,
  sample_rate_hz: SPAN,
  duration_s: 2.0,
  seed: 7,
  stations: [
    { freq_hz: CENTER - 300e3, mode: 'NFM', deviation_hz: 2500, audio: { tone: 1000 }, power_db: 0 },
    { freq_hz: CENTER, mode: 'NFM', deviation_hz: 2500, audio: { tone: 700 }, power_db: 0 },
    { freq_hz: CENTER + 300e3, mode: 'NFM', deviation_hz: 2500, audio: { tone: 1300 }, power_db: 0 },
  ],
  channel: { snr_db: 30, reference: 0, gain_db: 0, freq_offset_hz: 0 },
};

let service: ChildProcess;

function connect(): Promise<WebSocket> {
  return new Promise((resolve, reject) => {
    const deadline = Date.now() + 10_000;
    const attempt = () => {
      const ws = new WebSocket(`ws://127.0.0.1:${PORT}`, { perMessageDeflate: false });
      ws.binaryType = 'arraybuffer';
      ws.once('open', () => resolve(ws));
      ws.once('error', () => {
        ws.close();
        if (Date.now() > deadline) reject(new Error('service never came up'));
        else setTimeout(attempt, 150);
      });
    };
    attempt();
  });
}

/** ws delivers ArrayBuffer with binaryType set, Buffer otherwise. */
function toArrayBuffer(data: unknown): ArrayBuffer {
  if (data instanceof ArrayBuffer) return data;
  const buf = data as Buffer;
  return buf.buffer.slice(buf.byteOffset, buf.byteOffset + buf.byteLength);
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), 'tuner-e2e-'));
  const scenePath = join(dir, 'scene.json');
  writeFileSync(scenePath, JSON.stringify(SCENE));
  // realtime pacing: the client consumes at the rate a browser would
  service = spawn(
    'python3',
    ['-m', 'sdrtrx.cli', 'serve', '--scene', scenePath, '--port', String(PORT)],
    { stdio: ['ignore', 'pipe', 'pipe'] },
  );
}, 20_000);

afterAll(() => {
  service?.kill();
});

describe('live service round trips', () => {
  it('acknowledges the snapped click frequency, shows 3 columns, carries the tone', async () => {
    const ws = await connect();
    const waterfall = new WaterfallModel();
    const pcmChunks: Float32Array[] = [];
    let acked: number | null = null;

    // simulate a click at the pixel of the -300 kHz station, 1024 px wide,
    // slightly off so the 12.5 kHz snapping has work to do
    const clickX = frequencyToPixel(CENTER - 300e3, CENTER, SPAN, 1024) + 3;
    const raw = pixelToOffsetHz(clickX, 1024, SPAN);
    const snapped = snapToStep(raw, 12500);
    expect(snapped).toBe(-300e3);

    const done = new Promise<void>((resolve, reject) => {
      const timer = setTimeout(() => reject(new Error('timed out waiting for frames')), 15_000);
      ws.on('message', (data, isBinary) => {
        if (isBinary) {
          const frame = decodeFrame(toArrayBuffer(data));
          if (!frame) return;
          if (frame.kind === 'spectrum') waterfall.push(frame.frame);
          else pcmChunks.push(pcmToFloat32(frame.frame.pcm));
        } else {
          const msg = parseServerText(String(data));
          if (msg?.type === 'status' && msg.offset_hz === snapped) acked = msg.offset_hz;
        }
        const audioSamples = pcmChunks.reduce((acc, c) => acc + c.length, 0);
        if (acked !== null && waterfall.rows.length >= 6 && audioSamples >= 96000) {
          clearTimeout(timer);
          resolve();
        }
      });
      ws.once('error', reject);
    });

    ws.send(tuneCommand(snapped));
    await done;
    ws.close();

    // 1. acknowledged offset equals the snapped click frequency
    expect(acked).toBe(-300e3);

    // 2. waterfall: bright columns at the three computed station pixels
    const profile = waterfall.columnProfile();
    const width = profile.length;
    const floor = [...profile].sort((a, b) => a - b)[Math.floor(width / 2)];
    for (const off of [-300e3, 0, 300e3]) {
      const px = Math.round(frequencyToPixel(CENTER + off, CENTER, SPAN, width));
      const local = Math.max(...Array.from(profile.slice(px - 4, px + 5)));
      expect(local).toBeGreaterThan(floor + 20); // 20 dB out of the noise
    }

    // 3. audio path reproduces the tuned station's 1 kHz tone
    const total = pcmChunks.reduce((acc, c) => acc + c.length, 0);
    const audio = new Float32Array(total);
    let o = 0;
    for (const c of pcmChunks) {
      audio.set(c, o);
      o += c.length;
    }
    const seg = audio.subarray(48000); // skip tune/filter transients
    const power = (f: number) => {
      const k = Math.round((seg.length * f) / 48000);
      const w = (2 * Math.PI * k) / seg.length;
      let s0 = 0, s1 = 0, s2 = 0;
      for (const v of seg) {
        s0 = v + 2 * Math.cos(w) * s1 - s2;
        s2 = s1;
        s1 = s0;
      }
      return (s1 * s1 + s2 * s2 - 2 * Math.cos(w) * s1 * s2) / ((seg.length * seg.length) / 2);
    };
    expect(power(1000) / Math.max(power(1790), 1e-12)).toBeGreaterThan(100);
  }, 30_000);
});
