/** PCM playback with a jitter buffer.
 *
 * Incoming frames are i16 mono at 48 kHz. Decoding to Float32 is a pure
 * function (tested directly); scheduling goes through a minimal context
 * interface so the player logic runs under tests without WebAudio.
 */

import { AUDIO_RATE_HZ } from './protocol';

export const JITTER_BUFFER_S = 0.12; // >= 100 ms of lead before playout

export function pcmToFloat32(pcm: Int16Array): Float32Array {
  const out = new Float32Array(pcm.length);
  for (let i = 0; i < pcm.length; i++) out[i] = pcm[i] / 32767;
  return out;
}

/** The slice of AudioContext the player needs (mockable in tests). */
export interface PlaybackContext {
  currentTime: number;
  schedule(samples: Float32Array, rateHz: number, when: number): void;
}

export class PcmPlayer {
  private nextStart = 0;
  private started = false;

  constructor(private ctx: PlaybackContext) {}

  enqueue(pcm: Int16Array): void {
    const samples = pcmToFloat32(pcm);
    const now = this.ctx.currentTime;
    if (!this.started || this.nextStart < now + 0.02) {
      // first frame or underrun: rebase with the full jitter lead
      this.nextStart = now + JITTER_BUFFER_S;
      this.started = true;
    }
    this.ctx.schedule(samples, AUDIO_RATE_HZ, this.nextStart);
    this.nextStart += samples.length / AUDIO_RATE_HZ;
  }

  reset(): void {
    this.started = false;
  }

  get bufferedUntil(): number {
    return this.nextStart;
  }
}

/** WebAudio-backed PlaybackContext for the browser. */
export function webAudioContext(ac: AudioContext): PlaybackContext {
  return {
    get currentTime() {
      return ac.currentTime;
    },
    schedule(samples, rateHz, when) {
      const buffer = ac.createBuffer(1, samples.length, rateHz);
      buffer.copyToChannel(samples as Float32Array<ArrayBuffer>, 0);
      const source = ac.createBufferSource();
      source.buffer = buffer;
      source.connect(ac.destination);
      source.start(when);
    },
  };
}
