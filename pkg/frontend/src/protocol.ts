/** Wire protocol: JSON control messages and binary data frames.
 *
 * Binary frames are little-endian:
 *   0x01 spectrum: u32 bin_count, f64 center_hz, f64 span_hz, bin_count x f32 dB
 *   0x02 audio:    u32 sample_count, sample_count x i16 PCM @ 48 kHz mono
 */

export const SPECTRUM_TAG = 0x01;
export const AUDIO_TAG = 0x02;
export const AUDIO_RATE_HZ = 48000;

export interface SpectrumFrame {
  centerHz: number;
  spanHz: number;
  bins: Float32Array; // dB, lowest frequency first
}

export interface AudioFrame {
  pcm: Int16Array;
}

export type DataFrame =
  | { kind: 'spectrum'; frame: SpectrumFrame }
  | { kind: 'audio'; frame: AudioFrame };

export interface StatusMessage {
  type: 'status';
  state: string;
  offset_hz: number | null;
  mode: string | null;
  snr_db: number | null;
  quality: string | null;
}

export interface ErrorMessage {
  type: 'error';
  message: string;
}

export type ServerMessage = StatusMessage | ErrorMessage;

/** Decode one binary frame; null means malformed (caller counts drops). */
export function decodeFrame(data: ArrayBuffer): DataFrame | null {
  if (data.byteLength < 5) return null;
  const view = new DataView(data);
  const tag = view.getUint8(0);
  if (tag === SPECTRUM_TAG) {
    if (data.byteLength < 21) return null;
    const count = view.getUint32(1, true);
    const centerHz = view.getFloat64(5, true);
    const spanHz = view.getFloat64(13, true);
    if (data.byteLength !== 21 + 4 * count || spanHz <= 0) return null;
    const bins = new Float32Array(count);
    for (let i = 0; i < count; i++) bins[i] = view.getFloat32(21 + 4 * i, true);
    return { kind: 'spectrum', frame: { centerHz, spanHz, bins } };
  }
  if (tag === AUDIO_TAG) {
    const count = view.getUint32(1, true);
    if (data.byteLength !== 5 + 2 * count) return null;
    const pcm = new Int16Array(count);
    for (let i = 0; i < count; i++) pcm[i] = view.getInt16(5 + 2 * i, true);
    return { kind: 'audio', frame: { pcm } };
  }
  return null;
}

export function parseServerText(text: string): ServerMessage | null {
  try {
    const obj = JSON.parse(text);
    if (obj && (obj.type === 'status' || obj.type === 'error')) return obj as ServerMessage;
  } catch {
    /* malformed text is dropped, like malformed binary */
  }
  return null;
}

// --- outbound commands ---------------------------------------------------

export function tuneCommand(offsetHz: number): string {
  return JSON.stringify({ type: 'tune', offset_hz: offsetHz });
}

export function setModeCommand(mode: string, basebandHz?: number): string {
  const msg: Record<string, unknown> = { type: 'set_mode', mode };
  if (basebandHz !== undefined) msg.baseband_hz = basebandHz;
  return JSON.stringify(msg);
}

export function setGainCommand(gainDb: number): string {
  return JSON.stringify({ type: 'set_gain', gain_db: gainDb });
}

export function startRxCommand(): string {
  return JSON.stringify({ type: 'start_rx' });
}

export function stopCommand(which: 'rx' | 'tx' | 'all' = 'all'): string {
  return JSON.stringify({ type: 'stop', which });
}
