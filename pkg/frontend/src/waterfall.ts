/** Waterfall model: a ring of spectrum rows rendered newest-at-top.
 *
 * The model is DOM-free (it fills a plain RGBA pixel buffer) so the
 * rendering math is unit-testable; the canvas wrapper in main.ts blits
 * the buffer and draws the axis labels.
 */

import { DbRange, DEFAULT_RANGE, dbToIndex, PALETTE } from './colormap';
import type { SpectrumFrame } from './protocol';

export const HISTORY_ROWS = 256;

export class WaterfallModel {
  readonly rows: Float32Array[] = [];
  centerHz = 0;
  spanHz = 0;
  range: DbRange = { ...DEFAULT_RANGE };

  push(frame: SpectrumFrame): void {
    this.centerHz = frame.centerHz;
    this.spanHz = frame.spanHz;
    this.rows.unshift(frame.bins); // newest first
    if (this.rows.length > HISTORY_ROWS) this.rows.pop();
  }

  get binCount(): number {
    return this.rows.length ? this.rows[0].length : 0;
  }

  /** Mean dB per bin over the history (bright columns = stations). */
  columnProfile(): Float32Array {
    const n = this.binCount;
    const profile = new Float32Array(n);
    if (!this.rows.length) return profile;
    for (const row of this.rows) {
      for (let i = 0; i < n; i++) profile[i] += row[i];
    }
    for (let i = 0; i < n; i++) profile[i] /= this.rows.length;
    return profile;
  }

  /** Fill an RGBA buffer of width x height pixels, newest row at y=0. */
  render(pixels: Uint8ClampedArray, width: number, height: number): void {
    const n = this.binCount;
    if (!n) {
      pixels.fill(0);
      for (let i = 3; i < pixels.length; i += 4) pixels[i] = 255;
      return;
    }
    for (let y = 0; y < height; y++) {
      // display row y shows history slot floor(y * HISTORY / height);
      // slots with no frame yet render as the floor color
      const slot = Math.floor((y * HISTORY_ROWS) / height);
      const row = slot < this.rows.length ? this.rows[slot] : null;
      for (let x = 0; x < width; x++) {
        const bin = Math.min(n - 1, Math.floor((x * n) / width));
        const db = row ? row[bin] : this.range.floorDb;
        const idx = 3 * dbToIndex(db, this.range);
        const o = 4 * (y * width + x);
        pixels[o] = PALETTE[idx];
        pixels[o + 1] = PALETTE[idx + 1];
        pixels[o + 2] = PALETTE[idx + 2];
        pixels[o + 3] = 255;
      }
    }
  }

  /** Absolute-frequency axis labels for a width-px display. */
  axisLabels(count = 5): { frequencyHz: number; fraction: number }[] {
    const labels = [];
    for (let i = 0; i < count; i++) {
      const fraction = i / (count - 1);
      labels.push({
        frequencyHz: this.centerHz - this.spanHz / 2 + fraction * this.spanHz,
        fraction,
      });
    }
    return labels;
  }
}
