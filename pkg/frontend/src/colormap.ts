/** Waterfall color map: monotone intensity over a configurable dB range. */

export interface DbRange {
  floorDb: number;
  ceilDb: number;
}

export const DEFAULT_RANGE: DbRange = { floorDb: -120, ceilDb: 0 };

/** Map a dB value to a palette index 0..255, clamped, monotone in dB. */
export function dbToIndex(db: number, range: DbRange = DEFAULT_RANGE): number {
  const t = (db - range.floorDb) / (range.ceilDb - range.floorDb);
  return Math.max(0, Math.min(255, Math.round(t * 255)));
}

// dark blue -> cyan -> yellow -> red, classic waterfall idiom
const ANCHORS: [number, [number, number, number]][] = [
  [0, [0, 0, 32]],
  [64, [0, 64, 160]],
  [128, [0, 200, 200]],
  [192, [255, 230, 0]],
  [255, [255, 40, 0]],
];

function buildPalette(): Uint8ClampedArray {
  const palette = new Uint8ClampedArray(256 * 3);
  for (let seg = 0; seg < ANCHORS.length - 1; seg++) {
    const [i0, c0] = ANCHORS[seg];
    const [i1, c1] = ANCHORS[seg + 1];
    for (let i = i0; i <= i1; i++) {
      const t = (i - i0) / (i1 - i0);
      for (let ch = 0; ch < 3; ch++) {
        palette[3 * i + ch] = Math.round(c0[ch] + t * (c1[ch] - c0[ch]));
      }
    }
  }
  return palette;
}

export const PALETTE: Uint8ClampedArray = buildPalette();

/** RGB triple for a dB value. */
export function dbToRgb(db: number, range: DbRange = DEFAULT_RANGE): [number, number, number] {
  const i = 3 * dbToIndex(db, range);
  return [PALETTE[i], PALETTE[i + 1], PALETTE[i + 2]];
}
