/** Click-to-tune math: pixel position -> offset from the tuned center. */

/** Offset (Hz from center) for a click at pixel x of a width-px display
 * spanning spanHz around the center: left edge is -span/2, right +span/2. */
export function pixelToOffsetHz(x: number, width: number, spanHz: number): number {
  return spanHz * (x / width - 0.5);
}

/** Nearest step multiple, ties toward zero -- mirrors the server's rule
 * so the pending value matches what the acknowledgment will carry. */
export function snapToStep(offsetHz: number, stepHz: number): number {
  if (stepHz <= 0) return offsetHz;
  const q = offsetHz / stepHz;
  const n = q > 0 ? Math.ceil(q - 0.5) : Math.floor(q + 0.5);
  return n * stepHz;
}

/** Pixel column of an absolute frequency on a width-px display. */
export function frequencyToPixel(
  freqHz: number,
  centerHz: number,
  spanHz: number,
  width: number,
): number {
  return ((freqHz - centerHz) / spanHz + 0.5) * width;
}
