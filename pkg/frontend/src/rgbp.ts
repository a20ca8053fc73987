/**
 * Binary RGBP frame parsing.
 *
 * Layout: 10-byte header — magic "RGBP", version u8, reserved u8,
 * width u16 LE, height u16 LE — followed by row-major interleaved
 * R,G,B,P bytes. P bytes are strictly 0 or 255.
 */

export const RGBP_MAGIC = "RGBP";
export const RGBP_VERSION = 1;
export const HEADER_SIZE = 10;

export interface RgbpImage {
  width: number;
  height: number;
  /** RGBA pixel data suitable for ImageData (alpha forced to 255). */
  rgba: Uint8ClampedArray<ArrayBuffer>;
  /** Per-pixel foreground mask, 0 or 1, row-major. */
  pMask: Uint8Array;
}

export class RgbpFormatError extends Error {}

export function parseRgbp(buffer: ArrayBuffer): RgbpImage {
  if (buffer.byteLength < HEADER_SIZE) {
    throw new RgbpFormatError("truncated RGBP header");
  }
  const view = new DataView(buffer);
  const magic = String.fromCharCode(
    view.getUint8(0), view.getUint8(1), view.getUint8(2), view.getUint8(3),
  );
  if (magic !== RGBP_MAGIC) {
    throw new RgbpFormatError(`bad RGBP magic ${JSON.stringify(magic)}`);
  }
  const version = view.getUint8(4);
  if (version !== RGBP_VERSION) {
    throw new RgbpFormatError(`unsupported RGBP version ${version}`);
  }
  const width = view.getUint16(6, true);
  const height = view.getUint16(8, true);
  const expected = HEADER_SIZE + width * height * 4;
  if (buffer.byteLength !== expected) {
    throw new RgbpFormatError(
      `payload length ${buffer.byteLength} != expected ${expected}`,
    );
  }
  const payload = new Uint8Array(buffer, HEADER_SIZE);
  const n = width * height;
  const rgba = new Uint8ClampedArray(n * 4);
  const pMask = new Uint8Array(n);
  for (let i = 0; i < n; i++) {
    const p = payload[i * 4 + 3];
    if (p !== 0 && p !== 255) {
      throw new RgbpFormatError(`P channel byte must be 0 or 255, got ${p}`);
    }
    rgba[i * 4] = payload[i * 4];
    rgba[i * 4 + 1] = payload[i * 4 + 1];
    rgba[i * 4 + 2] = payload[i * 4 + 2];
    rgba[i * 4 + 3] = 255;
    pMask[i] = p === 255 ? 1 : 0;
  }
  return { width, height, rgba, pMask };
}

/**
 * Blend a red tint over foreground pixels so the P channel is visible
 * during playback. Returns a new RGBA buffer; strength in [0, 1].
 */
export function overlayForeground(
  image: RgbpImage, strength = 0.45,
): Uint8ClampedArray<ArrayBuffer> {
  const out = new Uint8ClampedArray(image.rgba);
  for (let i = 0; i < image.pMask.length; i++) {
    if (image.pMask[i] === 1) {
      out[i * 4] = out[i * 4] * (1 - strength) + 255 * strength;
      out[i * 4 + 1] = out[i * 4 + 1] * (1 - strength);
      out[i * 4 + 2] = out[i * 4 + 2] * (1 - strength);
    }
  }
  return out;
}
