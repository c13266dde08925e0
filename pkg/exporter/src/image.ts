import * as fs from "fs";
import * as path from "path";
import { PNG } from "pngjs";
import * as jpeg from "jpeg-js";

/** Decoded image as interleaved RGB, 8-bit per channel. */
export interface RgbImage {
  width: number;
  height: number;
  /** length = width * height * 3 */
  data: Uint8Array;
}

export function decodeImage(filePath: string): RgbImage {
  const raw = fs.readFileSync(filePath);
  const ext = path.extname(filePath).toLowerCase();
  if (ext === ".png") {
    const png = PNG.sync.read(raw);
    return stripAlpha(png.width, png.height, png.data);
  }
  if (ext === ".jpg" || ext === ".jpeg") {
    const img = jpeg.decode(raw, { useTArray: true, formatAsRGBA: true });
    return stripAlpha(img.width, img.height, img.data);
  }
  throw new Error(`unsupported image extension: ${filePath}`);
}

function stripAlpha(width: number, height: number, rgba: Uint8Array | Buffer): RgbImage {
  const data = new Uint8Array(width * height * 3);
  for (let i = 0, j = 0; i < width * height; i++, j += 4) {
    data[i * 3] = rgba[j];
    data[i * 3 + 1] = rgba[j + 1];
    data[i * 3 + 2] = rgba[j + 2];
  }
  return { width, height, data };
}

/** Bilinear resize; plain double-precision arithmetic, fully deterministic. */
export function resizeRgb(img: RgbImage, outW: number, outH: number): Float64Array {
  const out = new Float64Array(outW * outH * 3);
  const scaleX = img.width / outW;
  const scaleY = img.height / outH;
  for (let y = 0; y < outH; y++) {
    const srcY = Math.min((y + 0.5) * scaleY - 0.5, img.height - 1);
    const y0 = Math.max(0, Math.floor(srcY));
    const y1 = Math.min(img.height - 1, y0 + 1);
    const fy = srcY - y0;
    for (let x = 0; x < outW; x++) {
      const srcX = Math.min((x + 0.5) * scaleX - 0.5, img.width - 1);
      const x0 = Math.max(0, Math.floor(srcX));
      const x1 = Math.min(img.width - 1, x0 + 1);
      const fx = srcX - x0;
      for (let c = 0; c < 3; c++) {
        const p00 = img.data[(y0 * img.width + x0) * 3 + c];
        const p01 = img.data[(y0 * img.width + x1) * 3 + c];
        const p10 = img.data[(y1 * img.width + x0) * 3 + c];
        const p11 = img.data[(y1 * img.width + x1) * 3 + c];
        const top = p00 + (p01 - p00) * fx;
        const bottom = p10 + (p11 - p10) * fx;
        out[(y * outW + x) * 3 + c] = top + (bottom - top) * fy;
      }
    }
  }
  return out;
}

export function toGray(rgb: Float64Array, pixels: number): Float64Array {
  const gray = new Float64Array(pixels);
  for (let i = 0; i < pixels; i++) {
    gray[i] = 0.299 * rgb[i * 3] + 0.587 * rgb[i * 3 + 1] + 0.114 * rgb[i * 3 + 2];
  }
  return gray;
}

/**
 * Variance of the 4-neighbour Laplacian of the grayscale image, mapped onto
 * [0, 1) as v / (v + 60). Ordinary sharp frames land well above 0.5 (the
 * pipeline's default quality threshold); flat or heavily blurred frames
 * land near 0.
 */
export function blurQuality(img: RgbImage): number {
  const w = img.width;
  const h = img.height;
  const gray = new Float64Array(w * h);
  for (let i = 0; i < w * h; i++) {
    gray[i] = 0.299 * img.data[i * 3] + 0.587 * img.data[i * 3 + 1] + 0.114 * img.data[i * 3 + 2];
  }
  const values: number[] = [];
  for (let y = 1; y < h - 1; y++) {
    for (let x = 1; x < w - 1; x++) {
      const lap =
        gray[y * w + x - 1] +
        gray[y * w + x + 1] +
        gray[(y - 1) * w + x] +
        gray[(y + 1) * w + x] -
        4 * gray[y * w + x];
      values.push(lap);
    }
  }
  if (values.length === 0) return 1.0;
  let mean = 0;
  for (const v of values) mean += v;
  mean /= values.length;
  let variance = 0;
  for (const v of values) variance += (v - mean) * (v - mean);
  variance /= values.length;
  return variance / (variance + 60.0);
}
