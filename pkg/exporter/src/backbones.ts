import { RgbImage, resizeRgb, toGray } from "./image";

/**
 * A backbone turns a decoded frame into a dense feature vector. The two
 * builtin extractors are handcrafted and weight-free so exports work
 * offline and are bit-reproducible; model-backed backbones can be added
 * to the registry under their own names.
 */
export type Backbone = (img: RgbImage) => number[];

const GRID = 4;
const CELL = 8;
const SIZE = GRID * CELL; // images are resized to 32x32

/** Per-cell RGB means and standard deviations on a 4x4 grid: 96 dims. */
function colorGrid(img: RgbImage): number[] {
  const rgb = resizeRgb(img, SIZE, SIZE);
  const features: number[] = [];
  for (let gy = 0; gy < GRID; gy++) {
    for (let gx = 0; gx < GRID; gx++) {
      for (let c = 0; c < 3; c++) {
        let sum = 0;
        let sumSq = 0;
        for (let y = gy * CELL; y < (gy + 1) * CELL; y++) {
          for (let x = gx * CELL; x < (gx + 1) * CELL; x++) {
            const v = rgb[(y * SIZE + x) * 3 + c] / 255.0;
            sum += v;
            sumSq += v * v;
          }
        }
        const n = CELL * CELL;
        const mean = sum / n;
        const variance = Math.max(sumSq / n - mean * mean, 0);
        features.push(mean, Math.sqrt(variance));
      }
    }
  }
  return features;
}

/** Gradient-orientation histograms (8 bins) on a 2x2 grid: 32 dims. */
function gradientHistogram(img: RgbImage): number[] {
  const rgb = resizeRgb(img, SIZE, SIZE);
  const gray = toGray(rgb, SIZE * SIZE);
  const bins = 8;
  const half = SIZE / 2;
  const features = new Array<number>(4 * bins).fill(0);
  for (let y = 1; y < SIZE - 1; y++) {
    for (let x = 1; x < SIZE - 1; x++) {
      const gx = gray[y * SIZE + x + 1] - gray[y * SIZE + x - 1];
      const gy = gray[(y + 1) * SIZE + x] - gray[(y - 1) * SIZE + x];
      const magnitude = Math.sqrt(gx * gx + gy * gy);
      if (magnitude === 0) continue;
      let angle = Math.atan2(gy, gx); // [-pi, pi]
      if (angle < 0) angle += Math.PI;
      let bin = Math.floor((angle / Math.PI) * bins);
      if (bin >= bins) bin = bins - 1;
      const cell = (y < half ? 0 : 2) + (x < half ? 0 : 1);
      features[cell * bins + bin] += magnitude / 255.0;
    }
  }
  return features;
}

export const BACKBONES: Record<string, Backbone> = {
  builtin: colorGrid,
  "builtin-hog": gradientHistogram,
};

export function getBackbone(name: string): Backbone {
  const backbone = BACKBONES[name];
  if (!backbone) {
    throw new Error(
      `unknown backbone '${name}' (available: ${Object.keys(BACKBONES).sort().join(", ")})`
    );
  }
  return backbone;
}
