#!/usr/bin/env node
// Regenerates the checked-in toy dataset: 2 persons x 2 cameras x 3 frames
// of small deterministic PNGs. Run via `npm run make-fixtures`.

const fs = require("fs");
const path = require("path");
const { PNG } = require("pngjs");

const ROOT = path.join(__dirname, "..", "fixtures", "toy");
const W = 16;
const H = 20;

const PERSONS = {
  alice: { r: 200, g: 60, b: 40 },
  bob: { r: 40, g: 80, b: 210 },
};
const CAMERAS = { cam_a: 0, cam_b: 25 };

function makeFrame(base, cameraShift, frame) {
  const png = new PNG({ width: W, height: H });
  for (let y = 0; y < H; y++) {
    for (let x = 0; x < W; x++) {
      const i = (y * W + x) * 4;
      const stripe = (x + frame * 2) % 6 < 3 ? 22 : -22;
      const vertical = Math.round((y / H) * 40);
      png.data[i] = clamp(base.r + stripe + cameraShift);
      png.data[i + 1] = clamp(base.g + vertical + cameraShift);
      png.data[i + 2] = clamp(base.b - vertical + stripe);
      png.data[i + 3] = 255;
    }
  }
  return PNG.sync.write(png);
}

function clamp(v) {
  return Math.max(0, Math.min(255, v));
}

for (const [camera, shift] of Object.entries(CAMERAS)) {
  for (const [person, base] of Object.entries(PERSONS)) {
    const dir = path.join(ROOT, camera, person);
    fs.mkdirSync(dir, { recursive: true });
    for (let frame = 0; frame < 3; frame++) {
      const name = `f${String(frame).padStart(3, "0")}.png`;
      fs.writeFileSync(path.join(dir, name), makeFrame(base, shift, frame));
    }
  }
}
console.log(`wrote fixtures under ${ROOT}`);
