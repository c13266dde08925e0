#!/usr/bin/env node
/**
 * Exports image-sequence re-id datasets to the tube-rank gallery JSONL
 * format: one record per frame, channels computed by per-channel feature
 * backbones, records grouped by tube in lexicographic filename order.
 */

import * as fs from "fs";
import { parseArgs } from "util";

import { getBackbone, Backbone } from "./backbones";
import { blurQuality, decodeImage } from "./image";
import { recordToJson } from "./jsonl";
import { LayoutName, scanLayout, TubeSource } from "./layouts";

const FRAME_INTERVAL_MS = 40;
const DEFAULT_CHANNELS = "retrieval=builtin,selfsim=builtin,pose=builtin";

export interface ExportManifest {
  root: string;
  layout: LayoutName;
  out: string;
  /** channel name -> backbone name */
  channels: Record<string, string>;
  /** prid11 only: keep the first N persons present in both cameras */
  firstN: number;
  /** when true, quality = normalized variance-of-Laplacian; else 1.0 */
  blurQuality: boolean;
}

export interface ExportSummary {
  tubes_written: number;
  records_written: number;
  images_skipped: number;
  tubes_dropped: number;
}

export function parseChannels(spec: string): Record<string, string> {
  const channels: Record<string, string> = {};
  for (const part of spec.split(",")) {
    if (!part) continue;
    const eq = part.indexOf("=");
    if (eq <= 0) {
      throw new Error(`bad channel spec '${part}'; expected name=backbone`);
    }
    channels[part.slice(0, eq).trim()] = part.slice(eq + 1).trim();
  }
  if (Object.keys(channels).length === 0) {
    throw new Error("at least one channel is required");
  }
  return channels;
}

export function exportDataset(
  manifest: ExportManifest,
  warn: (message: string) => void = (m) => process.stderr.write(m + "\n")
): ExportSummary {
  const backbones: Array<[string, Backbone]> = Object.entries(manifest.channels).map(
    ([channel, name]) => [channel, getBackbone(name)]
  );
  const tubes = scanLayout(manifest.root, manifest.layout, manifest.firstN);
  const summary: ExportSummary = {
    tubes_written: 0,
    records_written: 0,
    images_skipped: 0,
    tubes_dropped: 0,
  };
  const lines: string[] = [];
  for (const tube of tubes) {
    const written = exportTube(tube, backbones, manifest.blurQuality, lines, summary, warn);
    if (written === 0) {
      summary.tubes_dropped += 1;
      warn(`warning: tube ${tube.tubeId} has no readable frames; dropped`);
    } else {
      summary.tubes_written += 1;
    }
  }
  fs.writeFileSync(manifest.out, lines.map((l) => l + "\n").join(""), "utf-8");
  return summary;
}

function exportTube(
  tube: TubeSource,
  backbones: Array<[string, Backbone]>,
  useBlurQuality: boolean,
  lines: string[],
  summary: ExportSummary,
  warn: (message: string) => void
): number {
  let written = 0;
  for (let position = 0; position < tube.images.length; position++) {
    const imagePath = tube.images[position];
    let img;
    try {
      img = decodeImage(imagePath);
    } catch (err) {
      summary.images_skipped += 1;
      warn(`warning: skipping unreadable image ${imagePath}: ${(err as Error).message}`);
      continue;
    }
    const embeddings: Record<string, number[]> = {};
    for (const [channel, backbone] of backbones) {
      embeddings[channel] = backbone(img);
    }
    lines.push(
      recordToJson({
        tube_id: tube.tubeId,
        camera_id: tube.cameraId,
        frame_index: position,
        timestamp_ms: position * FRAME_INTERVAL_MS,
        quality: useBlurQuality ? blurQuality(img) : 1.0,
        embeddings,
        person_id: tube.personId,
      })
    );
    written += 1;
    summary.records_written += 1;
  }
  return written;
}

export function main(argv: string[]): number {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        root: { type: "string" },
        layout: { type: "string", default: "folders" },
        out: { type: "string" },
        channels: { type: "string", default: DEFAULT_CHANNELS },
        "first-n": { type: "string", default: "200" },
        "blur-quality": { type: "boolean", default: false },
      },
    }));
  } catch (err) {
    process.stderr.write(`usage error: ${(err as Error).message}\n`);
    return 1;
  }
  if (!values.root || !values.out) {
    process.stderr.write("usage error: --root and --out are required\n");
    return 1;
  }
  if (!["prid11", "ilids", "folders"].includes(values.layout!)) {
    process.stderr.write(`usage error: unknown layout '${values.layout}'\n`);
    return 1;
  }
  const firstN = Number(values["first-n"]);
  if (!Number.isInteger(firstN) || firstN < 1) {
    process.stderr.write("usage error: --first-n must be a positive integer\n");
    return 1;
  }
  let manifest: ExportManifest;
  try {
    manifest = {
      root: values.root,
      layout: values.layout as LayoutName,
      out: values.out,
      channels: parseChannels(values.channels!),
      firstN,
      blurQuality: values["blur-quality"]!,
    };
    const summary = exportDataset(manifest);
    process.stderr.write(JSON.stringify(summary) + "\n");
    return 0;
  } catch (err) {
    process.stderr.write(`export error: ${(err as Error).message}\n`);
    return 2;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
