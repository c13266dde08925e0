import * as fs from "fs";
import * as path from "path";

/** One tube to export: an ordered list of image files plus identity labels. */
export interface TubeSource {
  tubeId: string;
  cameraId: string;
  personId: string;
  /** absolute image paths in lexicographic filename order */
  images: string[];
}

export type LayoutName = "prid11" | "ilids" | "folders";

const IMAGE_EXTENSIONS = new Set([".png", ".jpg", ".jpeg"]);

function listDirs(dir: string): string[] {
  return fs
    .readdirSync(dir, { withFileTypes: true })
    .filter((e) => e.isDirectory())
    .map((e) => e.name)
    .sort();
}

function listImages(dir: string): string[] {
  return fs
    .readdirSync(dir, { withFileTypes: true })
    .filter((e) => e.isFile() && IMAGE_EXTENSIONS.has(path.extname(e.name).toLowerCase()))
    .map((e) => path.join(dir, e.name))
    .sort();
}

/**
 * Generic folder-of-tubes layout: root/<camera>/<person>/*.png|jpg, one
 * tube per (camera, person) directory.
 */
function scanFolders(root: string): TubeSource[] {
  const tubes: TubeSource[] = [];
  for (const camera of listDirs(root)) {
    for (const person of listDirs(path.join(root, camera))) {
      tubes.push({
        tubeId: `${person}_${camera}`,
        cameraId: camera,
        personId: person,
        images: listImages(path.join(root, camera, person)),
      });
    }
  }
  return tubes;
}

/**
 * PRID-2011 multi-shot layout: root[/multi_shot]/cam_a/person_0001/*.png.
 * Only persons appearing in both cameras are kept, up to `firstN` in
 * directory-name order.
 */
function scanPrid11(root: string, firstN: number): TubeSource[] {
  const base = fs.existsSync(path.join(root, "multi_shot"))
    ? path.join(root, "multi_shot")
    : root;
  const cameras = listDirs(base);
  if (cameras.length < 2) {
    throw new Error(`prid11 layout needs two camera directories under ${base}`);
  }
  const shared = cameras
    .map((cam) => new Set(listDirs(path.join(base, cam))))
    .reduce((a, b) => new Set([...a].filter((p) => b.has(p))));
  const persons = [...shared].sort().slice(0, firstN);
  const tubes: TubeSource[] = [];
  for (const camera of cameras) {
    for (const person of persons) {
      tubes.push({
        tubeId: `${person}_${camera}`,
        cameraId: camera,
        personId: person,
        images: listImages(path.join(base, camera, person)),
      });
    }
  }
  return tubes;
}

/** iLIDS-VID layout: root[/i-LIDS-VID]/sequences/cam1/person001/*.png. */
function scanIlids(root: string): TubeSource[] {
  let base = root;
  for (const candidate of [path.join(root, "i-LIDS-VID", "sequences"), path.join(root, "sequences")]) {
    if (fs.existsSync(candidate)) {
      base = candidate;
      break;
    }
  }
  return scanFolders(base);
}

export function scanLayout(root: string, layout: LayoutName, firstN: number): TubeSource[] {
  if (!fs.existsSync(root)) {
    throw new Error(`dataset root does not exist: ${root}`);
  }
  switch (layout) {
    case "folders":
      return scanFolders(root);
    case "prid11":
      return scanPrid11(root, firstN);
    case "ilids":
      return scanIlids(root);
    default:
      throw new Error(`unknown layout: ${layout}`);
  }
}
