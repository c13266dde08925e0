/** Gallery JSONL record construction with float32 decimal renderings. */

export interface FrameRecord {
  tube_id: string;
  camera_id: string;
  frame_index: number;
  timestamp_ms: number;
  quality: number;
  embeddings: Record<string, number[]>;
  person_id?: string;
}

/**
 * Shortest decimal string that parses back to the same 32-bit float, so a
 * loader that stores float32 reproduces the vector bit-exactly.
 */
export function renderFloat32(value: number): string {
  const v = Math.fround(value);
  if (!Number.isFinite(v)) {
    throw new Error(`non-finite embedding value: ${value}`);
  }
  if (Number.isInteger(v)) {
    return v.toString();
  }
  for (let precision = 1; precision <= 9; precision++) {
    const s = v.toPrecision(precision);
    if (Math.fround(Number(s)) === v) {
      return s;
    }
  }
  return v.toString();
}

export function recordToJson(record: FrameRecord): string {
  const channels = Object.keys(record.embeddings)
    .map((name) => {
      const values = record.embeddings[name].map(renderFloat32).join(",");
      return `${JSON.stringify(name)}:[${values}]`;
    })
    .join(",");
  let line =
    `{"tube_id":${JSON.stringify(record.tube_id)}` +
    `,"camera_id":${JSON.stringify(record.camera_id)}` +
    `,"frame_index":${record.frame_index}` +
    `,"timestamp_ms":${record.timestamp_ms}` +
    `,"quality":${JSON.stringify(record.quality)}` +
    `,"embeddings":{${channels}}`;
  if (record.person_id !== undefined) {
    line += `,"person_id":${JSON.stringify(record.person_id)}`;
  }
  return line + "}";
}
