/**
 * Interchange formats shared with the benchmark harness.
 *
 * EMB1 layout (little-endian): magic "EMB1", u32 version=1, u32 n, u32 d,
 * n*d float32 row-major, u8 label flag, then n i32 labels if the flag
 * is 1.  The GMM JSON stores every float as a string with 17 significant
 * digits so doubles survive the round trip exactly.
 */

import * as fs from "node:fs";

export interface Embedding {
  points: Float32Array;
  n: number;
  d: number;
  labels: Int32Array | null;
}

export interface GmmJson {
  weights: Float64Array;
  means: Float64Array; // k * d row-major
  variances: Float64Array; // spherical, length k
  k: number;
  d: number;
}

const MAGIC = "EMB1";
const VERSION = 1;

export class FormatError extends Error {}

export function writeEmbedding(
  path: string,
  points: Float32Array,
  n: number,
  d: number,
  labels: Int32Array | null = null,
): void {
  if (points.length !== n * d) {
    throw new FormatError(`points length ${points.length} is not n*d`);
  }
  if (labels !== null && labels.length !== n) {
    throw new FormatError(`labels length ${labels.length} is not n`);
  }
  const size = 4 + 12 + 4 * n * d + 1 + (labels ? 4 * n : 0);
  const buf = Buffer.alloc(size);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt32LE(VERSION, 4);
  buf.writeUInt32LE(n, 8);
  buf.writeUInt32LE(d, 12);
  Buffer.from(points.buffer, points.byteOffset, 4 * n * d).copy(buf, 16);
  buf.writeUInt8(labels ? 1 : 0, 16 + 4 * n * d);
  if (labels) {
    Buffer.from(labels.buffer, labels.byteOffset, 4 * n).copy(
      buf,
      17 + 4 * n * d,
    );
  }
  fs.writeFileSync(path, buf);
}

export function readEmbedding(path: string): Embedding {
  const buf = fs.readFileSync(path);
  if (buf.length < 17 || buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new FormatError("bad magic");
  }
  const version = buf.readUInt32LE(4);
  if (version !== VERSION) {
    throw new FormatError(`unsupported version ${version}`);
  }
  const n = buf.readUInt32LE(8);
  const d = buf.readUInt32LE(12);
  const body = 16 + 4 * n * d;
  if (buf.length < body + 1) {
    throw new FormatError("truncated points payload");
  }
  const points = new Float32Array(n * d);
  for (let i = 0; i < n * d; i++) {
    points[i] = buf.readFloatLE(16 + 4 * i);
  }
  for (const v of points) {
    if (!Number.isFinite(v)) {
      throw new FormatError("non-finite value in points payload");
    }
  }
  const flag = buf.readUInt8(body);
  let labels: Int32Array | null = null;
  let end = body + 1;
  if (flag === 1) {
    if (buf.length < end + 4 * n) {
      throw new FormatError("truncated labels payload");
    }
    labels = new Int32Array(n);
    for (let i = 0; i < n; i++) {
      labels[i] = buf.readInt32LE(end + 4 * i);
    }
    end += 4 * n;
  } else if (flag !== 0) {
    throw new FormatError(`bad label flag ${flag}`);
  }
  if (buf.length !== end) {
    throw new FormatError("trailing bytes after payload");
  }
  return { points, n, d, labels };
}

/** 17 significant digits reproduce any double exactly on re-parse. */
export function formatDouble(x: number): string {
  if (!Number.isFinite(x)) {
    throw new FormatError(`non-finite value ${x}`);
  }
  if (Number.isInteger(x) && Math.abs(x) < 1e15) {
    return x.toString();
  }
  return x.toPrecision(17);
}

export function writeGmm(path: string, gmm: GmmJson): void {
  const means: string[][] = [];
  for (let c = 0; c < gmm.k; c++) {
    const row: string[] = [];
    for (let j = 0; j < gmm.d; j++) {
      row.push(formatDouble(gmm.means[c * gmm.d + j]));
    }
    means.push(row);
  }
  const payload = {
    k: gmm.k,
    dim: gmm.d,
    weights: Array.from(gmm.weights, formatDouble),
    means,
    variances: Array.from(gmm.variances, formatDouble),
  };
  fs.writeFileSync(path, JSON.stringify(payload, null, 2) + "\n");
}

export function readGmm(path: string): GmmJson {
  const payload = JSON.parse(fs.readFileSync(path, "utf8"));
  const k = payload.k as number;
  const d = payload.dim as number;
  const weights = Float64Array.from(payload.weights, Number);
  const variances = Float64Array.from(payload.variances, Number);
  const means = new Float64Array(k * d);
  for (let c = 0; c < k; c++) {
    for (let j = 0; j < d; j++) {
      means[c * d + j] = Number(payload.means[c][j]);
    }
  }
  if (weights.length !== k || variances.length !== k) {
    throw new FormatError("GMM JSON shape mismatch");
  }
  return { weights, means, variances, k, d };
}

export function writeLabels(
  path: string,
  flat: Int32Array,
  levels: Int32Array[] | null = null,
): void {
  const header = ["index", "label"];
  if (levels) {
    for (let j = 0; j < levels.length; j++) {
      header.push(`l${j + 1}`);
    }
  }
  const lines = [header.join(",")];
  for (let i = 0; i < flat.length; i++) {
    const row = [String(i), String(flat[i])];
    if (levels) {
      for (const col of levels) {
        row.push(String(col[i]));
      }
    }
    lines.push(row.join(","));
  }
  fs.writeFileSync(path, lines.join("\r\n") + "\r\n");
}
