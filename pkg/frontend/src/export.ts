/**
 * Export a trained model for the benchmark harness: latent means as an
 * EMB1 embedding and the latent prior as a GMM JSON.
 */

import * as tf from "@tensorflow/tfjs";

import { writeEmbedding, writeGmm } from "./format.js";
import { VadeModel } from "./model.js";

export function embedAll(
  model: VadeModel,
  data: Float32Array,
  n: number,
  d: number,
  chunk = 1000,
): Float32Array {
  const h = model.cfg.latentDim;
  const out = new Float32Array(n * h);
  for (let start = 0; start < n; start += chunk) {
    const rows = Math.min(chunk, n - start);
    const x = tf.tensor2d(data.subarray(start * d, (start + rows) * d), [
      rows,
      d,
    ]);
    out.set(model.embed(x), start * h);
    x.dispose();
  }
  return out;
}

export function exportModel(
  model: VadeModel,
  data: Float32Array,
  n: number,
  d: number,
  labels: Int32Array | null,
  embeddingPath: string,
  gmmPath: string,
): void {
  const h = model.cfg.latentDim;
  const k = model.cfg.k;
  writeEmbedding(embeddingPath, embedAll(model, data, n, d), n, h, labels);
  const means = Float64Array.from(model.priorMeans.dataSync());
  const logVars = Float64Array.from(model.priorLogVars.dataSync());
  writeGmm(gmmPath, {
    k,
    d: h,
    weights: new Float64Array(k).fill(1 / k),
    means,
    variances: Float64Array.from(logVars, Math.exp),
  });
}
