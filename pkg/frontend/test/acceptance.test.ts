/**
 * End-to-end acceptance: train the mixture-prior variant on a planted
 * 8-cluster mixture produced by the benchmark harness, export the
 * latent embedding, and feed it back through the harness pipeline.
 * The embedded data must reach dendrogram purity >= 0.90 and an
 * objective ratio >= 0.95, within a 30 minute budget.
 */

import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { beforeAll, describe, expect, it } from "vitest";

import { initBackend } from "../src/backend.js";
import { exportModel } from "../src/export.js";
import { readEmbedding } from "../src/format.js";
import { train } from "../src/train.js";

beforeAll(async () => {
  await initBackend();
});

describe("planted-mixture acceptance", () => {
  it(
    "embedded data scores purity >= 0.90 and ratio >= 0.95 in the harness",
    () => {
      const dir = fs.mkdtempSync(path.join(os.tmpdir(), "vade-acc-"));
      const dataCfg = path.join(dir, "data_cfg.json");
      fs.writeFileSync(
        dataCfg,
        JSON.stringify({
          h: 3,
          margin: 8.0,
          alpha: 2.0,
          dim: 100,
          per_cluster: 250,
          seed: 0,
        }),
      );
      execFileSync("hierbench", [
        "--config",
        dataCfg,
        "--out",
        dir,
        "generate",
      ]);

      const { points, n, d, labels } = readEmbedding(
        path.join(dir, "data.emb1"),
      );
      const { model } = train(
        points,
        n,
        d,
        {
          k: 8,
          latentDim: 3,
          batchSize: 800,
          learningRate: 5e-4,
          epochs: 20,
          pretrainEpochs: 60,
          seed: 0,
        },
        "vade",
        (phase, epoch, value) =>
          console.log(`${phase} epoch ${epoch}: ${value.toFixed(4)}`),
      );
      exportModel(
        model,
        points,
        n,
        d,
        labels,
        path.join(dir, "embedded.emb1"),
        path.join(dir, "gmm.json"),
      );

      const evalCfg = path.join(dir, "eval_cfg.json");
      fs.writeFileSync(
        evalCfg,
        JSON.stringify({
          h: 3,
          margin: 8.0,
          alpha: 2.0,
          dim: 100,
          per_cluster: 250,
          seed: 0,
          embedding: "external",
          external_embedding: path.join(dir, "embedded.emb1"),
          external_labels: path.join(dir, "labels.csv"),
        }),
      );
      const out = path.join(dir, "results");
      execFileSync("hierbench", [
        "--config",
        evalCfg,
        "--out",
        out,
        "pipeline",
      ]);
      const agg = JSON.parse(
        fs.readFileSync(path.join(out, "aggregate.json"), "utf8"),
      );
      console.log(
        `dp ${agg.dp.mean.toFixed(4)} mw_ratio ${agg.mw_ratio.mean.toFixed(4)}`,
      );
      expect(agg.dp.mean).toBeGreaterThanOrEqual(0.9);
      expect(agg.mw_ratio.mean).toBeGreaterThanOrEqual(0.95);
    },
    1_800_000,
  );
});
