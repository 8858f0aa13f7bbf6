/**
 * Command line for training and exporting latent embeddings.
 *
 * `train` reads a dataset in EMB1 form, trains either a plain VAE or the
 * mixture-prior variant, and writes the latent embedding (EMB1), the
 * prior parameters (GMM JSON), and a per-epoch objective log (CSV).
 */

import * as fs from "node:fs";
import * as path from "node:path";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { initBackend } from "./backend.js";
import { exportModel } from "./export.js";
import { readEmbedding } from "./format.js";
import { train, TRAIN_DEFAULTS, TrainConfig } from "./train.js";
import { Variant } from "./model.js";

export async function run(argv: string[]): Promise<void> {
  await yargs(argv)
    .command(
      "train",
      "train on an EMB1 dataset and export the latent embedding",
      (y) =>
        y
          .option("input", { type: "string", demandOption: true })
          .option("out", { type: "string", demandOption: true })
          .option("variant", {
            choices: ["vae", "vade"] as const,
            default: "vade" as Variant,
          })
          .option("k", { type: "number", default: 8 })
          .option("latent", { type: "number", default: 3 })
          .option("batch", { type: "number", default: TRAIN_DEFAULTS.batchSize })
          .option("lr", { type: "number", default: TRAIN_DEFAULTS.learningRate })
          .option("epochs", { type: "number", default: TRAIN_DEFAULTS.epochs })
          .option("pretrain-epochs", {
            type: "number",
            default: TRAIN_DEFAULTS.pretrainEpochs,
          })
          .option("seed", { type: "number", default: TRAIN_DEFAULTS.seed }),
      async (args) => {
        console.log(`backend: ${await initBackend()}`);
        const { points, n, d, labels } = readEmbedding(args.input);
        const cfg: TrainConfig = {
          k: args.k,
          latentDim: args.latent,
          batchSize: args.batch,
          learningRate: args.lr,
          epochs: args.epochs,
          pretrainEpochs: args["pretrain-epochs"],
          seed: args.seed,
        };
        fs.mkdirSync(args.out, { recursive: true });
        const rows: string[] = ["phase,epoch,value"];
        const { model, log } = train(
          points,
          n,
          d,
          cfg,
          args.variant as Variant,
          (phase, epoch, value) => {
            rows.push(`${phase},${epoch},${value}`);
            console.log(`${phase} epoch ${epoch}: ${value.toFixed(4)}`);
          },
        );
        fs.writeFileSync(
          path.join(args.out, "training_log.csv"),
          rows.join("\n") + "\n",
        );
        exportModel(
          model,
          points,
          n,
          d,
          labels,
          path.join(args.out, "embedded.emb1"),
          path.join(args.out, "gmm.json"),
        );
        console.log(
          `exported ${n}x${cfg.latentDim} embedding and ` +
            `${cfg.k}-component prior to ${args.out}`,
        );
        void log;
      },
    )
    .demandCommand(1)
    .strict()
    .parseAsync();
}
