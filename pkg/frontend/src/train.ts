/**
 * Training schedule: autoencoder pretraining, mixture initialization
 * from the pretrained codes, then ELBO optimization.
 */

import * as tf from "@tensorflow/tfjs";

import { gmmFit } from "./gmm.js";
import { ModelConfig, VadeModel, Variant } from "./model.js";

export interface TrainConfig {
  k: number;
  latentDim: number;
  batchSize: number;
  learningRate: number;
  epochs: number;
  pretrainEpochs: number;
  seed: number;
}

export const TRAIN_DEFAULTS = {
  batchSize: 800,
  learningRate: 5e-4,
  epochs: 20,
  pretrainEpochs: 60,
  seed: 0,
};

export interface TrainLog {
  pretrainLoss: number[];
  elbo: number[]; // per epoch, higher is better
}

export class DivergenceError extends Error {
  constructor(public epoch: number) {
    super(`training diverged (non-finite loss) at epoch ${epoch}`);
  }
}

function batches(n: number, size: number): Array<[number, number]> {
  const out: Array<[number, number]> = [];
  for (let start = 0; start < n; start += size) {
    out.push([start, Math.min(start + size, n)]);
  }
  return out;
}

export function train(
  data: Float32Array,
  n: number,
  d: number,
  cfg: TrainConfig,
  variant: Variant,
  onEpoch?: (phase: string, epoch: number, value: number) => void,
): { model: VadeModel; log: TrainLog } {
  const modelCfg: ModelConfig = {
    inputDim: d,
    latentDim: cfg.latentDim,
    k: cfg.k,
    seed: cfg.seed,
  };
  const model = new VadeModel(modelCfg);
  const x = tf.tensor2d(data, [n, d]);
  const log: TrainLog = { pretrainLoss: [], elbo: [] };
  const slices = batches(n, cfg.batchSize);
  let noiseSeed = cfg.seed * 7919 + 1;

  const pretrainOpt = tf.train.adam(cfg.learningRate * 2);
  const pretrainVars = model.trainableWeights(false);
  for (let epoch = 0; epoch < cfg.pretrainEpochs; epoch++) {
    let total = 0;
    for (const [a, b] of slices) {
      const xb = x.slice([a, 0], [b - a, d]) as tf.Tensor2D;
      const loss = pretrainOpt.minimize(
        () => model.pretrainLoss(xb),
        true,
        pretrainVars,
      ) as tf.Scalar;
      total += (loss.dataSync()[0] * (b - a)) / n;
      loss.dispose();
      xb.dispose();
    }
    if (!Number.isFinite(total)) {
      throw new DivergenceError(epoch);
    }
    log.pretrainLoss.push(total);
    onEpoch?.("pretrain", epoch, total);
  }
  pretrainOpt.dispose();

  if (variant === "vade") {
    // initialize the latent prior from a mixture fit on pretrained codes
    const codes = model.embed(x);
    const codes64 = Float64Array.from(codes);
    const gmm = gmmFit(codes64, n, cfg.latentDim, cfg.k, cfg.seed);
    model.priorMeans.assign(
      tf.tensor2d(Float32Array.from(gmm.means), [cfg.k, cfg.latentDim]),
    );
    model.priorLogVars.assign(
      tf.tensor1d(Float32Array.from(gmm.variances, Math.log)),
    );
  }

  const opt = tf.train.adam(cfg.learningRate);
  const vars = model.trainableWeights(variant === "vade");
  for (let epoch = 0; epoch < cfg.epochs; epoch++) {
    let total = 0;
    for (const [a, b] of slices) {
      const xb = x.slice([a, 0], [b - a, d]) as tf.Tensor2D;
      noiseSeed += 1;
      const seed = noiseSeed;
      const loss = opt.minimize(
        () => model.negElbo(xb, variant, seed),
        true,
        vars,
      ) as tf.Scalar;
      total += (loss.dataSync()[0] * (b - a)) / n;
      loss.dispose();
      xb.dispose();
    }
    if (!Number.isFinite(total)) {
      throw new DivergenceError(epoch);
    }
    log.elbo.push(-total);
    onEpoch?.(variant, epoch, -total);
  }
  opt.dispose();
  x.dispose();
  return { model, log };
}
