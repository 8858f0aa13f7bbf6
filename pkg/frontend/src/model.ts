/**
 * Variational autoencoder with an optional Gaussian-mixture latent prior.
 *
 * Encoder is fully connected d-2000-500-500 with linear heads for the
 * latent mean and log variance; the decoder mirrors it as h-500-500-2000
 * with linear heads for the output mean and log variance.  The mixture
 * prior keeps uniform component weights; its means and per-component
 * spherical log variances are trained jointly with the networks.
 */

import * as tf from "@tensorflow/tfjs";

export type Variant = "vae" | "vade";

export interface ModelConfig {
  inputDim: number;
  latentDim: number;
  k: number;
  seed: number;
}

const HIDDEN = [2000, 500, 500];

function mlp(
  name: string,
  inputDim: number,
  sizes: number[],
  seed: number,
): tf.Sequential {
  const model = tf.sequential({ name });
  sizes.forEach((units, i) => {
    model.add(
      tf.layers.dense({
        units,
        activation: "relu",
        inputShape: i === 0 ? [inputDim] : undefined,
        kernelInitializer: tf.initializers.glorotUniform({ seed: seed + i }),
        biasInitializer: "zeros",
      }),
    );
  });
  return model;
}

function head(name: string, inputDim: number, units: number, seed: number): tf.Sequential {
  const model = tf.sequential({ name });
  model.add(
    tf.layers.dense({
      units,
      inputShape: [inputDim],
      kernelInitializer: tf.initializers.glorotUniform({ seed }),
      biasInitializer: "zeros",
    }),
  );
  return model;
}

export class VadeModel {
  readonly cfg: ModelConfig;
  readonly encoderTrunk: tf.Sequential;
  readonly encMean: tf.Sequential;
  readonly encLogVar: tf.Sequential;
  readonly decoderTrunk: tf.Sequential;
  readonly decMean: tf.Sequential;
  readonly decLogVar: tf.Sequential;
  /** mixture prior state, shape [k, latentDim] and [k] */
  priorMeans: tf.Variable;
  priorLogVars: tf.Variable;

  constructor(cfg: ModelConfig) {
    this.cfg = cfg;
    const s = cfg.seed;
    this.encoderTrunk = mlp("enc", cfg.inputDim, HIDDEN, s);
    this.encMean = head("encMean", HIDDEN[2], cfg.latentDim, s + 10);
    this.encLogVar = head("encLogVar", HIDDEN[2], cfg.latentDim, s + 11);
    const rev = [...HIDDEN].reverse();
    this.decoderTrunk = mlp("dec", cfg.latentDim, rev, s + 20);
    this.decMean = head("decMean", rev[2], cfg.inputDim, s + 30);
    this.decLogVar = head("decLogVar", rev[2], cfg.inputDim, s + 31);
    this.priorMeans = tf.variable(
      tf.randomNormal([cfg.k, cfg.latentDim], 0, 1, "float32", s + 40),
    );
    this.priorLogVars = tf.variable(tf.zeros([cfg.k]));
  }

  encode(x: tf.Tensor2D): { mean: tf.Tensor2D; logVar: tf.Tensor2D } {
    const hEnc = this.encoderTrunk.apply(x) as tf.Tensor2D;
    return {
      mean: this.encMean.apply(hEnc) as tf.Tensor2D,
      logVar: this.encLogVar.apply(hEnc) as tf.Tensor2D,
    };
  }

  decode(z: tf.Tensor2D): { mean: tf.Tensor2D; logVar: tf.Tensor2D } {
    const hDec = this.decoderTrunk.apply(z) as tf.Tensor2D;
    return {
      mean: this.decMean.apply(hDec) as tf.Tensor2D,
      logVar: this.decLogVar.apply(hDec) as tf.Tensor2D,
    };
  }

  trainableWeights(includePrior: boolean): tf.Variable[] {
    const nets = [
      this.encoderTrunk,
      this.encMean,
      this.encLogVar,
      this.decoderTrunk,
      this.decMean,
      this.decLogVar,
    ];
    const vars = nets.flatMap((m) =>
      m.trainableWeights.map((w) => w.read() as unknown as tf.Variable),
    );
    if (includePrior) {
      vars.push(this.priorMeans, this.priorLogVars);
    }
    return vars;
  }

  /** Gaussian log density of x under the decoder output, summed over dims. */
  private reconLogLik(
    x: tf.Tensor2D,
    mean: tf.Tensor2D,
    logVar: tf.Tensor2D,
  ): tf.Tensor1D {
    const sq = tf.square(tf.sub(x, mean));
    const terms = tf.add(
      tf.add(logVar, tf.scalar(Math.log(2 * Math.PI))),
      tf.div(sq, tf.exp(logVar)),
    );
    return tf.mul(tf.scalar(-0.5), tf.sum(terms, 1)) as tf.Tensor1D;
  }

  /** Mean negative evidence lower bound over the batch. */
  negElbo(x: tf.Tensor2D, variant: Variant, seed: number): tf.Scalar {
    return tf.tidy(() => {
      const { mean: zMean, logVar: zLogVar } = this.encode(x);
      const eps = tf.randomNormal(zMean.shape, 0, 1, "float32", seed);
      const z = tf.add(
        zMean,
        tf.mul(tf.exp(tf.mul(zLogVar, 0.5)), eps),
      ) as tf.Tensor2D;
      const dec = this.decode(z);
      const recon = this.reconLogLik(x, dec.mean, dec.logVar);

      let elbo: tf.Tensor1D;
      if (variant === "vae") {
        // KL(q(z|x) || N(0, I)) in closed form
        const kl = tf.mul(
          tf.scalar(-0.5),
          tf.sum(
            tf.sub(
              tf.add(tf.scalar(1), zLogVar),
              tf.add(tf.square(zMean), tf.exp(zLogVar)),
            ),
            1,
          ),
        );
        elbo = tf.sub(recon, kl) as tf.Tensor1D;
      } else {
        const h = this.cfg.latentDim;
        const k = this.cfg.k;
        // log N(z_i; mu_c, sigma_c^2 I) for all pairs, [n, k]
        const zExp = tf.expandDims(z, 1); // [n, 1, h]
        const muExp = tf.expandDims(this.priorMeans, 0); // [1, k, h]
        const sqd = tf.sum(tf.square(tf.sub(zExp, muExp)), 2); // [n, k]
        const logVarC = tf.reshape(this.priorLogVars, [1, k]);
        const logPdf = tf.sub(
          tf.mul(
            tf.scalar(-0.5 * h),
            tf.add(logVarC, tf.scalar(Math.log(2 * Math.PI))),
          ),
          tf.div(sqd, tf.mul(tf.exp(logVarC), 2)),
        ); // [n, k]
        // uniform component prior
        const logPrior = tf.add(logPdf, tf.scalar(Math.log(1 / k)));
        const gamma = tf.softmax(logPrior, 1); // [n, k]
        const logGamma = tf.logSoftmax(logPrior, 1);

        // E_q[log p(z|c)] with q's variance integrated in closed form
        const zMeanExp = tf.expandDims(zMean, 1);
        const meanSq = tf.sum(tf.square(tf.sub(zMeanExp, muExp)), 2); // [n, k]
        const qVarSum = tf.reshape(tf.sum(tf.exp(zLogVar), 1), [-1, 1]);
        const expLogPz = tf.mul(
          tf.scalar(-0.5),
          tf.add(
            tf.mul(
              tf.scalar(h),
              tf.add(logVarC, tf.scalar(Math.log(2 * Math.PI))),
            ),
            tf.div(tf.add(qVarSum, meanSq), tf.exp(logVarC)),
          ),
        ); // [n, k]

        const pzTerm = tf.sum(tf.mul(gamma, expLogPz), 1);
        const pcTerm = tf.sum(
          tf.mul(gamma, tf.scalar(Math.log(1 / k))),
          1,
        );
        const qcTerm = tf.sum(tf.mul(gamma, logGamma), 1);
        const qzEntropy = tf.mul(
          tf.scalar(0.5),
          tf.sum(
            tf.add(zLogVar, tf.scalar(1 + Math.log(2 * Math.PI))),
            1,
          ),
        );
        elbo = tf.add(
          recon,
          tf.add(tf.sub(tf.add(pzTerm, pcTerm), qcTerm), qzEntropy),
        ) as tf.Tensor1D;
      }
      return tf.neg(tf.mean(elbo)) as tf.Scalar;
    });
  }

  /** Plain reconstruction loss through the latent mean, for pretraining. */
  pretrainLoss(x: tf.Tensor2D): tf.Scalar {
    return tf.tidy(() => {
      const { mean: zMean } = this.encode(x);
      const dec = this.decode(zMean);
      return tf.mean(tf.square(tf.sub(x, dec.mean))) as tf.Scalar;
    });
  }

  /** Deterministic embedding: the encoder mean, no sampling. */
  embed(x: tf.Tensor2D): Float32Array {
    return tf.tidy(() => {
      const { mean } = this.encode(x);
      return mean.dataSync() as Float32Array;
    });
  }
}
