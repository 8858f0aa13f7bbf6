/**
 * Spherical Gaussian mixture fitting by EM with k-means++ seeding.
 *
 * Used to initialize the latent-prior mixture from pretrained
 * autoencoder codes; small and dependency-free so it stays deterministic
 * under a seeded generator.
 */

export interface Gmm {
  weights: Float64Array;
  means: Float64Array; // k * d row-major
  variances: Float64Array; // spherical, length k
  k: number;
  d: number;
}

/** Deterministic 32-bit generator (mulberry32). */
export function makeRng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function sqDist(x: Float64Array, xo: number, m: Float64Array, mo: number, d: number): number {
  let s = 0;
  for (let j = 0; j < d; j++) {
    const diff = x[xo + j] - m[mo + j];
    s += diff * diff;
  }
  return s;
}

function kmeansPlusPlus(
  x: Float64Array,
  n: number,
  d: number,
  k: number,
  rng: () => number,
): Float64Array {
  const centers = new Float64Array(k * d);
  const first = Math.floor(rng() * n);
  centers.set(x.subarray(first * d, first * d + d), 0);
  const dist = new Float64Array(n).fill(Infinity);
  for (let c = 1; c < k; c++) {
    let total = 0;
    for (let i = 0; i < n; i++) {
      const cand = sqDist(x, i * d, centers, (c - 1) * d, d);
      if (cand < dist[i]) {
        dist[i] = cand;
      }
      total += dist[i];
    }
    let r = rng() * total;
    let pick = n - 1;
    for (let i = 0; i < n; i++) {
      r -= dist[i];
      if (r <= 0) {
        pick = i;
        break;
      }
    }
    centers.set(x.subarray(pick * d, pick * d + d), c * d);
  }
  return centers;
}

const VAR_FLOOR = 1e-6;

export function gmmFit(
  x: Float64Array,
  n: number,
  d: number,
  k: number,
  seed: number,
  maxIter = 300,
  tol = 1e-6,
): Gmm {
  if (n < k) {
    throw new Error(`need at least k=${k} points, got ${n}`);
  }
  const rng = makeRng(seed);
  const means = kmeansPlusPlus(x, n, d, k, rng);
  const weights = new Float64Array(k).fill(1 / k);
  let globalVar = 0;
  for (let i = 0; i < n; i++) {
    globalVar += sqDist(x, i * d, means, 0, d);
  }
  const variances = new Float64Array(k).fill(
    Math.max(globalVar / (n * d), VAR_FLOOR),
  );

  const resp = new Float64Array(n * k);
  let prevLl = -Infinity;
  for (let iter = 0; iter < maxIter; iter++) {
    // E step with log-sum-exp per point
    let ll = 0;
    for (let i = 0; i < n; i++) {
      let best = -Infinity;
      for (let c = 0; c < k; c++) {
        const v = variances[c];
        const lp =
          Math.log(weights[c]) -
          0.5 * d * Math.log(2 * Math.PI * v) -
          sqDist(x, i * d, means, c * d, d) / (2 * v);
        resp[i * k + c] = lp;
        if (lp > best) {
          best = lp;
        }
      }
      let z = 0;
      for (let c = 0; c < k; c++) {
        z += Math.exp(resp[i * k + c] - best);
      }
      ll += best + Math.log(z);
      for (let c = 0; c < k; c++) {
        resp[i * k + c] = Math.exp(resp[i * k + c] - best) / z;
      }
    }
    // M step
    for (let c = 0; c < k; c++) {
      let nc = 0;
      for (let i = 0; i < n; i++) {
        nc += resp[i * k + c];
      }
      nc = Math.max(nc, 1e-12);
      weights[c] = nc / n;
      for (let j = 0; j < d; j++) {
        let s = 0;
        for (let i = 0; i < n; i++) {
          s += resp[i * k + c] * x[i * d + j];
        }
        means[c * d + j] = s / nc;
      }
      let sq = 0;
      for (let i = 0; i < n; i++) {
        sq += resp[i * k + c] * sqDist(x, i * d, means, c * d, d);
      }
      variances[c] = Math.max(sq / (nc * d), VAR_FLOOR);
    }
    if (Math.abs(ll - prevLl) <= tol * Math.abs(ll)) {
      break;
    }
    prevLl = ll;
  }
  return { weights, means, variances, k, d };
}

export function gmmAssign(gmm: Gmm, x: Float64Array, n: number): Int32Array {
  const { means, variances, k, d } = gmm;
  const out = new Int32Array(n);
  for (let i = 0; i < n; i++) {
    let best = -Infinity;
    let arg = 0;
    for (let c = 0; c < k; c++) {
      const v = variances[c];
      const lp =
        -0.5 * d * Math.log(2 * Math.PI * v) -
        sqDist(x, i * d, means, c * d, d) / (2 * v);
      if (lp > best) {
        best = lp;
        arg = c;
      }
    }
    out[i] = arg;
  }
  return out;
}
