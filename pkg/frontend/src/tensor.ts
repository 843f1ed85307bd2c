/** Dense row-major matrices over Float64Array, sized for a tiny model. */

import { Rng, gaussian } from "./rng.js";

export class Matrix {
  constructor(
    public readonly rows: number,
    public readonly cols: number,
    public readonly data: Float64Array,
  ) {}

  static random(rows: number, cols: number, rng: Rng, scale: number): Matrix {
    const data = new Float64Array(rows * cols);
    for (let k = 0; k < data.length; k++) data[k] = gaussian(rng) * scale;
    return new Matrix(rows, cols, data);
  }

  row(r: number): Float64Array {
    return this.data.subarray(r * this.cols, (r + 1) * this.cols);
  }
}

export function matVec(m: Matrix, v: Float64Array): Float64Array {
  const out = new Float64Array(m.rows);
  for (let r = 0; r < m.rows; r++) {
    const row = m.row(r);
    let acc = 0;
    for (let c = 0; c < m.cols; c++) acc += row[c] * v[c];
    out[r] = acc;
  }
  return out;
}

export function add(a: Float64Array, b: Float64Array): Float64Array {
  const out = new Float64Array(a.length);
  for (let k = 0; k < a.length; k++) out[k] = a[k] + b[k];
  return out;
}

export function dot(a: Float64Array, b: Float64Array): number {
  let acc = 0;
  for (let k = 0; k < a.length; k++) acc += a[k] * b[k];
  return acc;
}

export function softmax(logits: Float64Array): Float64Array {
  let max = -Infinity;
  for (const x of logits) max = Math.max(max, x);
  const exps = new Float64Array(logits.length);
  let sum = 0;
  for (let k = 0; k < logits.length; k++) {
    exps[k] = Math.exp(logits[k] - max);
    sum += exps[k];
  }
  for (let k = 0; k < exps.length; k++) exps[k] /= sum;
  return exps;
}

/** Root-mean-square normalization, the residual-stream stabilizer. */
export function rmsNorm(v: Float64Array): Float64Array {
  let ms = 0;
  for (const x of v) ms += x * x;
  const scale = 1 / Math.sqrt(ms / v.length + 1e-8);
  const out = new Float64Array(v.length);
  for (let k = 0; k < v.length; k++) out[k] = v[k] * scale;
  return out;
}

export function tanhVec(v: Float64Array): Float64Array {
  const out = new Float64Array(v.length);
  for (let k = 0; k < v.length; k++) out[k] = Math.tanh(v[k]);
  return out;
}
