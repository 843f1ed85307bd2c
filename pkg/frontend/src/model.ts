/**
 * Miniature two-stream attention scorer.
 *
 * A span is judged self-contained by how much probability mass the model
 * puts on end-of-sentence markers (period and comma) at two hypothetical
 * boundary positions, one before the span and one after it. The content
 * stream builds token representations attending over the span; the query
 * stream builds boundary representations that attend over span content
 * WITHOUT ever seeing a token at their own position, so the prediction is
 * uncontaminated. Both streams share weights.
 *
 * Weights are generated from a fixed seed rather than pretrained: the
 * process is architecture-faithful and bit-deterministic, which is what
 * the wire contract and the downstream gateway require. Token embeddings
 * are hash-derived so any vocabulary is accepted.
 */

import { Rng, fnv1a, mulberry32 } from "./rng.js";
import {
  Matrix,
  add,
  dot,
  matVec,
  rmsNorm,
  softmax,
  tanhVec,
} from "./tensor.js";

export const D_MODEL = 32;
export const N_LAYERS = 2;
export const VOCAB_BUCKETS = 64;
export const PYRAMID_DIM = 16;
export const MAX_POSITIONS = 256;
export const EOS_TOKENS = [".", ","];

interface Layer {
  wq: Matrix;
  wk: Matrix;
  wv: Matrix;
  wo: Matrix;
  mlpIn: Matrix;
  mlpOut: Matrix;
}

function positionEncoding(slot: number, dim: number): Float64Array {
  const out = new Float64Array(dim);
  for (let k = 0; k < dim; k += 2) {
    const freq = 1 / Math.pow(10000, k / dim);
    out[k] = Math.sin(slot * freq);
    if (k + 1 < dim) out[k + 1] = Math.cos(slot * freq);
  }
  return out;
}

function attend(
  query: Float64Array,
  keys: Float64Array[],
  values: Float64Array[],
): Float64Array {
  if (keys.length === 0) return new Float64Array(query.length);
  const scores = new Float64Array(keys.length);
  const scale = 1 / Math.sqrt(query.length);
  for (let t = 0; t < keys.length; t++) scores[t] = dot(query, keys[t]) * scale;
  const weights = softmax(scores);
  const out = new Float64Array(values[0].length);
  for (let t = 0; t < values.length; t++) {
    for (let c = 0; c < out.length; c++) out[c] += weights[t] * values[t][c];
  }
  return out;
}

export class TwoStreamScorer {
  readonly seed: number;
  private readonly layers: Layer[] = [];
  private readonly vocabHead: Matrix;
  private readonly pyramidHead: Matrix;
  private readonly maskSeed: number;
  private readonly eosBuckets: number[];

  constructor(seed = 1234) {
    this.seed = seed >>> 0;
    const rng = mulberry32(this.seed);
    const scale = 1 / Math.sqrt(D_MODEL);
    for (let l = 0; l < N_LAYERS; l++) {
      this.layers.push({
        wq: Matrix.random(D_MODEL, D_MODEL, rng, scale),
        wk: Matrix.random(D_MODEL, D_MODEL, rng, scale),
        wv: Matrix.random(D_MODEL, D_MODEL, rng, scale),
        wo: Matrix.random(D_MODEL, D_MODEL, rng, scale),
        mlpIn: Matrix.random(2 * D_MODEL, D_MODEL, rng, scale),
        mlpOut: Matrix.random(D_MODEL, 2 * D_MODEL, rng, scale),
      });
    }
    this.vocabHead = Matrix.random(VOCAB_BUCKETS, D_MODEL, rng, scale);
    this.pyramidHead = Matrix.random(PYRAMID_DIM, D_MODEL, rng, scale);
    this.maskSeed = Math.floor(rng() * 4294967296) >>> 0;
    this.eosBuckets = [
      ...new Set(EOS_TOKENS.map((t) => fnv1a(t) % VOCAB_BUCKETS)),
    ];
  }

  embed(token: string): Float64Array {
    const rng = mulberry32((fnv1a(token.toLowerCase()) ^ this.seed) >>> 0);
    const out = new Float64Array(D_MODEL);
    for (let k = 0; k < D_MODEL; k++) out[k] = (rng() * 2 - 1) * 0.5;
    return out;
  }

  private maskEmbedding(): Float64Array {
    const rng = mulberry32(this.maskSeed);
    const out = new Float64Array(D_MODEL);
    for (let k = 0; k < D_MODEL; k++) out[k] = (rng() * 2 - 1) * 0.5;
    return out;
  }

  private mlp(layer: Layer, v: Float64Array): Float64Array {
    return matVec(layer.mlpOut, tanhVec(matVec(layer.mlpIn, v)));
  }

  /**
   * Run both streams over a segment; returns the query-stream vectors at
   * the hypothetical start slot (before the first token) and end slot
   * (after the last token).
   */
  private boundaryStates(segment: string[]): {
    start: Float64Array;
    end: Float64Array;
  } {
    const m = Math.min(segment.length, MAX_POSITIONS - 2);
    const tokens = segment.slice(0, m);
    // Slot 0 is the hypothetical start, slots 1..m the content, m+1 the end.
    let content = tokens.map((tok, t) =>
      rmsNorm(add(this.embed(tok), positionEncoding(t + 1, D_MODEL))),
    );
    const mask = this.maskEmbedding();
    let queries = [] as Float64Array[];
    for (let slot = 0; slot <= m + 1; slot++) {
      queries.push(rmsNorm(add(mask, positionEncoding(slot, D_MODEL))));
    }

    for (const layer of this.layers) {
      const keys = content.map((h) => matVec(layer.wk, h));
      const values = content.map((h) => matVec(layer.wv, h));

      const nextContent = content.map((h, t) => {
        // Content stream: attends over every token of the segment.
        const attnOut = matVec(
          layer.wo,
          attend(matVec(layer.wq, h), keys, values),
        );
        const mid = rmsNorm(add(h, attnOut));
        return rmsNorm(add(mid, this.mlp(layer, mid)));
      });

      const nextQueries = queries.map((g, slot) => {
        // Query stream: attends over segment content excluding its own
        // position, so a hypothetical boundary never leaks content.
        const excluded = slot - 1; // content index occupying this slot
        const ks = keys.filter((_, t) => t !== excluded);
        const vs = values.filter((_, t) => t !== excluded);
        const attnOut = matVec(layer.wo, attend(matVec(layer.wq, g), ks, vs));
        const mid = rmsNorm(add(g, attnOut));
        return rmsNorm(add(mid, this.mlp(layer, mid)));
      });

      content = nextContent;
      queries = nextQueries;
    }
    return { start: queries[0], end: queries[m + 1] };
  }

  private eosProbability(state: Float64Array): number {
    const probs = softmax(matVec(this.vocabHead, state));
    let p = 0;
    for (const bucket of this.eosBuckets) p += probs[bucket];
    return p;
  }

  /** Boundary probabilities for the inclusive span [i, j] of a sentence. */
  scoreSpan(tokens: string[], i: number, j: number): {
    pStart: number;
    pEnd: number;
  } {
    const { start, end } = this.boundaryStates(tokens.slice(i, j + 1));
    return {
      pStart: this.eosProbability(start),
      pEnd: this.eosProbability(end),
    };
  }

  /**
   * Lead-relevance representation: a content-stream encoding of
   * [CLS] segment [SEP] lead, read out at the classifier slot.
   */
  pyramidVector(segmentTokens: string[], leadTokens: string[]): number[] {
    const seq = [
      "[CLS]",
      ...segmentTokens.slice(0, 48),
      "[SEP]",
      ...leadTokens.slice(0, 160),
    ].slice(0, MAX_POSITIONS);
    let states = seq.map((tok, t) =>
      rmsNorm(add(this.embed(tok), positionEncoding(t, D_MODEL))),
    );
    for (const layer of this.layers) {
      const keys = states.map((h) => matVec(layer.wk, h));
      const values = states.map((h) => matVec(layer.wv, h));
      states = states.map((h) => {
        const attnOut = matVec(
          layer.wo,
          attend(matVec(layer.wq, h), keys, values),
        );
        const mid = rmsNorm(add(h, attnOut));
        return rmsNorm(add(mid, this.mlp(layer, mid)));
      });
    }
    return Array.from(tanhVec(matVec(this.pyramidHead, states[0])));
  }
}
