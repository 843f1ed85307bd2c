/**
 * HTTP surface of the scorer.
 *
 *   GET  /v1/meta     model metadata and the declared pyramid dimension
 *   POST /v1/score    boundary probabilities for sentence spans
 *   POST /v1/pyramid  lead-relevance vectors for segment/lead pairs
 *
 * Requests in a batch are answered by request_id; callers may not rely on
 * response ordering. A malformed item fails the whole batch with 400 and
 * names the offending request_id. The service is stateless over immutable
 * weights, so identical requests always produce identical bytes.
 */

import http from "node:http";

import { PYRAMID_DIM, TwoStreamScorer } from "./model.js";
import {
  BadRequestError,
  parsePyramidBatch,
  parseScoreBatch,
  PyramidResponseItem,
  ScoreResponseItem,
} from "./schemas.js";

export interface ServerOptions {
  seed?: number;
}

export function buildMeta(model: TwoStreamScorer) {
  return {
    pyramid_dim: PYRAMID_DIM,
    eos_convention: "sum_period_comma",
    context: "segment_only",
    model: "two-stream-mini",
    pretrained: false,
    seed: model.seed,
    format_version: 1,
  };
}

function readBody(req: http.IncomingMessage): Promise<string> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    req.on("data", (c: Buffer) => chunks.push(c));
    req.on("end", () => resolve(Buffer.concat(chunks).toString("utf-8")));
    req.on("error", reject);
  });
}

function sendJson(res: http.ServerResponse, status: number, payload: unknown) {
  const body = JSON.stringify(payload);
  res.writeHead(status, {
    "Content-Type": "application/json",
    "Content-Length": Buffer.byteLength(body),
  });
  res.end(body);
}

export function createServer(options: ServerOptions = {}): http.Server {
  const model = new TwoStreamScorer(options.seed ?? 1234);

  return http.createServer(async (req, res) => {
    try {
      if (req.method === "GET" && req.url === "/v1/meta") {
        sendJson(res, 200, buildMeta(model));
        return;
      }
      if (req.method === "POST" && req.url === "/v1/score") {
        const batch = parseScoreBatch(JSON.parse(await readBody(req)));
        const responses: ScoreResponseItem[] = batch.map((item) => {
          const { pStart, pEnd } = model.scoreSpan(item.tokens, item.i, item.j);
          return { request_id: item.request_id, p_start: pStart, p_end: pEnd };
        });
        sendJson(res, 200, { responses });
        return;
      }
      if (req.method === "POST" && req.url === "/v1/pyramid") {
        const batch = parsePyramidBatch(JSON.parse(await readBody(req)));
        const responses: PyramidResponseItem[] = batch.map((item) => {
          const vector = model.pyramidVector(item.segment_tokens, item.lead_tokens);
          if (vector.length !== PYRAMID_DIM) {
            throw new Error(
              `vector length ${vector.length} disagrees with declared ${PYRAMID_DIM}`,
            );
          }
          return { request_id: item.request_id, vector };
        });
        sendJson(res, 200, { responses });
        return;
      }
      sendJson(res, 404, { error: `no route for ${req.method} ${req.url}` });
    } catch (err) {
      if (err instanceof BadRequestError) {
        sendJson(res, 400, { error: err.message, request_id: err.requestId ?? null });
      } else if (err instanceof SyntaxError) {
        sendJson(res, 400, { error: `invalid JSON: ${err.message}`, request_id: null });
      } else {
        sendJson(res, 500, { error: String(err) });
      }
    }
  });
}
