/** Wire types and request validation for the scoring service. */

export interface ScoreRequestItem {
  request_id: string;
  tokens: string[];
  i: number;
  j: number;
}

export interface ScoreResponseItem {
  request_id: string;
  p_start: number;
  p_end: number;
}

export interface PyramidRequestItem {
  request_id: string;
  segment_tokens: string[];
  lead_tokens: string[];
}

export interface PyramidResponseItem {
  request_id: string;
  vector: number[];
}

export class BadRequestError extends Error {
  constructor(
    message: string,
    public readonly requestId?: string,
  ) {
    super(message);
  }
}

function isStringArray(value: unknown): value is string[] {
  return Array.isArray(value) && value.every((x) => typeof x === "string");
}

export function parseScoreBatch(body: unknown): ScoreRequestItem[] {
  const requests = (body as { requests?: unknown })?.requests;
  if (!Array.isArray(requests)) {
    throw new BadRequestError('body must contain a "requests" array');
  }
  return requests.map((raw) => {
    const item = raw as Partial<ScoreRequestItem>;
    const id = typeof item.request_id === "string" ? item.request_id : undefined;
    if (id === undefined) throw new BadRequestError("missing request_id");
    if (!isStringArray(item.tokens) || item.tokens.length === 0) {
      throw new BadRequestError("tokens must be a non-empty string array", id);
    }
    if (
      !Number.isInteger(item.i) ||
      !Number.isInteger(item.j) ||
      (item.i as number) < 0 ||
      (item.i as number) > (item.j as number) ||
      (item.j as number) >= item.tokens.length
    ) {
      throw new BadRequestError(
        `span (${item.i}, ${item.j}) out of range for ${item.tokens.length} tokens`,
        id,
      );
    }
    return {
      request_id: id,
      tokens: item.tokens,
      i: item.i as number,
      j: item.j as number,
    };
  });
}

export function parsePyramidBatch(body: unknown): PyramidRequestItem[] {
  const requests = (body as { requests?: unknown })?.requests;
  if (!Array.isArray(requests)) {
    throw new BadRequestError('body must contain a "requests" array');
  }
  return requests.map((raw) => {
    const item = raw as Partial<PyramidRequestItem>;
    const id = typeof item.request_id === "string" ? item.request_id : undefined;
    if (id === undefined) throw new BadRequestError("missing request_id");
    if (!isStringArray(item.segment_tokens) || item.segment_tokens.length === 0) {
      throw new BadRequestError("segment_tokens must be a non-empty string array", id);
    }
    if (!isStringArray(item.lead_tokens) || item.lead_tokens.length === 0) {
      throw new BadRequestError("lead_tokens must be a non-empty string array", id);
    }
    return {
      request_id: id,
      segment_tokens: item.segment_tokens,
      lead_tokens: item.lead_tokens,
    };
  });
}
