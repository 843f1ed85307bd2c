/**
 * Record the golden wire transcript used by the contract tests.
 *
 * Run against the in-process server with the default seed; the output is
 * committed so future changes that alter any response byte are caught.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { createServer } from "../src/server.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixturePath = join(here, "..", "..", "test", "fixtures", "transcript.json");

interface Exchange {
  method: string;
  path: string;
  body?: unknown;
  response: unknown;
}

const calls: { method: string; path: string; body?: unknown }[] = [
  { method: "GET", path: "/v1/meta" },
  {
    method: "POST",
    path: "/v1/score",
    body: {
      requests: [
        {
          request_id: "r1",
          tokens: ["Storms", "closed", "nine", "bridges", "on", "Friday", "."],
          i: 0,
          j: 3,
        },
        {
          request_id: "r2",
          tokens: ["Storms", "closed", "nine", "bridges", "on", "Friday", "."],
          i: 2,
          j: 5,
        },
        {
          request_id: "r3",
          tokens: ["the", "crews", "worked", "through", "the", "night"],
          i: 1,
          j: 5,
        },
      ],
    },
  },
  {
    method: "POST",
    path: "/v1/score",
    body: {
      requests: [
        // Probe pair: a sentence-final span against the same span cut one
        // word early. Recorded for drift detection; trained weights would
        // be expected to favor the complete span.
        {
          request_id: "probe-full",
          tokens: ["Crews", "repaired", "the", "flooded", "road", "."],
          i: 0,
          j: 4,
        },
        {
          request_id: "probe-cut",
          tokens: ["Crews", "repaired", "the", "flooded", "road", "."],
          i: 0,
          j: 3,
        },
      ],
    },
  },
  {
    method: "POST",
    path: "/v1/pyramid",
    body: {
      requests: [
        {
          request_id: "p1",
          segment_tokens: ["storms", "closed", "nine", "bridges"],
          lead_tokens: ["Storms", "closed", "nine", "bridges", "on", "Friday"],
        },
        {
          request_id: "p2",
          segment_tokens: ["crews", "worked", "through", "the", "night"],
          lead_tokens: ["Storms", "closed", "nine", "bridges", "on", "Friday"],
        },
      ],
    },
  },
];

async function main() {
  const server = createServer({ seed: 1234 });
  await new Promise<void>((resolve) => server.listen(0, resolve));
  const address = server.address();
  const port = typeof address === "object" && address ? address.port : 0;
  const base = `http://127.0.0.1:${port}`;

  const exchanges: Exchange[] = [];
  for (const call of calls) {
    const response = await fetch(base + call.path, {
      method: call.method,
      headers: { "Content-Type": "application/json" },
      body: call.body === undefined ? undefined : JSON.stringify(call.body),
    });
    exchanges.push({
      method: call.method,
      path: call.path,
      body: call.body,
      response: await response.json(),
    });
  }
  server.close();

  mkdirSync(dirname(fixturePath), { recursive: true });
  writeFileSync(fixturePath, JSON.stringify(exchanges, null, 2) + "\n");
  console.error(`recorded ${exchanges.length} exchanges to ${fixturePath}`);
}

main();
