/** Entry point: start the scorer on a port from the command line. */

import { createServer } from "./server.js";

function intFlag(name: string, fallback: number): number {
  const idx = process.argv.indexOf(`--${name}`);
  if (idx >= 0 && idx + 1 < process.argv.length) {
    const value = Number.parseInt(process.argv[idx + 1], 10);
    if (Number.isNaN(value)) {
      console.error(`--${name} expects an integer`);
      process.exit(2);
    }
    return value;
  }
  return fallback;
}

const port = intFlag("port", 8071);
const seed = intFlag("seed", 1234);

const server = createServer({ seed });
server.listen(port, () => {
  const address = server.address();
  const actual = typeof address === "object" && address ? address.port : port;
  console.error(`scorer listening on http://127.0.0.1:${actual} (seed ${seed})`);
});
