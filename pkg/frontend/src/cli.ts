#!/usr/bin/env node
/**
 * plot <kind> --in <csv> --out <png> [--ref <float>] [--report <json>]
 *
 * kinds: decay | residual | surface | drift
 *
 * Exit codes: 0 ok, 1 usage or I/O problem, 2 schema mismatch (the
 * message carries the expected-vs-found column diff).
 */

import { SchemaError } from "./csv";
import { FigureKind, FigureSpec, render } from "./figures";

const KINDS: FigureKind[] = ["decay", "residual", "surface", "drift"];

export function parseArgs(argv: string[]): FigureSpec {
  const [kind, ...rest] = argv;
  if (!kind || !KINDS.includes(kind as FigureKind)) {
    throw new Error(
      `usage: plot <${KINDS.join(" | ")}> --in <csv> --out <png> [--ref <float>] [--report <json>]`,
    );
  }
  const options = new Map<string, string>();
  for (let i = 0; i < rest.length; i += 2) {
    const flag = rest[i];
    const value = rest[i + 1];
    if (!flag || !flag.startsWith("--") || value === undefined) {
      throw new Error(`bad argument near '${flag ?? ""}'`);
    }
    options.set(flag.slice(2), value);
  }
  const input = options.get("in");
  const output = options.get("out");
  if (!input || !output) throw new Error("both --in and --out are required");
  const spec: FigureSpec = { kind: kind as FigureKind, input, output };
  if (options.has("ref")) {
    const ref = Number(options.get("ref"));
    if (Number.isNaN(ref)) throw new Error("--ref must be a number");
    spec.ref = ref;
  }
  if (options.has("report")) spec.report = options.get("report")!;
  return spec;
}

export function main(argv: string[]): number {
  try {
    const spec = parseArgs(argv);
    render(spec);
    process.stdout.write(`${spec.kind}: wrote ${spec.output}\n`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`${err.message}\n`);
      return 2;
    }
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
