/**
 * Standalone renderer: `node dist/cli.js --kind rmse --in rmse.csv --out rmse.svg`
 *
 * `--in` may repeat; all inputs must share the schema of the chosen kind.
 */

import { CsvSchemaError } from "./csv.js";
import { FigureKind, FigureSpec, render } from "./figures.js";

const KINDS: FigureKind[] = ["ellipses", "trajectory", "rmse", "cost"];

export function parseArgs(argv: string[]): FigureSpec {
  const inputs: string[] = [];
  let kind: FigureKind | undefined;
  let output: string | undefined;
  let title: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const value = argv[i + 1];
    switch (flag) {
      case "--kind":
        if (!KINDS.includes(value as FigureKind)) {
          throw new Error(`--kind must be one of ${KINDS.join(", ")}, got "${value}"`);
        }
        kind = value as FigureKind;
        i++;
        break;
      case "--in":
        if (value === undefined) throw new Error("--in needs a path");
        inputs.push(value);
        i++;
        break;
      case "--out":
        if (value === undefined) throw new Error("--out needs a path");
        output = value;
        i++;
        break;
      case "--title":
        title = value;
        i++;
        break;
      default:
        throw new Error(`unknown flag "${flag}"`);
    }
  }
  if (!kind) throw new Error("--kind is required");
  if (!output) throw new Error("--out is required");
  if (inputs.length === 0) throw new Error("at least one --in is required");
  return { inputs, kind, output, title };
}

export function main(argv: string[]): number {
  try {
    const spec = parseArgs(argv);
    const written = render(spec);
    console.log(`wrote ${written}`);
    return 0;
  } catch (error) {
    if (error instanceof CsvSchemaError) {
      console.error(`schema error (column ${error.column}): ${error.message}`);
    } else {
      console.error(String(error instanceof Error ? error.message : error));
    }
    return 2;
  }
}

const invokedDirectly = process.argv[1]?.endsWith("cli.js");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
