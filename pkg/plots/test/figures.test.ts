import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterAll, describe, expect, it } from "vitest";

import { CsvSchemaError, parseCsv, requireColumns } from "../src/csv.js";
import { render, FigureKind } from "../src/figures.js";
import { main, parseArgs } from "../src/cli.js";

const FIXTURES = path.resolve(__dirname, "../fixtures");
const workdir = fs.mkdtempSync(path.join(os.tmpdir(), "cifuse-plots-"));

afterAll(() => {
  fs.rmSync(workdir, { recursive: true, force: true });
});

const FIXTURE_BY_KIND: Record<FigureKind, string> = {
  ellipses: "ellipses.csv",
  trajectory: "trajectory.csv",
  rmse: "rmse.csv",
  cost: "cost.csv",
};

describe("render", () => {
  for (const kind of Object.keys(FIXTURE_BY_KIND) as FigureKind[]) {
    it(`produces a non-empty valid SVG for the ${kind} figure`, () => {
      const output = path.join(workdir, `${kind}.svg`);
      const written = render({
        inputs: [path.join(FIXTURES, FIXTURE_BY_KIND[kind])],
        kind,
        output,
      });
      expect(written).toBe(output);
      const content = fs.readFileSync(output, "utf-8");
      expect(content.length).toBeGreaterThan(500);
      expect(content.startsWith("<svg ")).toBe(true);
      expect(content).toContain("</svg>");
    });
  }

  it("renders the structure-sweep robot RMSE file with per-structure curves", () => {
    const output = path.join(workdir, "robot_rmse.svg");
    render({
      inputs: [path.join(FIXTURES, "robot_rmse.csv")],
      kind: "rmse",
      output,
    });
    const content = fs.readFileSync(output, "utf-8");
    // legend carries one family per algorithm/importance combination
    expect(content).toContain("esci/inv_trace");
    expect(content).toContain("csci/-");
  });

  it("is deterministic byte for byte", () => {
    const a = path.join(workdir, "a.svg");
    const b = path.join(workdir, "b.svg");
    const spec = { inputs: [path.join(FIXTURES, "rmse.csv")], kind: "rmse" as const };
    render({ ...spec, output: a });
    render({ ...spec, output: b });
    expect(fs.readFileSync(a)).toEqual(fs.readFileSync(b));
  });

  it("never modifies its input CSV", () => {
    const input = path.join(FIXTURES, "cost.csv");
    const before = fs.readFileSync(input);
    render({ inputs: [input], kind: "cost", output: path.join(workdir, "cost2.svg") });
    expect(fs.readFileSync(input)).toEqual(before);
  });

  it("reports schema mismatches with the offending column", () => {
    const bad = path.join(workdir, "bad.csv");
    fs.writeFileSync(bad, "step,algorithm,f,rmse\n0,esci,inv_trace,0.5\n");
    expect(() =>
      render({ inputs: [bad], kind: "rmse", output: path.join(workdir, "bad.svg") }),
    ).toThrowError(/structure_id/);
    try {
      render({ inputs: [bad], kind: "rmse", output: path.join(workdir, "bad.svg") });
    } catch (error) {
      expect((error as CsvSchemaError).column).toBe("structure_id");
    }
  });

  it("rejects missing input files", () => {
    expect(() =>
      render({ inputs: [path.join(workdir, "nope.csv")], kind: "rmse", output: path.join(workdir, "x.svg") }),
    ).toThrowError(/does not exist/);
  });
});

describe("csv parsing", () => {
  it("skips provenance comments and validates row width", () => {
    const table = parseCsv("# seed=1 config_sha256=abc\na,b\n1,2\n3,4\n");
    expect(table.columns).toEqual(["a", "b"]);
    expect(table.rows).toHaveLength(2);
    expect(() => parseCsv("a,b\n1\n")).toThrowError(/cells/);
  });

  it("indexes required columns", () => {
    const table = parseCsv("x,y,z\n1,2,3\n");
    const cols = requireColumns(table, ["z", "x"]);
    expect(cols.get("z")).toBe(2);
  });
});

describe("cli", () => {
  it("parses flags into a figure spec", () => {
    const spec = parseArgs(["--kind", "rmse", "--in", "a.csv", "--in", "b.csv", "--out", "o.svg"]);
    expect(spec.kind).toBe("rmse");
    expect(spec.inputs).toEqual(["a.csv", "b.csv"]);
    expect(spec.output).toBe("o.svg");
  });

  it("renders end to end and returns 0", () => {
    const output = path.join(workdir, "cli.svg");
    const code = main([
      "--kind",
      "ellipses",
      "--in",
      path.join(FIXTURES, "ellipses.csv"),
      "--out",
      output,
    ]);
    expect(code).toBe(0);
    expect(fs.statSync(output).size).toBeGreaterThan(0);
  });

  it("returns 2 on schema errors", () => {
    const bad = path.join(workdir, "bad2.csv");
    fs.writeFileSync(bad, "nope\n1\n");
    const code = main(["--kind", "cost", "--in", bad, "--out", path.join(workdir, "y.svg")]);
    expect(code).toBe(2);
  });

  it("rejects unknown kinds", () => {
    expect(() => parseArgs(["--kind", "pie", "--in", "a", "--out", "b"])).toThrowError(/--kind/);
  });
});
