import { execFileSync, spawnSync } from "node:child_process";
import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { CsvError, parseCsv } from "../src/csv.js";
import { FigureKind, dumpToString, renderToString } from "../src/render.js";

const FIXTURES = join(__dirname, "fixtures");
const CLI = join(__dirname, "..", "dist", "main.js");

const KINDS: Array<[FigureKind, string]> = [
  ["contraction_surface", "fig1.csv"],
  ["bound_curve", "fig2.csv"],
  ["gamma_surface", "fig3.csv"],
];

function spec(kind: FigureKind, file: string, outputPath = "") {
  return { figureKind: kind, inputCsv: join(FIXTURES, file), outputPath };
}

describe("renderToString", () => {
  it.each(KINDS)("renders %s to a well-formed SVG", (kind, file) => {
    const svg = renderToString(spec(kind, file));
    expect(svg.startsWith("<svg ")).toBe(true);
    expect(svg.trimEnd().endsWith("</svg>")).toBe(true);
    expect(svg.length).toBeGreaterThan(2000);
  });

  it.each(KINDS)("is idempotent for %s (same CSV, same bytes)", (kind, file) => {
    expect(renderToString(spec(kind, file))).toEqual(renderToString(spec(kind, file)));
  });

  it("annotates the benefit surface with the grid maximum (the configured frac)", () => {
    const svg = renderToString(spec("gamma_surface", "fig3.csv"));
    expect(svg).toContain("max gamma = 0.5");
  });

  it("maps the already-verified monotone bound column to a monotone polyline", () => {
    const svg = renderToString(spec("bound_curve", "fig2.csv"));
    const match = svg.match(/<polyline data-series="bound" points="([^"]+)"/);
    expect(match).not.toBeNull();
    const ys = match![1].split(" ").map((pair) => Number(pair.split(",")[1]));
    // smaller bound value = larger screen y; strictly decreasing data rendered downward
    for (let i = 1; i < ys.length; i++) {
      expect(ys[i]).toBeGreaterThanOrEqual(ys[i - 1]);
    }
  });

  it("names the missing columns on a schema mismatch", () => {
    expect(() => renderToString(spec("gamma_surface", "fig1.csv"))).toThrowError(
      /missing required columns: disagreement, indep/,
    );
  });

  it("rejects an empty file", () => {
    const dir = mkdtempSync(join(tmpdir(), "render-"));
    const empty = join(dir, "empty.csv");
    writeFileSync(empty, "");
    expect(() => renderToString({ figureKind: "bound_curve", inputCsv: empty, outputPath: "" })).toThrowError(
      CsvError,
    );
  });

  it("honors title and label overrides", () => {
    const svg = renderToString({ ...spec("gamma_surface", "fig3.csv"), title: "My Surface", zLabel: "benefit" });
    expect(svg).toContain("My Surface");
    expect(svg).toContain("benefit (");
  });
});

describe("dumpToString", () => {
  it.each(KINDS)("echoes the %s CSV values verbatim", (kind, file) => {
    const table = parseCsv(readFileSync(join(FIXTURES, file), "utf-8"));
    const dump = dumpToString(spec(kind, file));
    const lines = dump.trimEnd().split("\n");
    for (const line of lines) {
      const [name, joined] = line.split(": ");
      const idx = table.header.indexOf(name);
      expect(idx).toBeGreaterThanOrEqual(0);
      expect(joined).toEqual(table.rows.map((row) => row[idx]).join(","));
    }
  });
});

describe("command line", () => {
  it.each(KINDS)("renders %s from the golden CSV with exit code 0", (kind, file) => {
    const dir = mkdtempSync(join(tmpdir(), "render-cli-"));
    const out = join(dir, `${kind}.svg`);
    execFileSync("node", [CLI, "--kind", kind, "--in", join(FIXTURES, file), "--out", out]);
    const svg = readFileSync(out, "utf-8");
    expect(svg.startsWith("<svg ")).toBe(true);
  });

  it("writes identical bytes on a re-run", () => {
    const dir = mkdtempSync(join(tmpdir(), "render-cli-"));
    const out1 = join(dir, "a.svg");
    const out2 = join(dir, "b.svg");
    execFileSync("node", [CLI, "--kind", "bound_curve", "--in", join(FIXTURES, "fig2.csv"), "--out", out1]);
    execFileSync("node", [CLI, "--kind", "bound_curve", "--in", join(FIXTURES, "fig2.csv"), "--out", out2]);
    expect(readFileSync(out1)).toEqual(readFileSync(out2));
  });

  it("dump mode prints the plotted arrays", () => {
    const result = spawnSync("node", [CLI, "--kind", "gamma_surface", "--in", join(FIXTURES, "fig3.csv"), "--dump"], {
      encoding: "utf-8",
    });
    expect(result.status).toBe(0);
    expect(result.stdout).toContain("gamma: ");
    expect(result.stdout.split("\n")[0].startsWith("disagreement: ")).toBe(true);
  });

  it("returns a usage error for an unknown kind", () => {
    const result = spawnSync("node", [CLI, "--kind", "pie_chart", "--in", "x.csv", "--out", "x.svg"], {
      encoding: "utf-8",
    });
    expect(result.status).toBe(2);
    expect(result.stderr).toContain("--kind must be one of");
  });

  it("fails without writing a partial image when the schema mismatches", () => {
    const dir = mkdtempSync(join(tmpdir(), "render-cli-"));
    const out = join(dir, "bad.svg");
    const result = spawnSync(
      "node",
      [CLI, "--kind", "gamma_surface", "--in", join(FIXTURES, "fig1.csv"), "--out", out],
      { encoding: "utf-8" },
    );
    expect(result.status).toBe(1);
    expect(result.stderr).toContain("missing required columns");
    expect(existsSync(out)).toBe(false);
  });

  it("fails with a nonzero exit and no image on an empty input", () => {
    const dir = mkdtempSync(join(tmpdir(), "render-cli-"));
    const empty = join(dir, "empty.csv");
    writeFileSync(empty, "");
    const out = join(dir, "empty.svg");
    const result = spawnSync("node", [CLI, "--kind", "bound_curve", "--in", empty, "--out", out], {
      encoding: "utf-8",
    });
    expect(result.status).toBe(1);
    expect(existsSync(out)).toBe(false);
  });
});
