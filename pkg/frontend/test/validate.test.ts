import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { DESIGN_DEFAULTS, type DesignForm } from "../src/types.js";
import { parseAlgorithm, validateDesign } from "../src/validate.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixturePath = join(here, "..", "..", "shared", "session-design-cases.json");

interface FixtureCase {
  name: string;
  body: Partial<DesignForm>;
  valid: boolean;
  field?: string;
}

const cases: FixtureCase[] = JSON.parse(readFileSync(fixturePath, "utf-8")).cases;

function full(body: Partial<DesignForm>): DesignForm {
  return { ...DESIGN_DEFAULTS, ...body };
}

describe("shared validation fixture", () => {
  // the service test suite runs the same cases against POST /sessions
  it.each(cases.map((c) => [c.name, c] as const))("%s", (_name, c) => {
    const errors = validateDesign(full(c.body));
    if (c.valid) {
      expect(errors).toEqual([]);
    } else {
      expect(errors.length).toBeGreaterThan(0);
      expect(errors.map((e) => e.field)).toContain(c.field);
    }
  });
});

describe("early-termination threshold vs percentile", () => {
  it("rejects psi >= v before anything could reach the network", () => {
    const errors = validateDesign(full({ psi: 0.95, v: 0.9 }));
    expect(errors.map((e) => e.field)).toContain("psi");
    expect(errors.find((e) => e.field === "psi")?.message).toMatch(/psi < v/);
  });

  it("accepts psi just below v", () => {
    expect(validateDesign(full({ psi: 0.89, v: 0.9 }))).toEqual([]);
  });
});

describe("algorithm labels", () => {
  it("splits recruitment suffixes like the service does", () => {
    expect(parseAlgorithm("sdf")).toEqual({ base: "sdf", mode: null });
    expect(parseAlgorithm("sdf-ar")).toEqual({ base: "sdf", mode: "ar" });
    expect(parseAlgorithm("SOTA-UR")).toEqual({ base: "sota", mode: "ur" });
    expect(parseAlgorithm("structmab")).toEqual({ base: "structmab", mode: null });
  });

  it("rejects recruitment modes on ungrouped engines", () => {
    expect(parseAlgorithm("structmab-ar")).toBeNull();
    expect(parseAlgorithm("indepts-ep")).toBeNull();
    expect(parseAlgorithm("crm")).toBeNull();
  });
});
