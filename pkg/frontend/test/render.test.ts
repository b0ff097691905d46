import { describe, expect, it } from "vitest";

import { designSum, show } from "../src/format.js";
import { renderHeatmaps } from "../src/render/heatmap.js";
import { renderRecommendation } from "../src/render/recommendation.js";
import { renderSafetyPanel } from "../src/render/safety.js";
import { renderTimeline } from "../src/render/timeline.js";
import type { Decision, SessionState } from "../src/types.js";
import { DESIGN_DEFAULTS } from "../src/types.js";
import { ConsoleViewModel } from "../src/viewmodel.js";

// A frozen getState payload shaped like the live service's, with enough
// float noise to catch any rounding sneaking into the render path.
const decision2: Decision = {
  round: 2,
  group: 0,
  chosenDC: [2, 3],
  branch: "relaxed-conservative",
  mode: null,
  residual: 0.6512378901234567,
  w: 0.8250000000000001,
  ei: {},
  chainSeed: 1234567890123,
};

const snapshot: SessionState = {
  sessionId: "abc123def456",
  status: "active",
  design: { ...DESIGN_DEFAULTS, T: 6 },
  round: 2,
  enrolled: 1,
  dltCount: 1,
  sT: 1.0,
  counts: [{
    group: 0,
    n: [[1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]],
    s: [[1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]],
    enrolled: 1,
    stoppedAtRound: null,
  }],
  decisions: [
    {
      round: 1, group: 0, chosenDC: [1, 1], branch: "optimistic", mode: null,
      residual: 1.8, w: null, ei: {}, chainSeed: 42,
    },
    decision2,
  ],
  residualTrajectory: [
    { round: 1, residual: 1.8 },
    { round: 2, residual: 0.6512378901234567 },
  ],
  current: decision2,
  recommendations: null,
  deviations: 1,
  heatmaps: {
    groups: [{
      group: 0,
      g: [[0.11, 0.4623847561023, 0.2], [0.05, 0.3333333333333333, 0.1],
          [0.01, 0.02, 0.03]],
      f: [[0.21, 0.29999999999999, 0.41], [0.5, 0.6, 0.7], [0.8, 0.9, 0.95]],
    }],
  },
  eventLog: [
    { ts: 1.0, event: "created", design: { algorithm: "sdf", T: 6 } },
    { ts: 2.0, event: "decision", round: 1, chosenDC: [1, 1], branch: "optimistic" },
    { ts: 3.0, event: "outcome", round: 1, dc: [1, 2], outcome: 1, deviation: true },
    { ts: 4.0, event: "decision", round: 2, chosenDC: [2, 3], branch: "relaxed-conservative" },
  ],
};

function residualCell(html: string, round: number): string {
  const m = html.match(new RegExp(`data-residual="${round}">([^<]*)<`));
  return m ? m[1] : `<no cell for round ${round}>`;
}

function heatCell(html: string, kind: string, group: number, j: number, k: number): string {
  const m = html.match(new RegExp(`data-${kind}="${group}:${j},${k}"[^>]*>([^<]*)<`));
  return m ? m[1] : `<no ${kind} cell ${j},${k}>`;
}

describe("recommendation card", () => {
  it("shows the chosen combination, branch, and relaxation level", () => {
    const html = renderRecommendation(snapshot);
    expect(html).toContain("(2, 3)");
    expect(html).toContain("relaxed-conservative");
    // w passes through with every digit intact
    expect(html).toContain(`data-w>${String(decision2.w)}<`);
    // homogeneous trial: no group badge
    expect(html).not.toContain("badge");
  });

  it("adds the group badge and expected-improvement readout in AR mode", () => {
    const grouped: SessionState = {
      ...snapshot,
      counts: [snapshot.counts[0], { ...snapshot.counts[0], group: 1 }],
      current: {
        ...decision2, group: 1, mode: "AR",
        ei: { "0": 0.0123456789, "1": 0.2 },
      },
    };
    const html = renderRecommendation(grouped);
    expect(html).toContain(`data-group="1"`);
    expect(html).toContain(`data-ei="0">0.0123456789<`);
    expect(html).toContain("AR");
  });

  it("renders the final recommendation once completed", () => {
    const done: SessionState = {
      ...snapshot, status: "completed", current: null, recommendations: [[1, 4]],
    };
    const html = renderRecommendation(done);
    expect(html).toContain("(1, 4)");
    expect(html).toContain("Final recommendation");
  });

  it("renders the all-unsafe notice on termination", () => {
    const dead: SessionState = {
      ...snapshot, status: "terminated", current: null, recommendations: null,
    };
    const html = renderRecommendation(dead);
    expect(html).toContain("deemed unsafe");
    expect(html).toContain("No recommendation");
  });
});

describe("safety panel", () => {
  it("shows every residual verbatim and the xi+eps limit as 0.35", () => {
    const html = renderSafetyPanel(snapshot);
    for (const p of snapshot.residualTrajectory) {
      expect(residualCell(html, p.round)).toBe(show(p.residual));
    }
    expect(html).toContain(`data-limit>0.35<`);
    expect(html).toContain(`data-st>1<`);
    expect(html).toContain("<polyline");
  });

  it("survives an empty trajectory", () => {
    const fresh: SessionState = { ...snapshot, residualTrajectory: [] };
    const html = renderSafetyPanel(fresh);
    expect(html).toContain("<svg");
  });
});

describe("posterior heatmaps", () => {
  it("renders every G and F value byte-identical to the payload", () => {
    const html = renderHeatmaps(snapshot.heatmaps.groups, snapshot.design, snapshot.counts);
    const layer = snapshot.heatmaps.groups[0];
    layer.g!.forEach((row, j) => row.forEach((v, k) => {
      expect(heatCell(html, "g", 0, j + 1, k + 1)).toBe(String(v));
    }));
    layer.f!.forEach((row, j) => row.forEach((v, k) => {
      expect(heatCell(html, "f", 0, j + 1, k + 1)).toBe(String(v));
    }));
    snapshot.counts[0].n.forEach((row, j) => row.forEach((v, k) => {
      expect(heatCell(html, "n", 0, j + 1, k + 1)).toBe(String(v));
    }));
  });

  it("labels the MTD interval legend [0.2, 0.4] under defaults", () => {
    const html = renderHeatmaps(snapshot.heatmaps.groups, snapshot.design, snapshot.counts);
    expect(html).toContain(`data-legend-lo>0.2<`);
    expect(html).toContain(`data-legend-hi>0.4<`);
  });

  it("falls back gracefully before the first posterior exists", () => {
    const html = renderHeatmaps(
      [{ group: 0, g: null, f: null }], snapshot.design, snapshot.counts);
    expect(html).toContain("no posterior yet");
  });
});

describe("event timeline", () => {
  it("marks deviations and cautious branches", () => {
    const html = renderTimeline(snapshot.eventLog);
    expect(html).toContain(`data-deviation="1"`);
    expect(html).toContain("DEVIATION");
    expect(html).toContain(`data-cautious="2"`);
    expect(html).toContain("(1, 2)"); // the administered cell, not the recommended one
  });

  it("renders terminal events", () => {
    const html = renderTimeline([
      { ts: 1, event: "terminated" },
      { ts: 1, event: "completed" },
    ]);
    expect(html).toContain("all combinations unsafe");
    expect(html).toContain("trial completed");
  });
});

describe("view model", () => {
  it("toggles the deviation override and clears it on the recommended cell", () => {
    const vm = new ConsoleViewModel();
    vm.applyState(snapshot);
    vm.toggleOverride([1, 1]);
    expect(vm.override).toEqual([1, 1]);
    expect(vm.isDeviation()).toBe(true);
    vm.toggleOverride([1, 1]); // second click clears
    expect(vm.override).toBeNull();
    vm.toggleOverride([2, 3]); // the recommended cell is never a deviation
    expect(vm.override).toBeNull();
    expect(vm.administeredDc()).toEqual([2, 3]);
  });

  it("keeps the last snapshot through a network failure", () => {
    const vm = new ConsoleViewModel();
    vm.applyState(snapshot);
    vm.networkFailure();
    expect(vm.offline).toBe(true);
    expect(vm.state?.sessionId).toBe("abc123def456");
    vm.applyState(snapshot);
    expect(vm.offline).toBe(false);
  });
});

describe("formatting", () => {
  it("passes numbers through untouched", () => {
    expect(show(0.30000000000000004)).toBe("0.30000000000000004");
    expect(show(null)).toBe("n/a");
    expect(show(18)).toBe("18");
  });

  it("trims float noise only in design-constant labels", () => {
    expect(designSum(0.3, 0.05)).toBe("0.35");
    expect(designSum(0.3, -0.1)).toBe("0.2");
    expect(designSum(0.3, 0.1)).toBe("0.4");
  });
});
