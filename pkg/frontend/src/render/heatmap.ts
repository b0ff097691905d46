// Posterior heatmaps straight from the payload: G (posterior mass inside the
// MTD interval), F (conservative toxicity percentile), and treated-patient
// counts. Cell shading is presentation; the cell text is the exact service
// value. Cells carry data-dc-cell so the live view can use them as the
// deviation-override selector.

import { designSum, show } from "../format.js";
import type { DesignForm, GroupCounts, HeatmapLayer } from "../types.js";

export function renderHeatmaps(
  layers: HeatmapLayer[],
  design: DesignForm,
  counts: GroupCounts[],
): string {
  const blocks = layers.map((layer) => {
    const forGroup = counts.find((c) => c.group === layer.group);
    const head = layers.length > 1 ? `<h3>Group ${layer.group}</h3>` : "";
    const legendLo = designSum(design.xi, -design.u);
    const legendHi = designSum(design.xi, design.u);
    return `<div class="card heat" data-heatmap-group="${layer.group}">${head}
      <div class="layer">
        <h4>G: mass in [<span data-legend-lo>${legendLo}</span>, <span data-legend-hi>${legendHi}</span>]</h4>
        ${grid("g", layer.group, layer.g, gShade)}
      </div>
      <div class="layer">
        <h4>F: toxicity percentile at v = ${show(design.v)}</h4>
        ${grid("f", layer.group, layer.f, fShade(design))}
      </div>
      <div class="layer">
        <h4>Patients treated</h4>
        ${grid("n", layer.group, forGroup ? forGroup.n : null, () => "")}
      </div>
    </div>`;
  });
  return blocks.join("");
}

function grid(
  kind: string,
  group: number,
  m: number[][] | null,
  shade: (v: number) => string,
): string {
  if (!m) return `<p class="empty">no posterior yet</p>`;
  const K = m[0]?.length ?? 0;
  const head = `<tr><th></th>${Array.from({ length: K }, (_, k) => `<th>k=${k + 1}</th>`).join("")}</tr>`;
  const rows = m.map((row, j) => {
    const cells = row.map((v, k) =>
      `<td class="cell" style="${shade(v)}" data-${kind}="${group}:${j + 1},${k + 1}"`
      + ` data-dc-cell="${j + 1},${k + 1}">${show(v)}</td>`);
    return `<tr><th>j=${j + 1}</th>${cells.join("")}</tr>`;
  });
  return `<table class="grid ${kind}">${head}${rows.join("")}</table>`;
}

function gShade(v: number): string {
  const a = Math.max(0, Math.min(1, v));
  return `background: rgba(39, 136, 92, ${(0.85 * a).toFixed(3)})`;
}

function fShade(design: DesignForm) {
  return (v: number): string => {
    // red above the conservative-set threshold xi, teal below
    const over = v > design.xi;
    const a = Math.max(0, Math.min(1, v));
    return over
      ? `background: rgba(192, 57, 43, ${(0.7 * a).toFixed(3)})`
      : `background: rgba(41, 128, 185, ${(0.5 * a).toFixed(3)})`;
  };
}
