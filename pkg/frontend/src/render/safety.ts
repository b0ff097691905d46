// Safety panel: realized DLT rate against the xi+eps limit and the residual
// budget trajectory. The numbers render verbatim from the payload; only the
// svg geometry is scaled client-side.

import { designSum, show } from "../format.js";
import type { DesignForm, ResidualPoint, SessionState } from "../types.js";

export function renderSafetyPanel(state: SessionState): string {
  const pts = state.residualTrajectory;
  const limit = designSum(state.design.xi, state.design.eps);
  const rows = pts
    .map((p) => `<tr><td>${show(p.round)}</td>`
      + `<td class="num" data-residual="${p.round}">${show(p.residual)}</td></tr>`)
    .join("");
  return `<div class="card safety">
    <h2>Safety headroom</h2>
    <p>S(t) = <span data-st>${show(state.sT)}</span>
       after <span data-enrolled>${show(state.enrolled)}</span> patients
       (<span data-dlt>${show(state.dltCount)}</span> DLTs);
       limit xi+eps = <span data-limit>${limit}</span></p>
    ${residualSvg(pts, state.design)}
    <table class="residuals">
      <thead><tr><th>round</th><th>residual r(t)</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>
  </div>`;
}

function residualSvg(pts: ResidualPoint[], design: DesignForm): string {
  const W = 340;
  const H = 100;
  const PAD = 10;
  const vals = pts.map((p) => p.residual).filter((x): x is number => x !== null);
  if (vals.length === 0) {
    return `<svg class="spark" width="${W}" height="${H}"></svg>`;
  }
  const lo = Math.min(0, ...vals);
  const hi = Math.max(0.001, ...vals);
  const x = (i: number) => PAD + (W - 2 * PAD) * (pts.length === 1 ? 0 : i / (pts.length - 1));
  const y = (v: number) => H - PAD - (H - 2 * PAD) * ((v - lo) / (hi - lo));
  const line = pts
    .map((p, i) => (p.residual === null ? "" : `${x(i).toFixed(1)},${y(p.residual).toFixed(1)}`))
    .filter(Boolean)
    .join(" ");
  // the zero line is where the caution gate runs out of budget
  const zero = y(0).toFixed(1);
  return `<svg class="spark" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}"
       aria-label="residual budget by round (exhausted at the dashed line)">
    <line x1="${PAD}" y1="${zero}" x2="${W - PAD}" y2="${zero}"
          stroke="#c0392b" stroke-dasharray="4 3"/>
    <polyline points="${line}" fill="none" stroke="#27885c" stroke-width="1.5"/>
  </svg>`;
}
