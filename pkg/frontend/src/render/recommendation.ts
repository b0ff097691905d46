// Recommendation card: the next combination while the trial is active, the
// final recommendation(s) once completed, the all-unsafe notice on
// termination.

import { dcLabel, show } from "../format.js";
import type { SessionState } from "../types.js";

export const BRANCH_OPTIMISTIC = "optimistic";
export const BRANCH_CONSERVATIVE = "conservative";
export const BRANCH_RELAXED = "relaxed-conservative";

export function renderRecommendation(state: SessionState): string {
  if (state.status === "terminated") {
    return `<div class="card rec terminated" data-status="terminated">
      <h2>Trial terminated</h2>
      <p class="notice">All dose combinations were deemed unsafe. No recommendation.</p>
    </div>`;
  }

  if (state.status === "completed") {
    const recs = state.recommendations ?? [];
    const rows = recs
      .map((rec, m) => {
        const label = recs.length > 1 ? `Group ${m}: ` : "";
        const body = rec === null
          ? `<span class="notice">no recommendation (group terminated)</span>`
          : `<strong class="dc" data-rec="${m}">${dcLabel(rec)}</strong>`;
        return `<p>${label}${body}</p>`;
      })
      .join("");
    return `<div class="card rec completed" data-status="completed">
      <h2>Final recommendation</h2>${rows}
    </div>`;
  }

  const cur = state.current;
  if (!cur) return `<div class="card rec" data-status="active"><p>waiting for a decision</p></div>`;

  const group = state.counts.length > 1
    ? ` <span class="badge" data-group="${cur.group}">group ${cur.group}</span>`
    : "";
  const mode = cur.mode ? `, recruitment <span data-mode>${cur.mode}</span>` : "";
  const w = cur.branch === BRANCH_RELAXED
    ? `<p>relaxed to w = <span data-w>${show(cur.w)}</span></p>`
    : "";
  const eiEntries = Object.entries(cur.ei);
  const ei = eiEntries.length
    ? `<p class="ei">expected improvement: ${eiEntries
        .map(([m, v]) => `g${m} <span data-ei="${m}">${show(v)}</span>`)
        .join(", ")}</p>`
    : "";
  return `<div class="card rec active" data-status="active">
    <h2>Round <span data-round>${show(cur.round)}</span>${group}</h2>
    <p>Give <strong class="dc" data-dc>${dcLabel(cur.chosenDC)}</strong></p>
    <p>branch <span data-branch>${cur.branch}</span>${mode}</p>
    ${w}${ei}
  </div>`;
}
