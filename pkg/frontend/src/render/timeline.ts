// Event timeline, newest first. Decisions taken on the cautious branches and
// outcome deviations get their own markers so an auditor can scan for them.

import { dcLabel, show } from "../format.js";
import type { Dc, TrialEvent } from "../types.js";

export function renderTimeline(events: TrialEvent[]): string {
  const items = [...events].reverse().map(renderEvent).join("");
  return `<div class="card timeline"><h2>Event timeline</h2><ol reversed>${items}</ol></div>`;
}

function renderEvent(ev: TrialEvent): string {
  switch (ev.event) {
    case "created": {
      const design = ev.design as { algorithm?: string; T?: number } | undefined;
      return `<li class="created">session created: ${design?.algorithm ?? "?"}, T=${show(design?.T ?? null)}</li>`;
    }
    case "decision": {
      const round = show(ev.round as number);
      const branch = String(ev.branch);
      const cautious = branch === "conservative" || branch === "relaxed-conservative";
      const marker = cautious
        ? `<span class="marker" data-cautious="${round}">[cautious]</span> `
        : "";
      return `<li class="decision${cautious ? " cautious" : ""}">${marker}round ${round}: `
        + `${branch} pick ${dcLabel(ev.chosenDC as Dc)}</li>`;
    }
    case "outcome": {
      const round = show(ev.round as number);
      const flag = ev.deviation
        ? ` <span class="deviation" data-deviation="${round}">DEVIATION</span>`
        : "";
      return `<li class="outcome">round ${round}: gave ${dcLabel(ev.dc as Dc)}, `
        + `outcome ${show(ev.outcome as number)}${flag}</li>`;
    }
    case "completed":
      return `<li class="completed">trial completed</li>`;
    case "terminated":
      return `<li class="terminated">trial terminated: all combinations unsafe</li>`;
    default:
      return `<li>${ev.event}</li>`;
  }
}
