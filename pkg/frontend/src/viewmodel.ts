// Console state: the latest getState snapshot plus the pending-outcome form.
// Everything rendered comes out of here verbatim; the snapshot is never
// edited, only replaced by the next poll.

import { sameDc } from "./format.js";
import type { Dc, GroupCounts, HeatmapLayer, ResidualPoint, SessionState } from "./types.js";

export class ConsoleViewModel {
  state: SessionState | null = null;
  // deviation selector: the cell to administer instead of the recommended one
  override: Dc | null = null;
  offline = false;

  applyState(state: SessionState) {
    this.state = state;
    this.offline = false;
    if (state.status !== "active") this.override = null;
  }

  networkFailure() {
    // keep the last snapshot on screen; the retry banner goes up instead
    this.offline = true;
  }

  toggleOverride(dc: Dc) {
    const recommended = this.state?.current?.chosenDC ?? null;
    if (sameDc(dc, this.override) || sameDc(dc, recommended)) {
      this.override = null;
    } else {
      this.override = dc;
    }
  }

  administeredDc(): Dc | null {
    return this.override ?? this.state?.current?.chosenDC ?? null;
  }

  isDeviation(): boolean {
    return this.override !== null;
  }

  residualSeries(): ResidualPoint[] {
    return this.state?.residualTrajectory ?? [];
  }

  heatmapLayers(): HeatmapLayer[] {
    return this.state?.heatmaps.groups ?? [];
  }

  counts(): GroupCounts[] {
    return this.state?.counts ?? [];
  }

  grouped(): boolean {
    return (this.state?.counts.length ?? 0) > 1;
  }
}
