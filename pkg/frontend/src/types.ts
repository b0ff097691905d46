// Mirrors of the trial-service JSON payloads. Field names match the wire
// format exactly; nothing in these shapes is recomputed client-side.

export type Dc = [number, number]; // 1-based [j, k] dose-combination index

export interface PriorObservation {
  j: number;
  k: number;
  outcome: number;
}

export interface GroupSpec {
  priorSeed?: PriorObservation[];
}

// One create-session body / the design echoed back by getState.
export interface DesignForm {
  algorithm: string;
  gridU: number[];
  gridV: number[];
  xi: number;
  eps: number;
  delta: number;
  u: number;
  v: number;
  psi: number;
  psiS: number | null;
  T: number;
  seed: number;
  prior: string;
  warmStartMode: string;
  draws: number | null;
  burn: number | null;
  warmBurn: number | null;
  pEs: number;
  groups: GroupSpec[] | null;
}

export const DESIGN_DEFAULTS: DesignForm = {
  algorithm: "sdf",
  gridU: [-2, -1, 0],
  gridV: [-3, -2, -1, 0],
  xi: 0.3,
  eps: 0.05,
  delta: 0.05,
  u: 0.1,
  v: 0.9,
  psi: 0.05,
  psiS: null,
  T: 60,
  seed: 0,
  prior: "default",
  warmStartMode: "budget",
  draws: null,
  burn: null,
  warmBurn: null,
  pEs: 0.6,
  groups: null,
};

export interface Decision {
  round: number;
  group: number;
  chosenDC: Dc;
  branch: string;
  mode: string | null;
  residual: number | null;
  w: number | null;
  ei: Record<string, number>;
  chainSeed: number | null;
}

export interface GroupCounts {
  group: number;
  n: number[][];
  s: number[][];
  enrolled: number;
  stoppedAtRound: number | null;
}

export interface HeatmapLayer {
  group: number;
  g: number[][] | null;
  f: number[][] | null;
}

export interface HeatmapsPayload {
  groups: HeatmapLayer[];
}

export interface ResidualPoint {
  round: number;
  residual: number | null;
}

// Event-log entries share a two-field envelope; the rest varies by kind
// (created | decision | outcome | completed | terminated).
export interface TrialEvent {
  ts: number;
  event: string;
  [key: string]: unknown;
}

export type SessionStatus = "active" | "completed" | "terminated";

export interface SessionState {
  sessionId: string;
  status: SessionStatus;
  design: DesignForm;
  round: number;
  enrolled: number;
  dltCount: number;
  sT: number;
  counts: GroupCounts[];
  decisions: Decision[];
  residualTrajectory: ResidualPoint[];
  current: Decision | null;
  recommendations: (Dc | null)[] | null;
  deviations: number;
  heatmaps: HeatmapsPayload;
  eventLog: TrialEvent[];
}

export interface CreatedSession {
  sessionId: string;
  status: string;
  current: Decision | null;
  g: number[][] | null;
}

export interface OutcomeResponse {
  sessionId: string;
  status: string;
  current: Decision | null;
  recommendations: (Dc | null)[] | null;
}

export interface Health {
  status: string;
  sessions: number;
  quarantined: number;
}
