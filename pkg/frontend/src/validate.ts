// Client-side mirror of the service's create-session validation. The shared
// fixture (shared/session-design-cases.json) runs against both this function
// and the live endpoint, so the verdicts cannot drift apart.

import type { DesignForm } from "./types.js";

export interface FieldError {
  field: string;
  message: string;
}

export const ENGINE_BASES = ["sdf", "df", "sota", "structmab", "indepts"];
export const GROUPED_BASES = ["sdf", "df", "sota"];
export const RECRUIT_MODES = ["ar", "ur", "ep"];
export const PRIORS = ["default", "hivar", "noninfo"];
export const WARM_START_MODES = ["budget", "floor", "off"];

export function parseAlgorithm(name: string): { base: string; mode: string | null } | null {
  const label = name.toLowerCase();
  const cut = label.lastIndexOf("-");
  let base = label;
  let mode: string | null = null;
  if (cut > 0 && RECRUIT_MODES.includes(label.slice(cut + 1))) {
    base = label.slice(0, cut);
    mode = label.slice(cut + 1);
  }
  if (!ENGINE_BASES.includes(base)) return null;
  if (mode !== null && !GROUPED_BASES.includes(base)) return null;
  return { base, mode };
}

function strictlyIncreasing(xs: number[]): boolean {
  return xs.every((x, i) => Number.isFinite(x) && (i === 0 || xs[i - 1] < x));
}

function wholeNumber(x: number): boolean {
  return Number.isInteger(x);
}

export function validateDesign(form: DesignForm): FieldError[] {
  const errors: FieldError[] = [];
  const err = (field: string, message: string) => errors.push({ field, message });

  const parsed = parseAlgorithm(form.algorithm);
  if (parsed === null) {
    err("algorithm", `unknown algorithm '${form.algorithm}'`);
  } else if (parsed.mode === "ep") {
    err("algorithm", "pooled-population recruitment is a simulation-only baseline");
  } else if (parsed.mode !== null) {
    if (!form.groups || form.groups.length < 2) {
      err("groups", `'${form.algorithm}' needs at least two groups`);
    }
  } else if (form.groups && form.groups.length > 1) {
    err("groups", "multiple groups need an -ar or -ur algorithm");
  }

  if (form.gridU.length < 1) err("gridU", "agent 1 needs at least one dose level");
  else if (!strictlyIncreasing(form.gridU)) err("gridU", "levels must be strictly increasing");
  if (form.gridV.length < 1) err("gridV", "agent 2 needs at least one dose level");
  else if (!strictlyIncreasing(form.gridV)) err("gridV", "levels must be strictly increasing");

  // only type-level checks for the fields the service takes as-is
  if (!Number.isFinite(form.xi)) err("xi", "target toxicity must be a number");
  if (!Number.isFinite(form.eps)) err("eps", "overdose margin must be a number");
  if (!Number.isFinite(form.delta)) err("delta", "violation probability must be a number");
  if (!(form.u > 0 && form.u < Math.min(form.xi, 1 - form.xi))) {
    err("u", "need 0 < u < min(xi, 1-xi)");
  }
  if (!(form.v > 0 && form.v < 1)) err("v", "need 0 < v < 1");
  if (!(form.psi >= 0 && form.psi < form.v)) err("psi", "need 0 <= psi < v");
  if (!WARM_START_MODES.includes(form.warmStartMode)) {
    err("warmStartMode", `warm start mode must be one of ${WARM_START_MODES.join(", ")}`);
  }
  if (!wholeNumber(form.T) || form.T < 1) err("T", "patient budget must be at least 1");
  if (!wholeNumber(form.seed)) err("seed", "seed must be an integer");
  if (!PRIORS.includes(form.prior)) {
    err("prior", `unknown prior '${form.prior}'; choices: ${PRIORS.join(", ")}`);
  }
  if (form.draws !== null && (!wholeNumber(form.draws) || form.draws < 1)) {
    err("draws", "retained draws must be a positive integer");
  }
  if (form.burn !== null && (!wholeNumber(form.burn) || form.burn < 0)) {
    err("burn", "burn-in must be a nonnegative integer");
  }
  if (form.warmBurn !== null && (!wholeNumber(form.warmBurn) || form.warmBurn < 0)) {
    err("warmBurn", "warm burn-in must be a nonnegative integer");
  }
  if (!Number.isFinite(form.pEs)) err("pEs", "stop threshold must be a number");

  const J = form.gridU.length;
  const K = form.gridV.length;
  for (const [m, group] of (form.groups ?? []).entries()) {
    for (const obs of group.priorSeed ?? []) {
      if (!wholeNumber(obs.j) || obs.j < 1 || obs.j > J
          || !wholeNumber(obs.k) || obs.k < 1 || obs.k > K) {
        err("groups", `group ${m} priorSeed: dose index (${obs.j}, ${obs.k}) outside the grid`);
      } else if (obs.outcome !== 0 && obs.outcome !== 1) {
        err("groups", `group ${m} priorSeed: outcome must be 0 or 1`);
      }
    }
  }
  return errors;
}
