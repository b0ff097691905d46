// Browser bootstrap: wizard on the left, live view once a session exists.
// Rendering is innerHTML from the pure render modules; state lives in the
// view model and is refreshed by polling after every mutation.

import { ApiError, TrialServiceClient } from "./api.js";
import { loadConfig } from "./config.js";
import { dcLabel } from "./format.js";
import { renderHeatmaps } from "./render/heatmap.js";
import { renderRecommendation } from "./render/recommendation.js";
import { renderSafetyPanel } from "./render/safety.js";
import { renderTimeline } from "./render/timeline.js";
import { DESIGN_DEFAULTS, type Dc, type DesignForm, type GroupSpec } from "./types.js";
import { validateDesign, type FieldError } from "./validate.js";
import { ConsoleViewModel } from "./viewmodel.js";

let api: TrialServiceClient;
const vm = new ConsoleViewModel();
let sessionId: string | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function num(id: string): number {
  return Number(el<HTMLInputElement>(id).value);
}

function optionalInt(id: string): number | null {
  const raw = el<HTMLInputElement>(id).value.trim();
  return raw === "" ? null : Number(raw);
}

function levels(id: string): number[] {
  const raw = el<HTMLInputElement>(id).value.trim();
  return raw === "" ? [] : raw.split(",").map((s) => Number(s.trim()));
}

export function readForm(): { form: DesignForm; parseErrors: FieldError[] } {
  const parseErrors: FieldError[] = [];
  let groups: GroupSpec[] | null = null;
  const groupsRaw = el<HTMLTextAreaElement>("f-groups").value.trim();
  if (groupsRaw !== "") {
    try {
      const parsed = JSON.parse(groupsRaw);
      if (Array.isArray(parsed)) groups = parsed as GroupSpec[];
      else parseErrors.push({ field: "groups", message: "groups must be a JSON array" });
    } catch {
      parseErrors.push({ field: "groups", message: "groups is not valid JSON" });
    }
  }
  const form: DesignForm = {
    ...DESIGN_DEFAULTS,
    algorithm: el<HTMLSelectElement>("f-algorithm").value,
    gridU: levels("f-gridU"),
    gridV: levels("f-gridV"),
    xi: num("f-xi"),
    eps: num("f-eps"),
    delta: num("f-delta"),
    u: num("f-u"),
    v: num("f-v"),
    psi: num("f-psi"),
    T: num("f-T"),
    seed: num("f-seed"),
    prior: el<HTMLSelectElement>("f-prior").value,
    warmStartMode: el<HTMLSelectElement>("f-warmStartMode").value,
    draws: optionalInt("f-draws"),
    burn: optionalInt("f-burn"),
    warmBurn: optionalInt("f-warmBurn"),
    groups,
  };
  return { form, parseErrors };
}

function showFieldErrors(errors: FieldError[]) {
  for (const slot of Array.from(document.querySelectorAll<HTMLElement>(".field-error"))) {
    slot.textContent = "";
  }
  const spill: string[] = [];
  for (const e of errors) {
    const slot = document.getElementById(`err-${e.field}`);
    if (slot) slot.textContent = e.message;
    else spill.push(`${e.field}: ${e.message}`);
  }
  el("wizard-error").textContent = spill.join("; ");
}

function serviceFieldErrors(detail: unknown): FieldError[] {
  // 422 detail is a list of {loc, msg}; map pydantic locs onto form fields
  if (!Array.isArray(detail)) return [{ field: "form", message: String(detail) }];
  return detail.map((item: { loc?: unknown[]; msg?: string }) => {
    const loc = item.loc ?? [];
    const field = String(loc[loc.length - 1] === "body" ? "form" : loc[loc.length - 1]);
    return { field, message: item.msg ?? "invalid" };
  });
}

async function submitWizard(ev: Event) {
  ev.preventDefault();
  const { form, parseErrors } = readForm();
  const errors = [...parseErrors, ...validateDesign(form)];
  showFieldErrors(errors);
  if (errors.length > 0) return; // nothing leaves the browser on a bad form
  try {
    const created = await api.createSession(form);
    await attach(created.sessionId);
  } catch (err) {
    if (err instanceof ApiError && err.status === 422) {
      showFieldErrors(serviceFieldErrors(err.detail));
    } else {
      el("wizard-error").textContent = String(err);
    }
  }
}

async function attachExisting(ev: Event) {
  ev.preventDefault();
  const id = el<HTMLInputElement>("f-attach").value.trim();
  if (id) await attach(id);
}

async function attach(id: string) {
  sessionId = id;
  el("wizard-view").hidden = true;
  el("live-view").hidden = false;
  await refresh();
}

async function refresh() {
  if (!sessionId) return;
  try {
    vm.applyState(await api.getState(sessionId));
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      el("session-meta").textContent = `session ${sessionId}: ${JSON.stringify(err.detail)}`;
      return;
    }
    vm.networkFailure();
  }
  paint();
}

function paint() {
  el("offline").hidden = !vm.offline;
  const state = vm.state;
  if (!state) return;
  el("session-meta").textContent =
    `session ${state.sessionId} [${state.status}] `
    + `enrolled ${state.enrolled}/${state.design.T}, deviations ${state.deviations}`;
  el("recommendation").innerHTML = renderRecommendation(state);
  el("safety").innerHTML = renderSafetyPanel(state);
  el("heatmaps").innerHTML = renderHeatmaps(state.heatmaps.groups, state.design, state.counts);
  el("timeline").innerHTML = renderTimeline(state.eventLog);
  el("outcome-controls").hidden = state.status !== "active";
  el("override-note").textContent = vm.isDeviation()
    ? `administering ${dcLabel(vm.override)} instead of the recommendation (deviation will be logged)`
    : "administering the recommended combination (click a heatmap cell to override)";
}

async function recordOutcome(outcome: 0 | 1) {
  if (!sessionId) return;
  try {
    await api.postOutcome(sessionId, outcome, vm.override ?? undefined);
    vm.override = null;
  } catch (err) {
    if (!(err instanceof ApiError)) {
      vm.networkFailure();
      paint();
      return;
    }
    // 409: the session closed under us; the refresh below shows the final state
  }
  await refresh(); // poll right after the mutation
}

function cellClick(ev: Event) {
  const target = ev.target as HTMLElement;
  const cell = target.closest<HTMLElement>("[data-dc-cell]");
  if (!cell || vm.state?.status !== "active") return;
  const [j, k] = cell.dataset.dcCell!.split(",").map(Number) as [number, number];
  vm.toggleOverride([j, k] as Dc);
  paint();
}

async function init() {
  const cfg = await loadConfig();
  api = new TrialServiceClient(cfg.apiBase);
  el("wizard-form").addEventListener("submit", submitWizard);
  el("attach-form").addEventListener("submit", attachExisting);
  el("dlt-no").addEventListener("click", () => void recordOutcome(0));
  el("dlt-yes").addEventListener("click", () => void recordOutcome(1));
  el("heatmaps").addEventListener("click", cellClick);
  window.setInterval(() => void refresh(), cfg.pollMs);
}

document.addEventListener("DOMContentLoaded", () => void init());
