"""HTTP service for live trial conduct: replayable, event-sourced sessions.

Every session is an append-only JSON-lines log under the data directory.
Decisions are recomputed, never stored as state: chain seeds derive from the
session master seed in a fixed consumption order, so replaying the logged
outcomes through a fresh engine reproduces the identical decision sequence.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import replace
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .core import BRANCH_TERMINATED, SdfConfig, TrialTerminated, f_quantile, g_measure
from .groups import GroupState, ar_step, recommend_per_group, ur_step
from .history import TrialHistory
from .models import DoseGrid
from .sampler import PRIOR_NAMES, SamplerSettings
from .simulate import build_engine, parse_algorithm


class PriorObservation(BaseModel):
    j: int
    k: int
    outcome: int = Field(ge=0, le=1)


class GroupSpec(BaseModel):
    priorSeed: list[PriorObservation] = []


class DesignSpec(BaseModel):
    algorithm: str = "sdf"
    gridU: list[float] = [-2.0, -1.0, 0.0]
    gridV: list[float] = [-3.0, -2.0, -1.0, 0.0]
    xi: float = 0.30
    eps: float = 0.05
    delta: float = 0.05
    u: float = 0.10
    v: float = 0.90
    psi: float = 0.05
    psiS: float | None = None
    T: int = 60
    seed: int = 0
    prior: str = "default"
    warmStartMode: str = "budget"
    draws: int | None = Field(default=None, ge=1)
    burn: int | None = Field(default=None, ge=0)
    warmBurn: int | None = Field(default=None, ge=0)
    pEs: float = 0.6
    groups: list[GroupSpec] | None = None


def _design_error(msg: str):
    raise HTTPException(status_code=422, detail=[{"loc": ["body"], "msg": msg}])


class Session:
    """One live trial: engines, status, and the event log that defines it."""

    def __init__(self, session_id: str, design: DesignSpec, log_path: Path | None):
        self.id = session_id
        self.design = design
        self.log_path = log_path
        self.lock = threading.Lock()
        self.status = "active"
        self.events: list[dict] = []
        self.decision_log: list[dict] = []
        self.deviations = 0
        self.recommendations: list | None = None
        self.current: dict | None = None

        try:
            base, mode = parse_algorithm(design.algorithm)
        except ValueError as exc:
            _design_error(str(exc.args[0]))
        if mode == "ep":
            _design_error("pooled-population recruitment is a simulation-only baseline")
        if mode in ("ar", "ur"):
            if not design.groups or len(design.groups) < 2:
                _design_error(f"{design.algorithm!r} needs at least two groups")
        elif design.groups and len(design.groups) > 1:
            _design_error("multiple groups need an -ar or -ur algorithm")
        if design.prior not in PRIOR_NAMES:
            _design_error(f"unknown prior {design.prior!r}; choices: {', '.join(PRIOR_NAMES)}")
        try:
            grid = DoseGrid(tuple(design.gridU), tuple(design.gridV))
            config = SdfConfig(xi=design.xi, eps=design.eps, delta=design.delta,
                               u=design.u, v=design.v, psi=design.psi,
                               T=design.T, psi_s=design.psiS,
                               warm_start_mode=design.warmStartMode)
        except ValueError as exc:
            _design_error(str(exc.args[0]))
        settings = None
        if design.draws is not None or design.burn is not None or design.warmBurn is not None:
            base_settings = SamplerSettings()
            settings = SamplerSettings(
                n_keep=design.draws or base_settings.n_keep,
                n_burn=design.burn if design.burn is not None else base_settings.n_burn,
                n_burn_warm=(design.warmBurn if design.warmBurn is not None
                             else base_settings.n_burn_warm),
            )
        self.base = base
        self.mode = mode
        self.grid = grid
        self.config = config
        n_groups = len(design.groups) if mode in ("ar", "ur") else 1
        children = np.random.SeedSequence(design.seed).spawn(1 + n_groups)
        if mode in ("ar", "ur"):
            share = config.T // n_groups
            self.groups = []
            for m, spec in enumerate(design.groups):
                engine = build_engine(base, replace(config, T=share), grid,
                                      design.prior, settings, children[1 + m])
                state = GroupState(m, engine)
                if spec.priorSeed:
                    seeded = TrialHistory(grid)
                    for obs in spec.priorSeed:
                        try:
                            seeded.record((obs.j, obs.k), obs.outcome)
                        except (ValueError, IndexError) as exc:
                            _design_error(f"group {m} priorSeed: {exc.args[0]}")
                    state.prior_seed = seeded
                    state.history.merge_prior(seeded)
                self.groups.append(state)
            self.engine = None
        else:
            self.groups = None
            self.engine = build_engine(base, config, grid, design.prior,
                                       settings, children[1])

    # -- engine-facing mechanics ------------------------------------------

    @property
    def enrolled(self) -> int:
        if self.groups is not None:
            return int(sum(g.history.n_count.sum() for g in self.groups))
        return int(self.engine.history.n_count.sum())

    @property
    def dlt_count(self) -> int:
        if self.groups is not None:
            return int(sum(g.history.s_count.sum() for g in self.groups))
        return int(self.engine.history.s_count.sum())

    def _advance(self):
        """Compute the next round's decision, or close the session."""
        t = self.enrolled + 1
        if self.groups is not None:
            try:
                if self.mode == "ar":
                    step = ar_step(self.groups, t, self.config.T, self.design.pEs)
                else:
                    step = ur_step(self.groups, t)
            except TrialTerminated:
                self.status = "terminated"
                self.current = None
                return
            state = self.groups[step.group]
            chosen = step.dc_per_group[step.group]
            decision = state.engine.decisions[-1]
            samples = state.engine.samples
            self.current = {
                "round": t,
                "group": step.group,
                "chosenDC": list(chosen),
                "branch": decision.branch,
                "mode": step.mode,
                "residual": None if decision.residual is None else float(decision.residual),
                "w": None if decision.w is None else float(decision.w),
                "ei": {str(m): v for m, v in step.ei_per_group.items()},
                "chainSeed": None if samples is None else samples.seed,
            }
        else:
            decision = self.engine.decide()
            if decision.branch == BRANCH_TERMINATED:
                self.status = "terminated"
                self.current = None
                return
            samples = self.engine.samples
            self.current = {
                "round": t,
                "group": 0,
                "chosenDC": list(decision.chosen),
                "branch": decision.branch,
                "mode": None,
                "residual": None if decision.residual is None else float(decision.residual),
                "w": None if decision.w is None else float(decision.w),
                "ei": {},
                "chainSeed": None if samples is None else samples.seed,
            }
        self.decision_log.append(self.current)

    def _complete(self):
        if self.groups is not None:
            recs = recommend_per_group(self.groups)
            self.recommendations = [
                None if recs[g.group_id] is None else list(recs[g.group_id].chosen)
                for g in self.groups]
        else:
            try:
                rec = self.engine.recommend()
            except TrialTerminated:
                self.status = "terminated"
                self.current = None
                return
            self.recommendations = [list(rec.chosen)]
        self.status = "completed"
        self.current = None

    def start(self):
        self._advance()
        if self.status == "active":
            self._log({"event": "decision", **self.current})

    def apply_outcome(self, outcome: int, dc: tuple | None, replay: bool = False):
        """Record one administered combination and observed outcome."""
        recommended = tuple(self.current["chosenDC"])
        administered = recommended if dc is None else tuple(dc)
        if not (1 <= administered[0] <= self.grid.J
                and 1 <= administered[1] <= self.grid.K):
            raise HTTPException(status_code=400,
                                detail=f"dc {list(administered)} outside the grid")
        deviation = administered != recommended
        group_id = self.current["group"]
        round_no = self.current["round"]
        if self.groups is not None:
            self.groups[group_id].recruit(administered, outcome)
        else:
            self.engine.record(administered, outcome)
        self.deviations += deviation
        self.current = None
        if not replay:
            self._log({"event": "outcome", "round": round_no, "group": group_id,
                       "dc": list(administered), "outcome": outcome,
                       "deviation": deviation})
        if self.enrolled >= self.config.T:
            self._complete()
            if not replay and self.status in ("completed", "terminated"):
                self._log({"event": self.status,
                           "recommendations": self.recommendations})
        else:
            self._advance()
            if self.status == "active":
                if not replay:
                    self._log({"event": "decision", **self.current})
            elif not replay:
                self._log({"event": self.status,
                           "recommendations": self.recommendations})

    # -- persistence -------------------------------------------------------

    def _log(self, record: dict):
        record = {"ts": time.time(), **record}
        self.events.append(record)
        if self.log_path is not None:
            with self.log_path.open("a") as fh:
                fh.write(json.dumps(record) + "\n")

    # -- snapshots ---------------------------------------------------------

    def heatmaps(self) -> dict:
        cfg = self.config
        out = []
        states = self.groups if self.groups is not None else [None]
        for m, state in enumerate(states):
            engine = self.engine if state is None else state.engine
            samples = getattr(engine, "samples", None)
            if samples is None:
                out.append({"group": m, "g": None, "f": None})
                continue
            out.append({
                "group": m,
                "g": g_measure(samples.tox, cfg.xi, cfg.u).tolist(),
                "f": f_quantile(samples.tox, cfg.v).tolist(),
            })
        return {"groups": out}

    def state(self) -> dict:
        if self.groups is not None:
            counts = [{"group": g.group_id,
                       "n": g.history.n_count.tolist(),
                       "s": g.history.s_count.tolist(),
                       "enrolled": int(g.history.n_count.sum()),
                       "stoppedAtRound": g.stopped_at}
                      for g in self.groups]
        else:
            h = self.engine.history
            counts = [{"group": 0, "n": h.n_count.tolist(), "s": h.s_count.tolist(),
                       "enrolled": int(h.n_count.sum()), "stoppedAtRound": None}]
        enrolled = self.enrolled
        return {
            "sessionId": self.id,
            "status": self.status,
            "design": self.design.model_dump(),
            "round": enrolled + 1 if self.status == "active" else enrolled,
            "enrolled": enrolled,
            "dltCount": self.dlt_count,
            "sT": self.dlt_count / enrolled if enrolled else 0.0,
            "counts": counts,
            "decisions": self.decision_log,
            "residualTrajectory": [
                {"round": d["round"], "residual": d["residual"]}
                for d in self.decision_log],
            "current": self.current,
            "recommendations": self.recommendations,
            "deviations": self.deviations,
            "heatmaps": self.heatmaps(),
            "eventLog": self.events,
        }


class SessionStore:
    """In-memory registry backed by JSON-lines logs; rebuilds by replay."""

    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.lock = threading.Lock()
        self.sessions: dict[str, Session] = {}
        self.quarantined: dict[str, str] = {}
        self._load_all()

    def _load_all(self):
        for path in sorted(self.data_dir.glob("*.jsonl")):
            session_id = path.stem
            try:
                self.sessions[session_id] = self._replay(session_id, path)
            except Exception as exc:
                self.quarantined[session_id] = f"{type(exc).__name__}: {exc}"

    def _replay(self, session_id: str, path: Path) -> Session:
        events = []
        with path.open() as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    events.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ValueError(f"line {lineno}: corrupt event ({exc.msg})") from None
        if not events or events[0].get("event") != "created":
            raise ValueError("log does not start with a created event")
        design = DesignSpec.model_validate(events[0]["design"])
        session = Session(session_id, design, log_path=path)
        session._advance()
        for event in events:
            if event.get("event") != "outcome":
                continue
            if session.status != "active" or session.current is None:
                raise ValueError("outcome event after the trial closed")
            session.apply_outcome(int(event["outcome"]), tuple(event["dc"]),
                                  replay=True)
        session.events = events
        return session

    def create(self, design: DesignSpec) -> Session:
        session_id = uuid.uuid4().hex[:12]
        path = self.data_dir / f"{session_id}.jsonl"
        session = Session(session_id, design, log_path=path)
        session._log({"event": "created", "design": design.model_dump()})
        session.start()
        with self.lock:
            self.sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self.lock:
            if session_id in self.quarantined:
                raise HTTPException(status_code=409, detail={
                    "status": "quarantined",
                    "reason": self.quarantined[session_id]})
            session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session


def create_app(data_dir: Path | str = "./sessions",
               cors_origins: list[str] | None = None,
               console_dir: Path | str | None = None) -> FastAPI:
    store = SessionStore(Path(data_dir))
    app = FastAPI(title="dose-combination trial service")
    app.state.store = store
    if cors_origins:
        app.add_middleware(CORSMiddleware, allow_origins=cors_origins,
                           allow_methods=["*"], allow_headers=["*"])

    @app.post("/sessions", status_code=201)
    def create_session(design: DesignSpec):
        session = store.create(design)
        g = session.heatmaps()["groups"][0]["g"] if session.status == "active" else None
        return {"sessionId": session.id, "status": session.status,
                "current": session.current, "g": g}

    @app.post("/sessions/{session_id}/outcomes")
    async def post_outcome(session_id: str, request: Request):
        session = store.get(session_id)
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise HTTPException(status_code=400, detail="body is not valid JSON")
        if not isinstance(body, dict) or body.get("outcome") not in (0, 1):
            raise HTTPException(status_code=400,
                                detail="body needs an outcome of 0 or 1")
        dc = body.get("dc")
        if dc is not None:
            if (not isinstance(dc, (list, tuple)) or len(dc) != 2
                    or not all(isinstance(x, int) for x in dc)):
                raise HTTPException(status_code=400,
                                    detail="dc must be a [j, k] pair of integers")
            dc = tuple(dc)
        with session.lock:
            if session.status != "active":
                raise HTTPException(status_code=409,
                                    detail=f"session is {session.status}")
            session.apply_outcome(int(body["outcome"]), dc)
            return {"sessionId": session.id, "status": session.status,
                    "current": session.current,
                    "recommendations": session.recommendations}

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return session.state()

    @app.get("/sessions/{session_id}/heatmaps")
    def get_heatmaps(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return session.heatmaps()

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "sessions": len(store.sessions),
                "quarantined": len(store.quarantined)}

    if console_dir is not None:
        # mounted last so the API routes above keep precedence
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=console_dir, html=True),
                  name="console")

    return app
