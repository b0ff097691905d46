"""Multi-group trials: expected improvement, adaptive and uniform recruitment.

Each patient group keeps an independent engine and posterior. A recruitment
step first asks every live group for its tentative combination (cached by the
engine until that group actually receives an outcome), then picks the group:
round-robin during warmup, argmax expected improvement afterwards. Groups
whose dose-finding measure concentrates (max G > p_es) stop recruiting but
keep their state for the final recommendation.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .core import (
    BRANCH_TERMINATED,
    Recommendation,
    RoundDecision,
    SdfConfig,
    SdfEngine,
    TrialTerminated,
    g_measure,
)
from .scenarios import Scenario

P_ES_DEFAULT = 0.6

MODE_AR = "AR"
MODE_UR = "UR"
MODE_WARMUP = "warmup"


class GroupState:
    """One patient group's engine plus recruitment bookkeeping."""

    def __init__(self, group_id: int, engine, truth: Scenario | None = None):
        self.group_id = group_id
        self.engine = engine
        self.truth = truth
        self.stopped = False
        self.stopped_at: int | None = None
        self.terminated = False
        self.prior_seed = None
        self._ei: float | None = None

    @property
    def history(self):
        return self.engine.history

    def tentative(self) -> RoundDecision:
        """This group's next combination; cached until it receives an outcome."""
        return self.engine.decide()

    def recruit(self, dc: tuple, outcome: int):
        self.engine.record(dc, outcome, group=self.group_id)
        self._ei = None

    def max_g(self) -> float:
        cfg = self.engine.config
        return float(g_measure(self.engine.samples.tox, cfg.xi, cfg.u).max())


class RecruitDecision:
    """Outcome of one recruitment round."""

    def __init__(self, group: int, dc_per_group: dict, ei_per_group: dict, mode: str):
        self.group = group
        self.dc_per_group = dc_per_group
        self.ei_per_group = ei_per_group
        self.mode = mode


def expected_improvement(group: GroupState, dc: tuple, n_draws: int | None = None) -> float:
    """How much one more observation at `dc` is expected to move max G.

    Two side chains are run against the group's history extended with a
    hypothetical toxic / non-toxic outcome at `dc`; each is warm-started from
    the group's current chain state without disturbing it. The absolute
    shifts of max G are mixed by the posterior-mean toxicity at `dc`.
    """
    engine = group.engine
    cfg = engine.config
    tox = engine.samples.tox
    if n_draws is None:
        n_draws = max(1, engine.sampler.settings.n_keep // 2)
    cur_max = float(g_measure(tox, cfg.xi, cfg.u).max())
    j, k = dc
    p_mean = float(tox[:, j - 1, k - 1].mean())
    shifts = {}
    for y in (1, 0):
        hypothetical = engine.history.copy()
        hypothetical.record(dc, y, group=group.group_id)
        side = engine.sampler.sample(
            hypothetical,
            engine.next_chain_seed(),
            n_keep=n_draws,
            state=engine.sampler.state,
            persist_state=False,
        )
        g_max = float(g_measure(side.tox, cfg.xi, cfg.u).max())
        shifts[y] = abs(g_max - cur_max)
    return p_mean * shifts[1] + (1.0 - p_mean) * shifts[0]


def _tentatives(groups: list[GroupState]) -> dict:
    """Ask every live group for its next combination, flagging terminations."""
    dc_per_group = {}
    for g in groups:
        if g.terminated:
            continue
        decision = g.tentative()
        if decision.branch == BRANCH_TERMINATED:
            g.terminated = True
            continue
        dc_per_group[g.group_id] = decision.chosen
    if not dc_per_group:
        raise TrialTerminated("all groups terminated by the safety rule")
    return dc_per_group


def _round_robin(groups: list[GroupState], t: int) -> GroupState:
    return groups[(t - 1) % len(groups)]


def ar_step(groups: list[GroupState], t: int, total_budget: int,
            p_es: float = P_ES_DEFAULT, ei_draws: int | None = None) -> RecruitDecision:
    """Adaptive recruitment: warmup round-robin, then argmax expected improvement."""
    dc_per_group = _tentatives(groups)
    live = [g for g in groups if not g.terminated]
    for g in live:
        if not g.stopped and g.max_g() > p_es:
            g.stopped = True
            g.stopped_at = t
    active = [g for g in live if not g.stopped]
    if t <= total_budget // 4:
        pick = _round_robin(active or live, t)
        return RecruitDecision(pick.group_id, dc_per_group, {}, MODE_WARMUP)
    if not active:
        pick = _round_robin(live, t)
        return RecruitDecision(pick.group_id, dc_per_group, {}, MODE_WARMUP)
    if len(active) == 1:
        pick = active[0]
        return RecruitDecision(pick.group_id, dc_per_group, {pick.group_id: 0.0}, MODE_AR)
    ei = {}
    for g in active:
        if g._ei is None:
            g._ei = expected_improvement(g, dc_per_group[g.group_id], n_draws=ei_draws)
        ei[g.group_id] = g._ei
    pick = max(active, key=lambda g: (ei[g.group_id], -g.group_id))
    return RecruitDecision(pick.group_id, dc_per_group, ei, MODE_AR)


def ur_step(groups: list[GroupState], t: int) -> RecruitDecision:
    """Uniform recruitment: deterministic round-robin over surviving groups."""
    dc_per_group = _tentatives(groups)
    live = [g for g in groups if not g.terminated]
    pick = _round_robin(live, t)
    return RecruitDecision(pick.group_id, dc_per_group, {}, MODE_UR)


def seed_prior(group: GroupState, tp: int, truth: Scenario | None = None):
    """Run a solo dose-finding trial of budget `tp` against the group's truth
    and fold its observations in as likelihood-only prior counts.

    Seeded observations inform the posterior but never count toward the main
    trial's budget or safety metrics.
    """
    if tp <= 0:
        return
    truth = truth or group.truth
    if truth is None:
        raise ValueError("seed_prior needs a ground-truth scenario")
    engine = group.engine
    cfg = replace(engine.config, T=tp, warm_start_r=None)
    seed = int(engine.aux_rng().integers(0, 2**64, dtype=np.uint64))
    outcome_seq, engine_seq = np.random.SeedSequence(seed).spawn(2)
    outcome_rng = np.random.Generator(np.random.PCG64(outcome_seq))
    solo = SdfEngine(cfg, grid=engine.grid, prior=engine.sampler.prior,
                     sampler_settings=engine.sampler.settings, seed=engine_seq)
    tox = truth.true_tox
    for _ in range(tp):
        decision = solo.decide()
        if decision.branch == BRANCH_TERMINATED:
            break
        j, k = decision.chosen
        y = int(outcome_rng.random() < tox[j - 1, k - 1])
        solo.record(decision.chosen, y)
    group.prior_seed = solo.history
    group.history.merge_prior(solo.history)
    engine.sampler.reset()


def recommend_per_group(groups: list[GroupState]) -> dict:
    """Final per-group recommendation; None for safety-terminated groups."""
    out: dict[int, Recommendation | None] = {}
    for g in groups:
        if g.terminated:
            out[g.group_id] = None
        else:
            out[g.group_id] = g.engine.recommend()
    return out
