"""Comparison designs: rule-based escalation, a structured safe bandit, and
independent Thompson sampling.

All three share the trial-engine interface of the main design (decide,
record, recommend) so the simulation harness treats every algorithm alike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    Recommendation,
    RoundDecision,
    SdfConfig,
    SdfEngine,
    TrialTerminated,
    f_quantile,
    g_measure,
    recommend_from_draws,
)
from .history import TrialHistory
from .models import DoseGrid

# lattice moves considered by the escalation design: same total-dose diagonal
# plus single-step raises (lowers, mirrored)
_RAISE_MOVES = ((1, 0), (0, 1), (1, -1), (-1, 1))
_LOWER_MOVES = ((-1, 0), (0, -1), (1, -1), (-1, 1))


@dataclass(frozen=True)
class SotaConfig:
    """Escalation thresholds; the two must overlap (ce + cd > 1)."""

    ce: float = 0.85
    cd: float = 0.45
    start_dc: tuple = (1, 1)

    def __post_init__(self):
        if self.ce + self.cd <= 1.0:
            raise ValueError("need ce + cd > 1")


def sota_step(tox: np.ndarray, current: tuple, xi: float,
              config: SotaConfig) -> tuple[tuple, str]:
    """Escalation rule on posterior draws; returns (next DC, branch label).

    Escalate when the posterior is confident the current cell is below the
    target, de-escalate when confident it is above, move to the neighbour
    whose posterior-mean toxicity is closest to the target on the right side
    of the current cell's, and stay when no neighbour qualifies.
    """
    J, K = tox.shape[1], tox.shape[2]
    j, k = current
    cur_draws = tox[:, j - 1, k - 1]
    q_lo = float((cur_draws < xi).mean())
    q_hi = float((cur_draws > xi).mean())
    post_mean = tox.mean(axis=0)
    cur_mean = post_mean[j - 1, k - 1]

    if q_lo > config.ce:
        moves, want_higher, branch = _RAISE_MOVES, True, "escalate"
    elif q_hi > config.cd:
        moves, want_higher, branch = _LOWER_MOVES, False, "de-escalate"
    else:
        return current, "stay"

    best, best_gap = None, np.inf
    for dj, dk in moves:
        nj, nk = j + dj, k + dk
        if not (1 <= nj <= J and 1 <= nk <= K):
            continue
        mean = post_mean[nj - 1, nk - 1]
        if (mean <= cur_mean) if want_higher else (mean >= cur_mean):
            continue
        gap = abs(mean - xi)
        if gap < best_gap:
            best, best_gap = (nj, nk), gap
    if best is None:
        return current, "stay"
    return best, branch


class SotaEngine(SdfEngine):
    """Escalation/de-escalation design with the shared G-measure recommendation."""

    algorithm = "sota"

    def __init__(self, config: SdfConfig, sota: SotaConfig | None = None, **kwargs):
        super().__init__(config, **kwargs)
        self.sota = sota or SotaConfig()
        self.current = self.sota.start_dc

    def _decide_round(self) -> RoundDecision:
        chosen, branch = sota_step(self.samples.tox, self.current,
                                   self.config.xi, self.sota)
        g = g_measure(self.samples.tox, self.config.xi, self.config.u)
        return RoundDecision(self.history.t, chosen, branch, g=g)

    def record(self, dc: tuple, outcome: int, group: int | None = None):
        super().record(dc, outcome, group)
        self.current = dc


def nearest_rank(values: np.ndarray, q: float) -> float:
    """Nearest-rank percentile: the ceil(q*n)-th order statistic (1-based)."""
    values = np.sort(np.asarray(values))
    n = values.shape[0]
    idx = min(max(math.ceil(q * n), 1), n) - 1
    return float(values[idx])


def structmab_candidates(tox: np.ndarray, history: TrialHistory, t: int,
                         xi: float, alpha: float = 1.0):
    """Candidate and conservative sets from the admitted posterior draws.

    Returns (candidate mask, conservative mask, admitted draw mask,
    fallback flag). A draw is admitted when every observed cell's empirical
    toxicity lies within the confidence radius sqrt(alpha*log t / (2 n_a)) of
    the draw's toxicity. If no draw survives, every draw is admitted and the
    fallback flag is set.
    """
    L = tox.shape[0]
    n = history.n_count
    s = history.s_count
    active = n > 0
    admitted = np.ones(L, dtype=bool)
    if active.any():
        emp = s[active] / n[active]
        radius = np.sqrt(alpha * math.log(t) / (2.0 * n[active]))
        gap = np.abs(tox[:, active] - emp[None, :])
        admitted = (gap < radius[None, :]).all(axis=1)
    fallback = False
    if not admitted.any():
        admitted = np.ones(L, dtype=bool)
        fallback = True

    flat = tox[admitted].reshape(admitted.sum(), -1)
    ground = np.argmin(np.abs(flat - xi), axis=1)
    counts = np.bincount(ground, minlength=flat.shape[1])
    positive = counts[counts > 0]
    candidates = counts > 0
    if positive.size:
        candidates &= counts >= nearest_rank(positive, 0.20)
    conservative = (tox[admitted].max(axis=0) <= xi).ravel()
    shape = (history.grid.J, history.grid.K)
    return (candidates.reshape(shape), conservative.reshape(shape),
            admitted, fallback)


def _thompson_pick(mask: np.ndarray, history: TrialHistory, xi: float,
                   rng: np.random.Generator) -> tuple:
    """Thompson draw per masked cell, then the draw closest to the target."""
    js, ks = np.nonzero(mask)
    a = history.s_count[js, ks] + 1.0
    b = history.n_count[js, ks] - history.s_count[js, ks] + 1.0
    draws = rng.beta(a, b)
    i = int(np.argmin(np.abs(draws - xi)))
    return int(js[i]) + 1, int(ks[i]) + 1


class StructMabEngine(SdfEngine):
    """Structured bandit over the model's confidence set with a safety gate."""

    algorithm = "structmab"

    def __init__(self, config: SdfConfig, alpha: float = 1.0, **kwargs):
        super().__init__(config, **kwargs)
        self.alpha = alpha
        self.last_dc: tuple | None = None

    def _decide_round(self) -> RoundDecision:
        t = self.history.t
        tox = self.samples.tox
        cfg = self.config
        candidates, conservative, _, fallback = structmab_candidates(
            tox, self.history, t, cfg.xi, self.alpha)
        q80 = f_quantile(tox, 0.8)
        spent = float(np.sum(self.history.n_count * q80))
        resid = cfg.budget_rate * t - spent
        rng = self.aux_rng()

        if candidates.any():
            pick = _thompson_pick(candidates, self.history, cfg.xi, rng)
            if resid - q80[pick[0] - 1, pick[1] - 1] >= 0.0:
                branch = "candidate-fallback" if fallback else "candidate"
                return RoundDecision(t, pick, branch, residual=resid)
        if conservative.any():
            pick = _thompson_pick(conservative, self.history, cfg.xi, rng)
            return RoundDecision(t, pick, "conservative", residual=resid)
        # no admissible safe cell: repeat the last administered combination
        pick = self.last_dc or (1, 1)
        return RoundDecision(t, pick, "repeat-last", residual=resid, degenerate=True)

    def record(self, dc: tuple, outcome: int, group: int | None = None):
        super().record(dc, outcome, group)
        self.last_dc = dc

    def recommend(self) -> Recommendation:
        if self.terminated:
            raise TrialTerminated("terminated trials make no recommendation")
        return empirical_recommend(self.history, self.config.xi)


def empirical_recommend(history: TrialHistory, xi: float) -> Recommendation:
    """Allocated combination whose empirical DLT rate is closest to the target."""
    n = history.n_count
    if not (n > 0).any():
        raise TrialTerminated("no combination was ever allocated")
    rate = np.where(n > 0, history.s_count / np.maximum(n, 1), np.nan)
    gap = np.abs(rate - xi)
    gap = np.where(n > 0, gap, np.inf)
    j, k = np.unravel_index(int(np.argmin(gap)), gap.shape)
    return Recommendation((int(j) + 1, int(k) + 1))


def indep_ts_step(history: TrialHistory, xi: float,
                  rng: np.random.Generator) -> tuple:
    """Independent Beta(s+1, n-s+1) draw per cell; closest draw to the target."""
    a = history.s_count + 1.0
    b = history.n_count - history.s_count + 1.0
    draws = rng.beta(a.ravel(), b.ravel())
    i = int(np.argmin(np.abs(draws - xi)))
    j, k = np.unravel_index(i, (history.grid.J, history.grid.K))
    return int(j) + 1, int(k) + 1


class IndepTsEngine:
    """Per-cell Thompson sampling with no joint model (and no sampler)."""

    algorithm = "indepts"

    def __init__(self, config: SdfConfig, grid: DoseGrid | None = None,
                 seed: int | np.random.SeedSequence = 0):
        self.grid = grid or DoseGrid()
        self.config = config
        self.history = TrialHistory(self.grid)
        seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        _, aux_seq = seq.spawn(2)
        self._rng = np.random.Generator(np.random.PCG64(aux_seq))
        self.decisions: list[RoundDecision] = []
        self.terminated = False
        self.samples = None
        self._pending: RoundDecision | None = None

    def get_params(self) -> dict:
        return {"algorithm": self.algorithm, "config": self.config.get_params()}

    def decide(self) -> RoundDecision:
        if self._pending is None:
            chosen = indep_ts_step(self.history, self.config.xi, self._rng)
            self._pending = RoundDecision(self.history.t, chosen, "thompson")
            self.decisions.append(self._pending)
        return self._pending

    def record(self, dc: tuple, outcome: int, group: int | None = None):
        self.history.record(dc, outcome, group)
        self._pending = None

    def recommend(self) -> Recommendation:
        return empirical_recommend(self.history, self.config.xi)


__all__ = [
    "SotaConfig",
    "SotaEngine",
    "sota_step",
    "StructMabEngine",
    "structmab_candidates",
    "nearest_rank",
    "IndepTsEngine",
    "indep_ts_step",
    "empirical_recommend",
    "recommend_from_draws",
]
