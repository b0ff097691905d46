"""Cautious-optimism dose-combination engine.

Round structure: sample the posterior, score every combination by the
posterior probability that its toxicity lies in the target interval
[xi-u, xi+u] (the G measure), and take the top scorer if its conservative
toxicity quantile (the F quantile at percentile v) fits within the safety
residual. Otherwise fall back to the best scorer among conservative
combinations (F <= xi), relaxing the percentile to the largest feasible w
when no combination qualifies, and stop the trial entirely when even that
relaxation leaves less than psi posterior mass below xi.

Disabling the caution gate recovers the optimism-only ablation engine, which
always allocates the top G scorer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .history import TrialHistory
from .models import DoseGrid
from .sampler import GibbsSampler, PosteriorSamples, PriorSpec, SamplerSettings

BRANCH_OPTIMISTIC = "optimistic"
BRANCH_CONSERVATIVE = "conservative"
BRANCH_RELAXED = "relaxed-conservative"
BRANCH_TERMINATED = "terminated"

# Residual warm-start handling. The source rule is "max(budget - spent, R)
# with R = xi*T", which taken literally floors the residual so high that the
# caution gate never rejects anything and the engine collapses into the
# optimism-only ablation. Treating R as an up-front budget instead,
# max(budget, R) - spent, keeps the early rounds permissive (the stated
# purpose of the warm start) while the accumulated F quantiles still bite as
# evidence accrues. The literal floor stays available as "floor" and "off"
# drops the warm start entirely (used by the percentile-schedule analyses).
WARM_START_MODES = ("budget", "floor", "off")


@dataclass(frozen=True)
class SdfConfig:
    """Targets and caution parameters for one trial (or one group)."""

    xi: float = 0.30
    eps: float = 0.05
    delta: float = 0.05
    u: float = 0.10
    v: float = 0.90
    psi: float = 0.05
    T: int = 60
    warm_start_r: float | None = None  # None resolves to xi * T
    warm_start_mode: str = "budget"
    caution: bool = True  # False: optimism-only ablation
    psi_s: float | None = None  # alternative target-safety level
    v_prop1: bool = False  # schedule v_t = (1-delta)^(1/t) per round

    def __post_init__(self):
        if not 0.0 < self.u < min(self.xi, 1.0 - self.xi):
            raise ValueError("need 0 < u < min(xi, 1-xi)")
        if not 0.0 < self.v < 1.0:
            raise ValueError("need 0 < v < 1")
        if not 0.0 <= self.psi < self.v:
            raise ValueError("need 0 <= psi < v")
        if self.warm_start_mode not in WARM_START_MODES:
            raise ValueError(f"warm_start_mode must be one of {WARM_START_MODES}")
        if self.T < 1:
            raise ValueError("patient budget must be at least 1")

    @property
    def warm_r(self) -> float:
        return self.xi * self.T if self.warm_start_r is None else self.warm_start_r

    @property
    def budget_rate(self) -> float:
        """Per-round safety budget: xi+eps, or psi_s when generalised."""
        return self.xi + self.eps if self.psi_s is None else self.psi_s

    @property
    def conservative_level(self) -> float:
        """Threshold of the conservative set: xi, or psi_s when generalised."""
        return self.xi if self.psi_s is None else self.psi_s

    def v_at(self, t: int) -> float:
        return prop1_bound(t, self.delta) if self.v_prop1 else self.v

    def get_params(self) -> dict:
        return {f.name: getattr(self, f.name) for f in self.__dataclass_fields__.values()}


@dataclass
class RoundDecision:
    """Outcome of one allocation decision.

    Baseline engines reuse this shape with their own branch labels; fields
    they do not compute stay None.
    """

    t: int
    chosen: tuple | None  # 1-based (j, k); None when terminated
    branch: str
    g: np.ndarray | None = None  # J x K G-measure matrix
    f: np.ndarray | None = None  # J x K F-quantile matrix at v_used
    residual: float | None = None
    w: float | None = None
    v_used: float | None = None
    degenerate: bool = False

    def to_log_dict(self, verbose: bool = False) -> dict:
        d = {
            "t": self.t,
            "branch": self.branch,
            "chosenDC": list(self.chosen) if self.chosen else None,
            "residual": self.residual,
            "w": self.w,
        }
        if verbose:
            d["gMeasure"] = None if self.g is None else self.g.tolist()
            d["fQuantile"] = None if self.f is None else self.f.tolist()
        return d


def g_measure(tox: np.ndarray, xi: float, u: float) -> np.ndarray:
    """Per-cell share of posterior draws with toxicity inside [xi-u, xi+u]."""
    tox = np.asarray(tox)
    hit = (tox >= xi - u) & (tox <= xi + u)
    return hit.mean(axis=0)


def f_quantile(tox: np.ndarray, v: float) -> np.ndarray:
    """Upper empirical v-quantile per cell: the ceil(v*L)-th order statistic."""
    if not 0.0 < v <= 1.0:
        raise ValueError("need 0 < v <= 1")
    tox = np.asarray(tox)
    L = tox.shape[0]
    idx = min(max(math.ceil(v * L), 1), L) - 1
    return np.partition(tox, idx, axis=0)[idx]


def below_mass(tox: np.ndarray, level: float) -> np.ndarray:
    """Per-cell share of posterior draws with toxicity at or below `level`."""
    return (np.asarray(tox) <= level).mean(axis=0)


def prop1_bound(t: int, delta: float) -> float:
    """Percentile schedule (1-delta)^(1/t) that keeps residuals nonnegative."""
    if t < 1 or not 0.0 < delta < 1.0:
        raise ValueError("need t >= 1 and 0 < delta < 1")
    return (1.0 - delta) ** (1.0 / t)


def residual_value(t: int, spent: float, config: SdfConfig) -> float:
    """Safety headroom at round t given the accumulated F quantiles `spent`."""
    budget = config.budget_rate * t
    mode = config.warm_start_mode
    if mode == "floor":
        return max(budget - spent, config.warm_r)
    if mode == "budget":
        return max(budget, config.warm_r) - spent
    return budget - spent


def argmax_dc(values: np.ndarray, mask: np.ndarray | None = None) -> tuple:
    """1-based (j, k) of the largest entry; ties favour larger j+k, then j."""
    values = np.asarray(values)
    if mask is not None:
        if not mask.any():
            raise ValueError("empty candidate mask")
        lowered = np.where(mask, values, -np.inf)
    else:
        lowered = values
    best = lowered.max()
    js, ks = np.nonzero(lowered >= best - 1e-15)
    order = np.lexsort((js, js + ks))  # last key dominates: j+k, then j
    j, k = js[order[-1]], ks[order[-1]]
    return int(j) + 1, int(k) + 1


def decide_from_draws(tox: np.ndarray, alloc_counts: np.ndarray, t: int,
                      config: SdfConfig) -> RoundDecision:
    """One allocation decision from a (L, J, K) array of toxicity draws.

    alloc_counts are this trial's own allocations (seeded prior observations
    excluded): the residual charges the current posterior's F quantile once
    per past allocation.
    """
    v_t = config.v_at(t)
    g = g_measure(tox, config.xi, config.u)
    f = f_quantile(tox, v_t)
    spent = float(np.sum(alloc_counts * f))
    r = residual_value(t, spent, config)
    candidate = argmax_dc(g)
    j, k = candidate

    if not config.caution or f[j - 1, k - 1] <= r:
        return RoundDecision(t, candidate, BRANCH_OPTIMISTIC, g, f, r, None, v_t)

    level = config.conservative_level
    conservative = f <= level
    if conservative.any():
        chosen = argmax_dc(g, conservative)
        return RoundDecision(t, chosen, BRANCH_CONSERVATIVE, g, f, r, None, v_t)

    mass = below_mass(tox, level)
    w = float(mass.max())
    if w > config.psi:
        relaxed = mass >= w - 1e-12
        chosen = argmax_dc(g, relaxed)
        return RoundDecision(t, chosen, BRANCH_RELAXED, g, f, r, w, v_t)
    return RoundDecision(t, None, BRANCH_TERMINATED, g, f, r, w, v_t)


def sdf_step(history: TrialHistory, samples: PosteriorSamples,
             config: SdfConfig) -> RoundDecision:
    """Allocation decision for the current round given posterior samples."""
    return decide_from_draws(samples.tox, history.n_count, history.t, config)


@dataclass
class Recommendation:
    chosen: tuple
    g: np.ndarray | None = None
    degenerate: bool = False


def recommend_from_draws(tox: np.ndarray, config: SdfConfig) -> Recommendation:
    """Final MTD recommendation: the top G scorer under the usual tie-break.

    A uniformly zero G surface carries no signal; fall back to the lowest
    combination and flag the result degenerate.
    """
    g = g_measure(tox, config.xi, config.u)
    if g.max() <= 0.0:
        return Recommendation((1, 1), g, degenerate=True)
    return Recommendation(argmax_dc(g), g)


class TrialTerminated(RuntimeError):
    """Raised when a recommendation is requested from a terminated trial."""


class SdfEngine:
    """Stateful single-group engine: one instance drives one trial.

    decide() samples the posterior and caches the round's decision; record()
    appends the administered combination and observed outcome and invalidates
    the cache. Chain seeds are drawn one per posterior refresh from a
    dedicated stream, so an identical call sequence replays identically.
    """

    algorithm = "sdf"

    def __init__(self, config: SdfConfig, grid: DoseGrid | None = None,
                 prior: PriorSpec | str = "default",
                 sampler_settings: SamplerSettings | None = None,
                 seed: int | np.random.SeedSequence = 0):
        self.grid = grid or DoseGrid()
        self.config = config
        self.history = TrialHistory(self.grid)
        self.sampler = GibbsSampler(self.grid, prior, sampler_settings)
        seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        chain_seq, aux_seq = seq.spawn(2)
        self._chain_seeds = np.random.Generator(np.random.PCG64(chain_seq))
        self._aux_seeds = np.random.Generator(np.random.PCG64(aux_seq))
        self.samples: PosteriorSamples | None = None
        self.decisions: list[RoundDecision] = []
        self.terminated = False
        self._pending: RoundDecision | None = None

    def get_params(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "config": self.config.get_params(),
            "prior": self.sampler.prior.name,
            "sampler": self.sampler.settings.__dict__.copy(),
        }

    def next_chain_seed(self) -> int:
        return int(self._chain_seeds.integers(0, 2**64, dtype=np.uint64))

    def aux_rng(self) -> np.random.Generator:
        """Stream for non-chain randomness (Thompson draws in subclasses)."""
        return self._aux_seeds

    def _refresh_samples(self):
        seed = self.next_chain_seed()
        self.samples = self.sampler.sample(self.history, seed)

    def decide(self) -> RoundDecision:
        if self.terminated:
            raise TrialTerminated("trial already terminated")
        if self._pending is None:
            self._refresh_samples()
            self._pending = self._decide_round()
            self.decisions.append(self._pending)
            if self._pending.branch == BRANCH_TERMINATED:
                self.terminated = True
        return self._pending

    def _decide_round(self) -> RoundDecision:
        return sdf_step(self.history, self.samples, self.config)

    def record(self, dc: tuple, outcome: int, group: int | None = None):
        if self.terminated:
            raise TrialTerminated("trial already terminated")
        self.history.record(dc, outcome, group)
        self._pending = None

    def recommend(self) -> Recommendation:
        """Final recommendation from a posterior refreshed on the full history."""
        if self.terminated:
            raise TrialTerminated("terminated trials make no recommendation")
        seed = self.next_chain_seed()
        self.samples = self.sampler.sample(self.history, seed)
        return recommend_from_draws(self.samples.tox, self.config)


class DfEngine(SdfEngine):
    """Optimism-only ablation: the caution gate is disabled."""

    algorithm = "df"

    def __init__(self, config: SdfConfig, **kwargs):
        super().__init__(replace(config, caution=False), **kwargs)
