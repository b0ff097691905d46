"""Monte Carlo trial harness: single trials, replicate batches, aggregation."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .baselines import IndepTsEngine, SotaEngine, StructMabEngine
from .core import BRANCH_TERMINATED, DfEngine, SdfConfig, SdfEngine, TrialTerminated
from .groups import GroupState, ar_step, recommend_per_group, seed_prior, ur_step
from .models import DoseGrid
from .sampler import SamplerSettings
from .scenarios import Scenario

ENGINE_CLASSES = {
    "sdf": SdfEngine,
    "df": DfEngine,
    "sota": SotaEngine,
    "structmab": StructMabEngine,
    "indepts": IndepTsEngine,
}
RECRUIT_MODES = ("ar", "ur", "ep")
GROUPED_BASES = ("sdf", "df", "sota")


def parse_algorithm(name: str) -> tuple[str, str | None]:
    """Split an algorithm label like 'sdf-ar' into (base engine, recruitment mode)."""
    label = name.lower()
    head, _, tail = label.rpartition("-")
    if head and tail in RECRUIT_MODES:
        base, mode = head, tail
    else:
        base, mode = label, None
    if base not in ENGINE_CLASSES:
        raise ValueError(f"unknown algorithm {name!r}")
    if mode is not None and base not in GROUPED_BASES:
        raise ValueError(f"recruitment mode {mode!r} is not defined for {base!r}")
    return base, mode


def algorithm_names() -> list[str]:
    names = list(ENGINE_CLASSES)
    for base in GROUPED_BASES:
        names.extend(f"{base}-{mode}" for mode in RECRUIT_MODES)
    return names


@dataclass
class RunResult:
    """Everything observable from one simulated trial.

    Per-group tuples have one entry for homogeneous runs. The entire-trial
    DLT rate and the violation flag are computed over enrolled patients only.
    """

    scenario: str
    algorithm: str
    seed: int
    recommendations: tuple
    error_flags: tuple
    group_violations: tuple
    violation: bool
    group_dlt_rates: tuple
    dlt_rate: float
    allocation: np.ndarray
    terminated_early: bool
    recruit_fractions: tuple
    enrolled: int
    stopped_rounds: tuple = ()


@dataclass(frozen=True)
class Experiment:
    """One (scenarios, algorithm, config) arm of a study."""

    scenarios: tuple[Scenario, ...]
    algorithm: str
    config: SdfConfig
    prior: str = "default"
    tp: tuple[int, ...] = ()
    label: str | None = None

    @property
    def scenario_label(self) -> str:
        return "+".join(s.name for s in self.scenarios)

    @property
    def row_label(self) -> str:
        return self.label or self.scenario_label


@dataclass
class ArmReport:
    """Aggregate metrics for one experiment arm.

    Indicator rates carry binomial half-widths 1.96*sqrt(p(1-p)/R); means
    over continuous per-run values (DLT rate, recruit fraction) carry
    1.96*sd/sqrt(R).
    """

    scenario: str
    algorithm: str
    runs: int
    safety_viol: float
    safety_ci: float
    err_rate: float
    err_ci: float
    dlt_rate: float
    dlt_ci: float
    group_viol: tuple = ()
    group_viol_ci: tuple = ()
    group_err: tuple = ()
    group_err_ci: tuple = ()
    group_recruit: tuple = ()
    group_recruit_ci: tuple = ()
    terminated_rate: float = 0.0
    allocation: np.ndarray | None = None

    def csv_row(self) -> dict:
        return {
            "scenario": self.scenario,
            "algorithm": self.algorithm,
            "safety_viol": self.safety_viol,
            "safety_ci": self.safety_ci,
            "err_rate": self.err_rate,
            "err_ci": self.err_ci,
            "dlt_rate": self.dlt_rate,
            "dlt_ci": self.dlt_ci,
        }


def build_engine(base: str, config: SdfConfig, grid, prior, settings, seed_seq):
    if base == "indepts":
        return IndepTsEngine(config, grid, seed=seed_seq)
    cls = ENGINE_CLASSES[base]
    return cls(config, grid=grid, prior=prior, sampler_settings=settings, seed=seed_seq)


def run_trial(scenarios, algorithm: str, config: SdfConfig | None = None, seed: int = 0,
              *, prior: str = "default", sampler_settings: SamplerSettings | None = None,
              grid: DoseGrid | None = None, tp=()) -> RunResult:
    """Simulate one complete trial of `algorithm` against ground-truth scenarios.

    Single-group algorithms take one scenario. Recruitment-suffixed
    algorithms (-ar, -ur, -ep) take one scenario per patient group.
    """
    if isinstance(scenarios, Scenario):
        scenarios = (scenarios,)
    else:
        scenarios = tuple(scenarios)
    if not scenarios:
        raise ValueError("need at least one scenario")
    base, mode = parse_algorithm(algorithm)
    grid = grid or scenarios[0].grid
    if config is None:
        first = scenarios[0]
        config = SdfConfig(xi=first.xi, eps=first.eps, delta=first.delta,
                           T=60 if mode is None else 80)
    if mode is None:
        if len(scenarios) != 1:
            raise ValueError("single-group algorithms take exactly one scenario")
        return _run_single(scenarios[0], base, config, seed, prior, sampler_settings, grid)
    if len(scenarios) < 2:
        raise ValueError(f"{algorithm!r} needs one scenario per patient group")
    if mode == "ep":
        return _run_pooled(scenarios, base, config, seed, prior, sampler_settings, grid)
    return _run_grouped(scenarios, base, mode, config, seed, prior, sampler_settings, grid, tp)


def _violation(s_count: int, n_count: int, config: SdfConfig) -> tuple[float, bool]:
    rate = s_count / n_count if n_count else 0.0
    return rate, rate > config.xi + config.eps + 1e-12


def _run_single(scenario, base, config, seed, prior, settings, grid) -> RunResult:
    outcome_seq, engine_seq = np.random.SeedSequence(seed).spawn(2)
    outcome_rng = np.random.Generator(np.random.PCG64(outcome_seq))
    engine = build_engine(base, config, grid, prior, settings, engine_seq)
    tox = scenario.true_tox
    terminated = False
    for _ in range(config.T):
        decision = engine.decide()
        if decision.branch == BRANCH_TERMINATED:
            terminated = True
            break
        j, k = decision.chosen
        y = int(outcome_rng.random() < tox[j - 1, k - 1])
        engine.record(decision.chosen, y)
    allocation = engine.history.n_count.copy()[None, :, :]
    enrolled = int(engine.history.n_count.sum())
    dlt_rate, violated = _violation(int(engine.history.s_count.sum()), enrolled, config)
    if terminated:
        rec, err = None, True
    else:
        rec = engine.recommend().chosen
        err = rec not in scenario.mtd_set
    return RunResult(
        scenario=scenario.name,
        algorithm=base,
        seed=seed,
        recommendations=(rec,),
        error_flags=(err,),
        group_violations=(violated,),
        violation=violated,
        group_dlt_rates=(dlt_rate,),
        dlt_rate=dlt_rate,
        allocation=allocation,
        terminated_early=terminated,
        recruit_fractions=(1.0 if enrolled else 0.0,),
        enrolled=enrolled,
    )


def _run_pooled(scenarios, base, config, seed, prior, settings, grid) -> RunResult:
    """Group-blind trial: one pooled engine, patients alternate between groups
    round-robin, and each outcome is drawn from the recruited group's own truth."""
    m_groups = len(scenarios)
    children = np.random.SeedSequence(seed).spawn(1 + m_groups)
    outcome_rng = np.random.Generator(np.random.PCG64(children[0]))
    engine = build_engine(base, config, grid, prior, settings, children[1])
    n = np.zeros((m_groups, grid.J, grid.K), dtype=np.int64)
    s = np.zeros_like(n)
    terminated = False
    for t in range(config.T):
        decision = engine.decide()
        if decision.branch == BRANCH_TERMINATED:
            terminated = True
            break
        m = t % m_groups
        j, k = decision.chosen
        y = int(outcome_rng.random() < scenarios[m].true_tox[j - 1, k - 1])
        engine.record(decision.chosen, y, group=m)
        n[m, j - 1, k - 1] += 1
        s[m, j - 1, k - 1] += y
    enrolled = int(n.sum())
    dlt_rate, violated = _violation(int(s.sum()), enrolled, config)
    stats = [_violation(int(s[m].sum()), int(n[m].sum()), config) for m in range(m_groups)]
    if terminated:
        recs = (None,) * m_groups
        errs = (True,) * m_groups
    else:
        rec = engine.recommend().chosen
        recs = (rec,) * m_groups
        errs = tuple(rec not in sc.mtd_set for sc in scenarios)
    return RunResult(
        scenario="+".join(sc.name for sc in scenarios),
        algorithm=f"{base}-ep",
        seed=seed,
        recommendations=recs,
        error_flags=errs,
        group_violations=tuple(v for _, v in stats),
        violation=violated,
        group_dlt_rates=tuple(r for r, _ in stats),
        dlt_rate=dlt_rate,
        allocation=n,
        terminated_early=terminated,
        recruit_fractions=tuple(
            (n[m].sum() / enrolled if enrolled else 0.0) for m in range(m_groups)),
        enrolled=enrolled,
    )


def _run_grouped(scenarios, base, mode, config, seed, prior, settings, grid, tp) -> RunResult:
    m_groups = len(scenarios)
    children = np.random.SeedSequence(seed).spawn(1 + m_groups)
    outcome_rng = np.random.Generator(np.random.PCG64(children[0]))
    share = config.T // m_groups
    groups = []
    for m, sc in enumerate(scenarios):
        group_config = replace(config, T=share, warm_start_r=None)
        engine = build_engine(base, group_config, grid, prior, settings, children[1 + m])
        groups.append(GroupState(m, engine, truth=sc))
    if isinstance(tp, int):
        tp = (tp,) * m_groups
    for g, budget in zip(groups, tp):
        seed_prior(g, budget)
    terminated = False
    for t in range(1, config.T + 1):
        try:
            if mode == "ar":
                step = ar_step(groups, t, config.T)
            else:
                step = ur_step(groups, t)
        except TrialTerminated:
            terminated = True
            break
        g = groups[step.group]
        dc = step.dc_per_group[step.group]
        j, k = dc
        y = int(outcome_rng.random() < g.truth.true_tox[j - 1, k - 1])
        g.recruit(dc, y)
    recs_by_group = recommend_per_group(groups)
    allocation = np.stack([g.history.n_count for g in groups])
    enrolled = int(allocation.sum())
    total_dlts = int(sum(g.history.s_count.sum() for g in groups))
    dlt_rate, violated = _violation(total_dlts, enrolled, config)
    recs, errs, group_viols, group_rates = [], [], [], []
    for g in groups:
        rec = recs_by_group[g.group_id]
        recs.append(None if rec is None else rec.chosen)
        errs.append(rec is None or rec.chosen not in g.truth.mtd_set)
        rate, viol = _violation(int(g.history.s_count.sum()),
                                int(g.history.n_count.sum()), config)
        group_viols.append(viol)
        group_rates.append(rate)
    return RunResult(
        scenario="+".join(sc.name for sc in scenarios),
        algorithm=f"{base}-{mode}",
        seed=seed,
        recommendations=tuple(recs),
        error_flags=tuple(errs),
        group_violations=tuple(group_viols),
        violation=violated,
        group_dlt_rates=tuple(group_rates),
        dlt_rate=dlt_rate,
        allocation=allocation,
        terminated_early=terminated,
        recruit_fractions=tuple(
            (int(g.history.n_count.sum()) / enrolled if enrolled else 0.0) for g in groups),
        enrolled=enrolled,
        stopped_rounds=tuple(g.stopped_at for g in groups),
    )


def _rate_halfwidth(p: float, runs: int) -> float:
    return 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / runs)


def _mean_halfwidth(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return 1.96 * float(values.std(ddof=1)) / math.sqrt(values.size)


def aggregate(results: list[RunResult], experiment: Experiment) -> ArmReport:
    runs = len(results)
    if runs == 0:
        raise ValueError("nothing to aggregate")
    viol = float(np.mean([r.violation for r in results]))
    err_per_run = np.array([np.mean(r.error_flags) for r in results], dtype=np.float64)
    err = float(err_per_run.mean())
    dlt = np.array([r.dlt_rate for r in results], dtype=np.float64)
    group_viol = np.array([r.group_violations for r in results], dtype=np.float64)
    group_err = np.array([r.error_flags for r in results], dtype=np.float64)
    group_recruit = np.array([r.recruit_fractions for r in results], dtype=np.float64)
    alloc = np.mean([r.allocation.sum(axis=0) for r in results], axis=0) / experiment.config.T
    return ArmReport(
        scenario=experiment.row_label,
        algorithm=experiment.algorithm,
        runs=runs,
        safety_viol=viol,
        safety_ci=_rate_halfwidth(viol, runs),
        err_rate=err,
        err_ci=_rate_halfwidth(err, runs),
        dlt_rate=float(dlt.mean()),
        dlt_ci=_mean_halfwidth(dlt),
        group_viol=tuple(group_viol.mean(axis=0)),
        group_viol_ci=tuple(_rate_halfwidth(p, runs) for p in group_viol.mean(axis=0)),
        group_err=tuple(group_err.mean(axis=0)),
        group_err_ci=tuple(_rate_halfwidth(p, runs) for p in group_err.mean(axis=0)),
        group_recruit=tuple(group_recruit.mean(axis=0)),
        group_recruit_ci=tuple(_mean_halfwidth(group_recruit[:, m])
                               for m in range(group_recruit.shape[1])),
        terminated_rate=float(np.mean([r.terminated_early for r in results])),
        allocation=alloc,
    )


def _replicate(args) -> RunResult:
    experiment, settings, grid, seed = args
    return run_trial(experiment.scenarios, experiment.algorithm, experiment.config,
                     seed, prior=experiment.prior, sampler_settings=settings,
                     grid=grid, tp=experiment.tp)


def run_replicates(experiment: Experiment, runs: int, seed_base: int = 0,
                   workers: int = 1, sampler_settings: SamplerSettings | None = None,
                   grid: DoseGrid | None = None) -> list[RunResult]:
    """R independent trials with seeds seed_base..seed_base+R-1, in seed order.

    Results are identical for any worker count: replicates share nothing and
    the reduction preserves seed order.
    """
    tasks = [(experiment, sampler_settings, grid, seed_base + i) for i in range(runs)]
    if workers <= 1:
        return [_replicate(t) for t in tasks]
    chunk = max(1, runs // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_replicate, tasks, chunksize=chunk))


def run_batch(experiment: Experiment, runs: int, seed_base: int = 0,
              workers: int = 1, sampler_settings: SamplerSettings | None = None,
              grid: DoseGrid | None = None) -> ArmReport:
    results = run_replicates(experiment, runs, seed_base, workers, sampler_settings, grid)
    return aggregate(results, experiment)
