"""Posterior sampling for the logistic dose-toxicity model.

The posterior over theta given trial history is sampled by Gibbs sweeps,
drawing each coordinate from its univariate full conditional with ARMS
(adaptive rejection Metropolis sampling). The sweep loop lives in a compiled
kernel (see _kernels); this module owns priors, trial-facing state such as
warm starts, and a plain-Python reference ARMS for arbitrary one-dimensional
log densities.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from . import _kernels
from .history import TrialHistory
from .models import DoseGrid, ModelParams, toxicity_draws, toxicity_matrix

PRIOR_NAMES = ("default", "hivar", "noninfo")

# per-dimension prior encodings consumed by the kernel:
# (code, p1, p2) with codes 0=Normal(0,var) 1=Exp(rate) 2=Gamma(shape,rate)
# 3=flat 4=Normal(mean,var)
_PRIOR_TABLES = {
    # N(0,10) on intercept and interaction, Exp(1) on the slopes
    "default": ((0, 10.0, 0.0), (1, 1.0, 0.0), (1, 1.0, 0.0), (0, 10.0, 0.0)),
    # N(0,50) and Gamma(0.1, 0.1): mean 1, variance 10
    "hivar": ((0, 50.0, 0.0), (2, 0.1, 0.1), (2, 0.1, 0.1), (0, 50.0, 0.0)),
    # uniform over the truncated feasible box
    "noninfo": ((3, 0.0, 0.0), (3, 0.0, 0.0), (3, 0.0, 0.0), (3, 0.0, 0.0)),
}


@dataclass(frozen=True)
class PriorSpec:
    """Named prior family over theta with the truncation bound B."""

    name: str = "default"
    bound: float = 20.0

    def __post_init__(self):
        if self.name not in _PRIOR_TABLES:
            raise ValueError(f"unknown prior {self.name!r}; choose from {PRIOR_NAMES}")
        if self.bound <= 0:
            raise ValueError("truncation bound must be positive")

    def kernel_tables(self):
        rows = _PRIOR_TABLES[self.name]
        ptype = np.array([r[0] for r in rows], dtype=np.int64)
        p1 = np.array([r[1] for r in rows], dtype=np.float64)
        p2 = np.array([r[2] for r in rows], dtype=np.float64)
        return ptype, p1, p2


@dataclass(frozen=True)
class SamplerSettings:
    """Chain lengths and warm-start policy.

    n_burn applies to a cold chain; once a previous round's final state is
    available the chain restarts there with n_burn_warm sweeps instead.
    Setting fresh_each_round forces a cold start every round.
    """

    n_keep: int = 2000
    n_burn: int = 500
    n_burn_warm: int = 100
    fresh_each_round: bool = False

    def __post_init__(self):
        if self.n_keep < 1 or self.n_burn < 0 or self.n_burn_warm < 0:
            raise ValueError("chain lengths out of range")

    def scaled(self, factor: float) -> "SamplerSettings":
        """Settings with n_keep scaled down (used for throwaway chains)."""
        return replace(self, n_keep=max(1, int(self.n_keep * factor)))


GIBBS_INIT = (0.0, 1.0, 1.0, 0.0)


class PosteriorSamples:
    """L retained parameter vectors plus the seed that produced them."""

    def __init__(self, thetas: np.ndarray, grid: DoseGrid, seed: int):
        self.thetas = thetas
        self.grid = grid
        self.seed = int(seed)

    @property
    def L(self) -> int:
        return self.thetas.shape[0]

    @cached_property
    def tox(self) -> np.ndarray:
        """Toxicity draws, shape (L, J, K)."""
        return toxicity_draws(self.thetas, self.grid)


def log_likelihood(history: TrialHistory, params: ModelParams, grid: DoseGrid) -> float:
    """Binomial log likelihood of theta given per-cell tallies (0 when empty)."""
    n, s = history.likelihood_counts()
    if n.sum() == 0:
        return 0.0
    p = toxicity_matrix(params, grid)
    mask = n > 0
    return float(np.sum(s[mask] * np.log(p[mask])
                        + (n[mask] - s[mask]) * np.log1p(-p[mask])))


def conditional_domain(params_array: np.ndarray, grid: DoseGrid, dim: int,
                       bound: float = 20.0) -> tuple[float, float]:
    """Feasible interval for theta[dim] with the other coordinates fixed."""
    return _kernels._conditional_domain(
        dim, np.asarray(params_array, dtype=np.float64),
        grid.u_array(), grid.v_array(), float(bound),
    )


def log_posterior_conditional(history: TrialHistory, params_array: np.ndarray,
                              grid: DoseGrid, prior: PriorSpec, dim: int):
    """Unnormalised log density of theta[dim] and its feasible interval.

    Returns (fn, (lo, hi)) where fn maps a scalar to the log conditional.
    Intended for inspection and tests; the Gibbs loop evaluates the same
    quantity inside the compiled kernel.
    """
    th = np.asarray(params_array, dtype=np.float64).copy()
    n, s = history.likelihood_counts()
    active = n > 0
    cx1, cx2, cx3 = _cell_features(grid)
    keep = active.ravel()
    cx1, cx2, cx3 = cx1[keep], cx2[keep], cx3[keep]
    cn = n.ravel()[keep].astype(np.float64)
    cs = s.ravel()[keep].astype(np.float64)
    ptype, p1, p2 = prior.kernel_tables()

    def fn(x: float) -> float:
        return _kernels._log_conditional(
            float(x), dim, th, cx1, cx2, cx3, cn, cs, cn.shape[0], ptype, p1, p2)

    domain = conditional_domain(th, grid, dim, prior.bound)
    if domain[1] - domain[0] <= 0:
        raise RuntimeError(f"infeasible conditional domain for dim {dim}")
    return fn, domain


def _cell_features(grid: DoseGrid):
    u = grid.u_array()[:, None]
    v = grid.v_array()[None, :]
    cx1 = np.broadcast_to(u, (grid.J, grid.K)).ravel().astype(np.float64)
    cx2 = np.broadcast_to(v, (grid.J, grid.K)).ravel().astype(np.float64)
    return cx1.copy(), cx2.copy(), (cx1 * cx2).copy()


def arms_sample(logdensity, domain: tuple[float, float], current: float,
                rng: np.random.Generator, max_rejects: int = 64) -> float:
    """One ARMS draw from an arbitrary univariate log density.

    Reference implementation mirroring the compiled kernel: secant upper
    hull, piecewise-exponential envelope sampling, hull refinement on
    rejection, Metropolis correction against `current`. For log-concave
    targets the correction accepts with probability one.
    """
    lo, hi = float(domain[0]), float(domain[1])
    if hi <= lo:
        raise ValueError("empty ARMS domain")
    span = hi - lo
    loi, hii = lo + 1e-9 * span, hi - 1e-9 * span
    cur = float(current)
    cur_h = min(max(cur, loi), hii)

    xs = list(loi + (hii - loi) * (i + 1) / 6.0 for i in range(5))
    near = int(np.argmin([abs(x - cur_h) for x in xs]))
    if abs(xs[near] - cur_h) > 1e-12 * span:
        xs[near] = cur_h
    xs.sort()
    hs = [_finite(logdensity(x)) for x in xs]
    h_cur = _finite(logdensity(cur))

    for _ in range(max_rejects):
        segs = _hull_segments(xs, hs, loi, hii)
        offset = max(max(y, y + s * (r - l)) for l, r, y, s in segs)
        areas = []
        for l, r, y, s in segs:
            w = r - l
            if w <= 0:
                areas.append(0.0)
                continue
            ytop = y + s * w if s > 0 else y
            aw = abs(s) * w
            q = w if aw < 1e-12 else -np.expm1(-aw) / abs(s)
            areas.append(np.exp(ytop - offset) * q)
        total = sum(areas)
        if total <= 0:
            return cur
        target = rng.random() * total
        acc, pick, frac = 0.0, len(segs) - 1, 0.5
        for i, a in enumerate(areas):
            if a <= 0:
                continue
            acc += a
            if target <= acc:
                pick, frac = i, 1.0 - (acc - target) / a
                break
        l, r, y, s = segs[pick]
        w = r - l
        if abs(s) * w < 1e-12:
            x_new = l + frac * w
        elif s > 0:
            x_new = r + np.log(frac + (1 - frac) * np.exp(-s * w)) / s
        else:
            x_new = l + np.log((1 - frac) + frac * np.exp(s * w)) / s
        x_new = min(max(x_new, loi), hii)
        y_hull = y + s * (x_new - l)
        h_new = _finite(logdensity(x_new))
        if np.log(rng.random() + 1e-320) > h_new - y_hull:
            if len(xs) < 32:
                pos = int(np.searchsorted(xs, x_new))
                sep = 1e-12 * span
                if ((pos >= len(xs) or abs(xs[pos] - x_new) >= sep)
                        and (pos == 0 or abs(xs[pos - 1] - x_new) >= sep)):
                    xs.insert(pos, x_new)
                    hs.insert(pos, h_new)
            continue
        hull_cur = _hull_value(segs, cur_h)
        log_ratio = h_new + min(h_cur, hull_cur) - h_cur - min(h_new, y_hull)
        if np.log(rng.random() + 1e-320) <= log_ratio:
            return x_new
        return cur
    return cur


def _finite(x: float) -> float:
    return float(x) if np.isfinite(x) else -1e300


def _hull_value(segs, x):
    for l, r, y, s in segs:
        if x <= r:
            return y + s * (x - l)
    l, r, y, s = segs[-1]
    return y + s * (x - l)


def _hull_segments(xs, hs, lo, hi):
    """Mirror of the kernel's secant hull (see _kernels._build_hull)."""
    m = len(xs)
    segs = []
    s01 = (hs[1] - hs[0]) / (xs[1] - xs[0])
    if xs[0] > lo:
        segs.append((lo, xs[0], hs[0] + s01 * (lo - xs[0]), s01))
    for i in range(m - 1):
        a, b = xs[i], xs[i + 1]
        w = b - a
        chord = (hs[i + 1] - hs[i]) / w
        lines = []
        if i >= 1:
            sl = (hs[i] - hs[i - 1]) / (a - xs[i - 1])
            lines.append((hs[i], sl))
        if i + 2 <= m - 1:
            sr = (hs[i + 2] - hs[i + 1]) / (xs[i + 2] - b)
            lines.append((hs[i + 1] + sr * (a - b), sr))
        if len(lines) == 2:
            (la, sl), (ra, sr) = lines
            denom = sl - sr
            xc = a if abs(denom) < 1e-300 else a + (ra - la) / denom
            if a < xc < b:
                left, right = ((la, sl), (ra, sr)) if la <= ra else ((ra, sr), (la, sl))
                segs.append(_floor_by_chord(a, xc, left[0], left[1], hs[i], chord))
                ry = right[0] + right[1] * (xc - a)
                cy = hs[i] + chord * (xc - a)
                segs.append(_floor_by_chord(xc, b, ry, right[1], cy, chord))
                continue
            env = min(lines, key=lambda ln: ln[0] + ln[1] * 0.5 * w)
            segs.append(_floor_by_chord(a, b, env[0], env[1], hs[i], chord))
        elif lines:
            env = lines[0]
            segs.append(_floor_by_chord(a, b, env[0], env[1], hs[i], chord))
        else:
            segs.append((a, b, hs[i], chord))
    smn = (hs[m - 1] - hs[m - 2]) / (xs[m - 1] - xs[m - 2])
    if hi > xs[m - 1]:
        segs.append((xs[m - 1], hi, hs[m - 1], smn))
    return segs


def _floor_by_chord(a, b, y, s, cy, chord):
    half = 0.5 * (b - a)
    if y + s * half < cy + chord * half:
        return (a, b, cy, chord)
    return (a, b, y, s)


class GibbsSampler:
    """Stateful per-trial sampler: owns the chain state and warm starts.

    One instance per trial replicate; it is not shareable across threads.
    Each call to sample() runs one chain with an explicit uint64 seed and
    returns the retained draws, leaving the final state behind for the next
    round's warm start.
    """

    def __init__(self, grid: DoseGrid | None = None,
                 prior: PriorSpec | str = "default",
                 settings: SamplerSettings | None = None):
        self.grid = grid or DoseGrid()
        self.prior = PriorSpec(prior) if isinstance(prior, str) else prior
        self.settings = settings or SamplerSettings()
        self._ptype, self._p1, self._p2 = self.prior.kernel_tables()
        self._cx1, self._cx2, self._cx3 = _cell_features(self.grid)
        self._us = self.grid.u_array()
        self._vs = self.grid.v_array()
        self.state: np.ndarray | None = None
        self.mh_stats = np.zeros(2, dtype=np.uint64)

    def reset(self):
        self.state = None

    def acceptance_rate(self) -> float:
        trials, accepts = int(self.mh_stats[0]), int(self.mh_stats[1])
        return accepts / trials if trials else float("nan")

    def sample(self, history: TrialHistory, seed: int,
               n_keep: int | None = None,
               state: np.ndarray | None = None,
               persist_state: bool = True) -> PosteriorSamples:
        """Draw posterior samples conditioned on the given history.

        :param seed: uint64 chain seed (logged by callers for replay).
        :param n_keep: override the retained draw count (EI side chains).
        :param state: explicit warm state; defaults to the stored one.
        :param persist_state: keep the final state for the next round.
        """
        cfg = self.settings
        keep = cfg.n_keep if n_keep is None else int(n_keep)
        start = state if state is not None else self.state
        if cfg.fresh_each_round:
            start = None
        if start is None:
            theta = np.array(GIBBS_INIT, dtype=np.float64)
            burn = cfg.n_burn
        else:
            theta = np.asarray(start, dtype=np.float64).copy()
            burn = cfg.n_burn_warm
        n, s = history.likelihood_counts()
        keep_mask = (n > 0).ravel()
        cn = n.ravel()[keep_mask].astype(np.float64)
        cs = s.ravel()[keep_mask].astype(np.float64)
        out = np.empty((keep, 4), dtype=np.float64)
        _kernels.gibbs_run(
            theta, int(burn), keep,
            self._cx1[keep_mask], self._cx2[keep_mask], self._cx3[keep_mask],
            cn, cs, int(cn.shape[0]),
            self._us, self._vs, float(self.prior.bound),
            self._ptype, self._p1, self._p2,
            np.uint64(seed), out, self.mh_stats,
        )
        if persist_state:
            self.state = theta
        return PosteriorSamples(out, self.grid, seed)
