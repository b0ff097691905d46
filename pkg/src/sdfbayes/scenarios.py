"""Built-in simulation scenarios: true toxicity surfaces and targets.

Each scenario fixes a 3x4 grid of true toxicity probabilities together with
the trial targets (xi, eps, delta). The MTD set is derived: every combination
whose true toxicity is closest to xi. Rows are j = 1 (lowest dose of agent 1)
first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .models import DoseGrid

DEFAULT_XI = 0.30
DEFAULT_EPS = 0.05
DEFAULT_DELTA = 0.05


@dataclass(frozen=True)
class Scenario:
    name: str
    true_tox: np.ndarray
    grid: DoseGrid = field(default_factory=DoseGrid)
    xi: float = DEFAULT_XI
    eps: float = DEFAULT_EPS
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        tox = np.asarray(self.true_tox, dtype=np.float64)
        if tox.shape != (self.grid.J, self.grid.K):
            raise ValueError(
                f"true_tox shape {tox.shape} does not match grid "
                f"{self.grid.J}x{self.grid.K}"
            )
        if np.any(tox < 0.0) or np.any(tox > 1.0):
            raise ValueError("toxicities must lie in [0, 1]")
        tox.setflags(write=False)
        object.__setattr__(self, "true_tox", tox)

    @property
    def mtd_set(self) -> frozenset:
        """1-based (j, k) combinations with true toxicity closest to xi."""
        gap = np.abs(self.true_tox - self.xi)
        best = gap.min()
        js, ks = np.nonzero(np.isclose(gap, best, rtol=0.0, atol=1e-12))
        return frozenset((int(j) + 1, int(k) + 1) for j, k in zip(js, ks))

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "J": self.grid.J,
            "K": self.grid.K,
            "u": list(self.grid.u),
            "v": list(self.grid.v),
            "trueTox": [[float(x) for x in row] for row in self.true_tox],
            "xi": self.xi,
            "eps": self.eps,
            "delta": self.delta,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_json_dict(), indent=indent)

    @staticmethod
    def from_json_dict(d: dict) -> "Scenario":
        grid = DoseGrid(u=tuple(d["u"]), v=tuple(d["v"]))
        tox = np.asarray(d["trueTox"], dtype=np.float64)
        if tox.shape != (d["J"], d["K"]):
            raise ValueError("trueTox shape disagrees with J, K")
        return Scenario(
            name=d["name"], true_tox=tox, grid=grid,
            xi=float(d["xi"]), eps=float(d["eps"]), delta=float(d["delta"]),
        )


def average_scenario(a: Scenario, b: Scenario, name: str | None = None) -> Scenario:
    """Entrywise mean of two scenarios' true toxicities (same grid and targets)."""
    if a.grid != b.grid:
        raise ValueError("scenario grids differ")
    if (a.xi, a.eps, a.delta) != (b.xi, b.eps, b.delta):
        raise ValueError("scenario targets differ")
    return Scenario(
        name=name or f"avg({a.name},{b.name})",
        true_tox=(a.true_tox + b.true_tox) / 2.0,
        grid=a.grid, xi=a.xi, eps=a.eps, delta=a.delta,
    )


# True toxicity tables, row j=1 first. A-D and RW are the main synthetic and
# real-world surfaces; E-I extend the synthetic set; EP is the entrywise
# average of A and B used for the pooled-population baseline.
_TABLES = {
    "A": [
        [0.05, 0.10, 0.15, 0.30],
        [0.10, 0.15, 0.30, 0.45],
        [0.15, 0.30, 0.45, 0.50],
    ],
    "B": [
        [0.02, 0.08, 0.10, 0.11],
        [0.05, 0.10, 0.13, 0.15],
        [0.09, 0.12, 0.15, 0.30],
    ],
    "C": [
        [0.02, 0.10, 0.15, 0.50],
        [0.05, 0.12, 0.30, 0.55],
        [0.08, 0.15, 0.45, 0.60],
    ],
    "D": [
        [0.05, 0.12, 0.20, 0.30],
        [0.10, 0.20, 0.30, 0.40],
        [0.30, 0.42, 0.52, 0.62],
    ],
    "RW": [
        [0.04, 0.07, 0.11, 0.17],
        [0.08, 0.13, 0.20, 0.30],
        [0.13, 0.21, 0.30, 0.43],
    ],
    "E": [
        [0.05, 0.08, 0.10, 0.13],
        [0.09, 0.12, 0.15, 0.30],
        [0.15, 0.30, 0.45, 0.50],
    ],
    "F": [
        [0.03, 0.06, 0.08, 0.10],
        [0.07, 0.12, 0.16, 0.35],
        [0.10, 0.15, 0.35, 0.50],
    ],
    "G": [
        [0.05, 0.10, 0.17, 0.35],
        [0.10, 0.17, 0.35, 0.45],
        [0.17, 0.35, 0.45, 0.50],
    ],
    "H": [
        [0.03, 0.06, 0.08, 0.10],
        [0.07, 0.12, 0.16, 0.25],
        [0.10, 0.15, 0.25, 0.40],
    ],
    "I": [
        [0.03, 0.08, 0.18, 0.25],
        [0.07, 0.12, 0.25, 0.40],
        [0.10, 0.25, 0.40, 0.60],
    ],
    "EP": [
        [0.035, 0.090, 0.125, 0.205],
        [0.075, 0.125, 0.215, 0.300],
        [0.120, 0.210, 0.300, 0.400],
    ],
}

SCENARIO_NAMES = tuple(_TABLES)


def builtin_scenario(name: str) -> Scenario:
    """Look up a built-in scenario by name (A, B, C, D, RW, E..I, EP)."""
    key = name.upper()
    if key not in _TABLES:
        raise KeyError(f"unknown scenario {name!r}; choose from {', '.join(_TABLES)}")
    return Scenario(name=key, true_tox=np.asarray(_TABLES[key]))
