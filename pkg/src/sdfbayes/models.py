"""Joint dose-toxicity model for two-agent combination trials.

The probability of a dose-limiting toxicity at combination (j, k) follows a
four-parameter logistic surface over standardised dose levels u_j (agent 1)
and v_k (agent 2):

    logit(pi_jk) = theta0 + theta1 * u_j + theta2 * v_k + theta3 * u_j * v_k

Sign constraints on the slopes keep the surface strictly increasing in each
agent separately, so posterior draws can be ranked against a toxicity target.
With the default standardised doses (all <= 0) the constraints reduce to

    theta1 > 0,  theta2 > 0,  theta3 < min(theta1 / 3, theta2 / 2).

Dose indices are 1-based everywhere in the public API, matching the usual
(j, k) trial notation; arrays are 0-based internally.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_U = (-2.0, -1.0, 0.0)
DEFAULT_V = (-3.0, -2.0, -1.0, 0.0)


@dataclass(frozen=True)
class DoseGrid:
    """Standardised dose levels for the two agents.

    :param u: strictly increasing levels for agent 1 (length J).
    :param v: strictly increasing levels for agent 2 (length K).
    """

    u: tuple = DEFAULT_U
    v: tuple = DEFAULT_V

    def __post_init__(self):
        u = tuple(float(x) for x in self.u)
        v = tuple(float(x) for x in self.v)
        if len(u) < 1 or len(v) < 1:
            raise ValueError("dose grid needs at least one level per agent")
        if any(b <= a for a, b in zip(u, u[1:])):
            raise ValueError("u levels must be strictly increasing")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("v levels must be strictly increasing")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def J(self) -> int:
        return len(self.u)

    @property
    def K(self) -> int:
        return len(self.v)

    @property
    def n_cells(self) -> int:
        return self.J * self.K

    def u_array(self) -> np.ndarray:
        return np.asarray(self.u, dtype=np.float64)

    def v_array(self) -> np.ndarray:
        return np.asarray(self.v, dtype=np.float64)

    def cells(self):
        """All (j, k) pairs, 1-based, in row-major order."""
        return [(j, k) for j in range(1, self.J + 1) for k in range(1, self.K + 1)]


def slope_lower_bounds(grid: DoseGrid, theta3: float) -> tuple[float, float]:
    """Smallest admissible theta1 and theta2 given theta3.

    Monotonicity in agent 1 needs theta1 + theta3 * v_k > 0 for every k, and
    symmetrically for agent 2 over the u levels.
    """
    v = grid.v_array()
    u = grid.u_array()
    lo1 = max(0.0, float(np.max(-theta3 * v)))
    lo2 = max(0.0, float(np.max(-theta3 * u)))
    return lo1, lo2


def interaction_bounds(grid: DoseGrid, theta1: float, theta2: float) -> tuple[float, float]:
    """Admissible open interval for theta3 given the main-effect slopes.

    Doses that are zero impose nothing; negative doses cap theta3 from above,
    positive ones (not used by the default grid) from below.
    """
    lo, hi = -np.inf, np.inf
    for vk in grid.v:
        if vk < 0.0:
            hi = min(hi, theta1 / -vk)
        elif vk > 0.0:
            lo = max(lo, -theta1 / vk)
    for uj in grid.u:
        if uj < 0.0:
            hi = min(hi, theta2 / -uj)
        elif uj > 0.0:
            lo = max(lo, -theta2 / uj)
    return lo, hi


@dataclass(frozen=True)
class ModelParams:
    """Parameter vector theta = (theta0, theta1, theta2, theta3)."""

    theta0: float
    theta1: float
    theta2: float
    theta3: float
    grid: DoseGrid = field(default_factory=DoseGrid)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not all(np.isfinite(self.as_array())):
            raise ValueError("parameters must be finite")
        if self.theta1 <= 0.0 or self.theta2 <= 0.0:
            raise ValueError("main-effect slopes must be positive")
        lo1, lo2 = slope_lower_bounds(self.grid, self.theta3)
        if self.theta1 <= lo1 or self.theta2 <= lo2:
            raise ValueError(
                "slopes violate monotonicity: need theta1 > %g and theta2 > %g"
                % (lo1, lo2)
            )

    def as_array(self) -> np.ndarray:
        return np.array([self.theta0, self.theta1, self.theta2, self.theta3])


def logistic_toxicity(params: ModelParams, grid: DoseGrid, j: int, k: int) -> float:
    """Toxicity probability at the 1-based combination (j, k)."""
    if not (1 <= j <= grid.J and 1 <= k <= grid.K):
        raise IndexError(f"dose index ({j}, {k}) outside {grid.J}x{grid.K} grid")
    uj = grid.u[j - 1]
    vk = grid.v[k - 1]
    logit = params.theta0 + params.theta1 * uj + params.theta2 * vk + params.theta3 * uj * vk
    return float(1.0 / (1.0 + np.exp(-logit)))


def toxicity_matrix(params: ModelParams, grid: DoseGrid) -> np.ndarray:
    """J x K matrix of toxicity probabilities for one parameter vector."""
    return toxicity_draws(params.as_array()[None, :], grid)[0]


def toxicity_draws(thetas: np.ndarray, grid: DoseGrid) -> np.ndarray:
    """Toxicity surfaces for a batch of parameter vectors.

    :param thetas: array of shape (L, 4).
    :return: array of shape (L, J, K); entry (l, j-1, k-1) is p_jk(theta_l).
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    u = grid.u_array()[:, None]
    v = grid.v_array()[None, :]
    logit = (
        thetas[:, 0, None, None]
        + thetas[:, 1, None, None] * u
        + thetas[:, 2, None, None] * v
        + thetas[:, 3, None, None] * (u * v)
    )
    return 1.0 / (1.0 + np.exp(-logit))


def random_valid_params(rng: np.random.Generator, grid: DoseGrid | None = None,
                        scale: float = 2.0) -> ModelParams:
    """Draw a parameter vector satisfying the monotonicity constraints.

    Used by property tests; not a posterior draw of any kind.
    """
    grid = grid or DoseGrid()
    theta0 = rng.normal(0.0, scale)
    theta1 = rng.exponential(scale) + 1e-6
    theta2 = rng.exponential(scale) + 1e-6
    lo, hi = interaction_bounds(grid, theta1, theta2)
    lo = max(lo, -10.0 * scale)
    hi = min(hi, 10.0 * scale)
    # keep strictly interior so ModelParams.validate() cannot trip on the edge
    width = hi - lo
    theta3 = lo + width * rng.uniform(0.01, 0.99)
    return ModelParams(theta0, theta1, theta2, theta3, grid)
