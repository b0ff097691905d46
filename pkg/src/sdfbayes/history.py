"""Trial history bookkeeping: allocation and DLT tallies per dose combination."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import DoseGrid


@dataclass
class HistoryRecord:
    round: int
    dc: tuple  # 1-based (j, k)
    outcome: int  # 1 = DLT observed
    group: int | None = None


class TrialHistory:
    """Counts n_a and s_a per combination plus the ordered outcome sequence.

    Seeded prior observations (from a simulated pre-trial) are kept in
    separate count matrices: they enter the likelihood but not the sequence,
    so budget accounting and realised DLT rates never see them.
    """

    def __init__(self, grid: DoseGrid | None = None):
        self.grid = grid or DoseGrid()
        shape = (self.grid.J, self.grid.K)
        self.n_count = np.zeros(shape, dtype=np.int64)
        self.s_count = np.zeros(shape, dtype=np.int64)
        self.prior_n = np.zeros(shape, dtype=np.int64)
        self.prior_s = np.zeros(shape, dtype=np.int64)
        self.sequence: list[HistoryRecord] = []

    def __len__(self) -> int:
        return len(self.sequence)

    @property
    def t(self) -> int:
        """Current round index (1-based): one past the recorded outcomes."""
        return len(self.sequence) + 1

    def record(self, dc: tuple, outcome: int, group: int | None = None):
        j, k = dc
        if not (1 <= j <= self.grid.J and 1 <= k <= self.grid.K):
            raise IndexError(f"dose index {dc} outside grid")
        if outcome not in (0, 1):
            raise ValueError("outcome must be 0 or 1")
        self.n_count[j - 1, k - 1] += 1
        self.s_count[j - 1, k - 1] += int(outcome)
        self.sequence.append(HistoryRecord(len(self.sequence) + 1, (j, k), int(outcome), group))

    def merge_prior(self, other: "TrialHistory"):
        """Fold another history's tallies in as prior (likelihood-only) counts."""
        self.prior_n += other.n_count + other.prior_n
        self.prior_s += other.s_count + other.prior_s

    def likelihood_counts(self) -> tuple[np.ndarray, np.ndarray]:
        """(n, s) matrices the posterior conditions on, including prior seeds."""
        return self.n_count + self.prior_n, self.s_count + self.prior_s

    def dlt_rate(self) -> float:
        """Realised S(t): mean outcome over enrolled patients (0 if none)."""
        if not self.sequence:
            return 0.0
        return sum(r.outcome for r in self.sequence) / len(self.sequence)

    def copy(self) -> "TrialHistory":
        dup = TrialHistory(self.grid)
        dup.n_count = self.n_count.copy()
        dup.s_count = self.s_count.copy()
        dup.prior_n = self.prior_n.copy()
        dup.prior_s = self.prior_s.copy()
        dup.sequence = list(self.sequence)
        return dup
