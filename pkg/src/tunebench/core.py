"""Shared vocabulary: directions, trials, trial libraries, incumbent traces."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

HyperparameterConfig = Mapping[str, float]


def substream(*key: int) -> np.random.Generator:
    """Independent random stream derived from a tuple of integers.

    The key is hash-expanded (splitmix-style, via numpy's SeedSequence) into
    generator state, so distinct keys give statistically independent streams
    and the same key always reproduces the same stream.  Work that is keyed
    by (seed, repetition index) can therefore run in any order or in parallel
    without changing results.
    """
    return np.random.default_rng(np.random.SeedSequence(key))


class Direction(enum.Enum):
    """Whether smaller or larger objective values are better."""

    MINIMIZE = "min"
    MAXIMIZE = "max"


def better(a: float, b: float, direction: Direction) -> bool:
    """True when ``a`` is strictly better than ``b`` under ``direction``."""
    if direction is Direction.MINIMIZE:
        return a < b
    return a > b


def to_score(x: float, direction: Direction) -> float:
    """Map an objective onto a higher-is-better axis (negates under MINIMIZE)."""
    if direction is Direction.MINIMIZE:
        return -x
    return x


def incumbents(objectives: Sequence[float], direction: Direction) -> "IncumbentTrace":
    """Running best-so-far of an ordered objective sequence.

    The result is monotone: nonincreasing under MINIMIZE, nondecreasing
    under MAXIMIZE.
    """
    values = np.asarray(objectives, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("objectives must be a nonempty 1-d sequence")
    if direction is Direction.MINIMIZE:
        running = np.minimum.accumulate(values)
    else:
        running = np.maximum.accumulate(values)
    return IncumbentTrace(values=running)


@dataclass(frozen=True)
class IncumbentTrace:
    """Best objective seen after each evaluation of a search run."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def __getitem__(self, i):
        return self.values[i]


@dataclass(frozen=True)
class Trial:
    """One hyperparameter draw trained to completion on one task.

    ``objective`` is None exactly when the run diverged; analysis code
    substitutes a worst-sentinel value via ``TrialLibrary.analysis_objectives``
    so arithmetic never sees NaN.
    """

    optimizer_id: str
    task_id: str
    seed: int
    config: HyperparameterConfig
    objective: float | None
    direction: Direction
    update_steps: int
    epochs_run: int
    diverged: bool = False

    def __post_init__(self) -> None:
        if self.diverged:
            if self.objective is not None and not math.isfinite(self.objective):
                raise ValueError("diverged trial objective must be None or finite")
        else:
            if self.objective is None or not math.isfinite(self.objective):
                raise ValueError("non-diverged trial requires a finite objective")
            if self.update_steps < 1:
                raise ValueError("non-diverged trial must record update_steps >= 1")
        if self.update_steps < 0 or self.epochs_run < 0:
            raise ValueError("update_steps and epochs_run must be nonnegative")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")


@dataclass(frozen=True)
class TrialLibrary:
    """All trials for one (optimizer, task) pair, in generation order."""

    optimizer_id: str
    task_id: str
    direction: Direction
    trials: tuple[Trial, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "trials", tuple(self.trials))
        if not self.trials:
            raise ValueError("library must contain at least one trial")
        for t in self.trials:
            if t.optimizer_id != self.optimizer_id or t.task_id != self.task_id:
                raise ValueError("trial optimizer/task ids do not match library")
            if t.direction is not self.direction:
                raise ValueError("trial direction does not match library")

    @classmethod
    def from_trials(cls, trials: Sequence[Trial]) -> "TrialLibrary":
        first = trials[0]
        return cls(
            optimizer_id=first.optimizer_id,
            task_id=first.task_id,
            direction=first.direction,
            trials=tuple(trials),
        )

    def __len__(self) -> int:
        return len(self.trials)

    def worst_sentinel(self) -> float:
        """Value one ulp beyond the worst finite objective in the library.

        Used both for diverged trials and for budget intervals before any
        trial has finished: strictly worse than everything observed, finite.
        """
        finished = [t.objective for t in self.trials if not t.diverged]
        if not finished:
            raise ValueError("library has no finished trials")
        if self.direction is Direction.MINIMIZE:
            return float(np.nextafter(max(finished), np.inf))
        return float(np.nextafter(min(finished), -np.inf))

    def analysis_objectives(self) -> np.ndarray:
        """Objectives with diverged trials mapped to the worst sentinel.

        The flag decides, not the stored value: a diverged trial that still
        carries a (finite) last-seen objective is imputed all the same.
        """
        sentinel = None
        out = np.empty(len(self.trials), dtype=float)
        for i, t in enumerate(self.trials):
            if t.diverged:
                if sentinel is None:
                    sentinel = self.worst_sentinel()
                out[i] = sentinel
            else:
                out[i] = t.objective
        return out

    def update_steps(self) -> np.ndarray:
        return np.array([t.update_steps for t in self.trials], dtype=np.int64)


@dataclass(frozen=True)
class BudgetCurve:
    """Statistics of the best objective found, indexed by search budget."""

    budgets: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    quantiles: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        b = np.asarray(self.budgets, dtype=np.int64)
        m = np.asarray(self.mean, dtype=float)
        v = np.asarray(self.variance, dtype=float)
        if not (b.shape == m.shape == v.shape):
            raise ValueError("budgets, mean and variance must have equal shape")
        if np.any(v < 0):
            raise ValueError("variance must be nonnegative")
        for key, q in self.quantiles.items():
            if np.asarray(q).shape != b.shape:
                raise ValueError(f"quantile track {key!r} has mismatched shape")
        object.__setattr__(self, "budgets", b)
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "variance", v)
