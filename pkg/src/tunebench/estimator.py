"""Exact and bootstrap estimators for the best objective found at a budget.

Random search with budget S draws S configurations independently from the
same distribution, so the best result after S trials is the extremum of S
i.i.d. draws.  Given a finite library of N completed trials, the empirical
CDF F makes that distribution exact and cheap: the best of S draws takes the
value y_i with probability ``F(y_i)**S - F(y_{i-1})**S`` (for maximization),
which yields closed forms for the mean, variance and quantiles at every
budget without simulating anything.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tunebench.core import (
    BudgetCurve,
    Direction,
    IncumbentTrace,
    TrialLibrary,
    substream,
)

# E[best^2] - E[best]^2 in floats can land a hair below zero for degenerate
# libraries; anything below this is a genuine bug, not roundoff.
_VARIANCE_SLACK = 1e-12


@dataclass(frozen=True)
class EmpiricalCdf:
    """Step CDF on a finite support.

    ``counts`` holds multiplicities when the CDF was built from samples and
    is None for derived distributions (e.g. the best-of-S distribution).
    """

    support: np.ndarray
    cdf: np.ndarray
    counts: np.ndarray | None = None

    def __post_init__(self) -> None:
        support = np.asarray(self.support, dtype=float)
        cdf = np.asarray(self.cdf, dtype=float)
        if support.ndim != 1 or support.size == 0:
            raise ValueError("support must be a nonempty 1-d array")
        if support.shape != cdf.shape:
            raise ValueError("support and cdf must have equal length")
        if np.any(np.diff(support) <= 0):
            raise ValueError("support must be strictly increasing")
        if np.any(np.diff(cdf) < 0) or cdf[0] < 0:
            raise ValueError("cdf must be nondecreasing and nonnegative")
        if cdf[-1] != 1.0:
            raise ValueError("cdf must reach exactly 1 at the largest support point")
        support.setflags(write=False)
        cdf.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "cdf", cdf)

    @property
    def masses(self) -> np.ndarray:
        return np.diff(self.cdf, prepend=0.0)

    def mean(self) -> float:
        return float(self.support @ self.masses)

    def variance(self) -> float:
        m = self.masses
        first = float(self.support @ m)
        second = float((self.support * self.support) @ m)
        return _clamp_variance(second - first * first)

    def quantile(self, q: float) -> float:
        """Generalized inverse: smallest support value y with F(y) >= q."""
        if not 0.0 < q <= 1.0:
            raise ValueError("quantile level must lie in (0, 1]")
        idx = int(np.searchsorted(self.cdf, q, side="left"))
        return float(self.support[idx])


def _clamp_variance(var: float) -> float:
    if var < 0.0:
        if var < -_VARIANCE_SLACK:
            raise RuntimeError(f"variance computation produced {var}; expected >= 0")
        return 0.0
    return var


def _checked_values(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("values must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("values must all be finite")
    return arr


def _checked_budget(budget: int) -> int:
    b = int(budget)
    if b < 1:
        raise ValueError("budget must be a positive integer")
    return b


def empirical_cdf(values) -> EmpiricalCdf:
    """Empirical CDF of a finite sample, duplicates merged into counts."""
    arr = _checked_values(values)
    support, counts = np.unique(arr, return_counts=True)
    cdf = np.cumsum(counts) / arr.size
    return EmpiricalCdf(support=support, cdf=cdf, counts=counts)


def _max_powered_cdf(values: np.ndarray, budget: int) -> tuple[np.ndarray, np.ndarray]:
    # distribution of max(X_1..X_S): P(max <= y) = F(y)**S
    support, counts = np.unique(values, return_counts=True)
    base = np.cumsum(counts) / values.size
    return support, base**budget


def expected_best_at(values, budget: int, direction: Direction) -> float:
    """Exact expectation of the best of ``budget`` i.i.d. draws from ``values``.

    Minimization is handled by negating the values, applying the maximum
    formula and negating the result, so the two directions are exact mirror
    images of each other.
    """
    budget = _checked_budget(budget)
    arr = _checked_values(values)
    if direction is Direction.MINIMIZE:
        return -expected_best_at(-arr, budget, Direction.MAXIMIZE)
    support, powered = _max_powered_cdf(arr, budget)
    masses = np.diff(powered, prepend=0.0)
    return float(support @ masses)


def variance_best_at(values, budget: int, direction: Direction) -> float:
    """Exact variance of the best of ``budget`` i.i.d. draws from ``values``."""
    budget = _checked_budget(budget)
    arr = _checked_values(values)
    if direction is Direction.MINIMIZE:
        # variance is invariant under negation
        arr = -arr
    support, powered = _max_powered_cdf(arr, budget)
    masses = np.diff(powered, prepend=0.0)
    first = float(support @ masses)
    second = float((support * support) @ masses)
    return _clamp_variance(second - first * first)


def best_at_distribution(values, budget: int, direction: Direction) -> EmpiricalCdf:
    """Full distribution of the best of ``budget`` i.i.d. draws from ``values``."""
    budget = _checked_budget(budget)
    arr = _checked_values(values)
    if direction is Direction.MAXIMIZE:
        support, powered = _max_powered_cdf(arr, budget)
        return EmpiricalCdf(support=support, cdf=powered)
    # min(X) = -max(-X): flip the support back and complement the CDF so the
    # top entry is exactly 1 by construction.
    neg_support, neg_powered = _max_powered_cdf(-arr, budget)
    support = -neg_support[::-1]
    padded = np.concatenate(([0.0], neg_powered))
    cdf = 1.0 - padded[len(neg_support) - 1 :: -1]
    return EmpiricalCdf(support=support, cdf=cdf)


def exact_budget_curve(library: TrialLibrary, max_budget: int) -> BudgetCurve:
    """Closed-form budget curve for budgets 1..max_budget.

    Returns the mean, variance and quartiles of the best objective after t
    library draws, for every t.  Diverged trials enter as the library's
    worst sentinel so they drag the curve the way a failed run would.
    """
    max_budget = _checked_budget(max_budget)
    objectives = library.analysis_objectives()
    budgets = np.arange(1, max_budget + 1, dtype=np.int64)
    mean = np.empty(max_budget)
    variance = np.empty(max_budget)
    quantiles = {"q25": np.empty(max_budget), "q50": np.empty(max_budget), "q75": np.empty(max_budget)}
    for i, t in enumerate(budgets):
        dist = best_at_distribution(objectives, int(t), library.direction)
        mean[i] = dist.mean()
        variance[i] = dist.variance()
        quantiles["q25"][i] = dist.quantile(0.25)
        quantiles["q50"][i] = dist.quantile(0.50)
        quantiles["q75"][i] = dist.quantile(0.75)
    return BudgetCurve(budgets=budgets, mean=mean, variance=variance, quantiles=quantiles)


def bootstrap_runs(
    library: TrialLibrary,
    budget: int,
    repetitions: int,
    rng_seed: int,
) -> list[IncumbentTrace]:
    """Simulate random-search runs by resampling the library with replacement.

    Repetition r draws its indices from the stream keyed (rng_seed, r), so
    repetitions are independent of execution order and can be parallelized
    or compared across budgets: a longer budget extends the same draws.
    """
    budget = _checked_budget(budget)
    if repetitions < 1:
        raise ValueError("repetitions must be a positive integer")
    objectives = library.analysis_objectives()
    n = objectives.size
    indices = np.empty((repetitions, budget), dtype=np.int64)
    for r in range(repetitions):
        indices[r] = substream(rng_seed, r).integers(0, n, size=budget)
    draws = objectives[indices]
    if library.direction is Direction.MINIMIZE:
        running = np.minimum.accumulate(draws, axis=1)
    else:
        running = np.maximum.accumulate(draws, axis=1)
    return [IncumbentTrace(values=row) for row in running]
