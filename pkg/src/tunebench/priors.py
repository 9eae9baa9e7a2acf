"""Hyperparameter priors: the searchable half of an optimizer definition.

An optimizer here is an update rule together with the distributions its
hyperparameters are drawn from; change the prior and you change how tunable
the optimizer looks.  This module holds the distribution families, the
stock priors for every roster optimizer, and refitting from observed
well-performing configurations.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from tunebench.core import Direction, Trial
from tunebench.optim import optimizer_spec

_MIN_SIGMA = 0.01

# excluded from refitting: its plausible range is fixed by construction
_DECAY_EXPONENT = "poly_exponent"


def _finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name} parameters must be finite")


def _log_values(name: str, values: np.ndarray) -> np.ndarray:
    if np.any(values <= 0):
        raise ValueError(f"{name} requires strictly positive samples to fit")
    return np.log(values)


@dataclass(frozen=True)
class LogNormal:
    """exp(Normal(mu, sigma)); the workhorse prior for learning rates."""

    mu: float
    sigma: float

    def __post_init__(self) -> None:
        _finite("log-normal", self.mu, self.sigma)
        if self.sigma <= 0:
            raise ValueError("log-normal sigma must be positive")

    def sample(self, rng: np.random.Generator) -> float:
        return float(np.exp(rng.normal(self.mu, self.sigma)))

    @classmethod
    def fit(cls, values: np.ndarray) -> "LogNormal":
        logs = _log_values("log-normal", values)
        mu = float(logs.mean())
        sigma = float(logs.std())  # population std: the MLE
        if sigma < _MIN_SIGMA:
            warnings.warn(
                f"log-normal fit is degenerate (sigma={sigma:.3g}); "
                f"flooring sigma at {_MIN_SIGMA}",
                stacklevel=2,
            )
            sigma = _MIN_SIGMA
        return cls(mu=mu, sigma=sigma)


@dataclass(frozen=True)
class LogUniform10:
    """10**Uniform(low, high): log-uniform over decades."""

    low: float
    high: float

    def __post_init__(self) -> None:
        _finite("log-uniform", self.low, self.high)
        if self.low > self.high:
            raise ValueError("log-uniform bounds must satisfy low <= high")

    def sample(self, rng: np.random.Generator) -> float:
        return float(10.0 ** rng.uniform(self.low, self.high))

    @classmethod
    def fit(cls, values: np.ndarray) -> "LogUniform10":
        if np.any(values <= 0):
            raise ValueError("log-uniform requires strictly positive samples to fit")
        exponents = np.log10(values)
        return cls(low=float(exponents.min()), high=float(exponents.max()))


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def __post_init__(self) -> None:
        _finite("uniform", self.low, self.high)
        if self.low > self.high:
            raise ValueError("uniform bounds must satisfy low <= high")

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.low, self.high))

    @classmethod
    def fit(cls, values: np.ndarray) -> "Uniform":
        return cls(low=float(values.min()), high=float(values.max()))


@dataclass(frozen=True)
class OneMinusLogUniform10:
    """1 - 10**Uniform(low, high); concentrates mass just below 1.

    With bounds (-5, -1) the samples land in (0.9, 0.99999), which is the
    natural scale for exponential-averaging coefficients.
    """

    low: float
    high: float

    def __post_init__(self) -> None:
        _finite("one-minus-log-uniform", self.low, self.high)
        if self.low > self.high:
            raise ValueError("one-minus-log-uniform bounds must satisfy low <= high")

    def sample(self, rng: np.random.Generator) -> float:
        return float(1.0 - 10.0 ** rng.uniform(self.low, self.high))

    @classmethod
    def fit(cls, values: np.ndarray) -> "OneMinusLogUniform10":
        complements = 1.0 - values
        if np.any(complements <= 0):
            raise ValueError(
                "one-minus-log-uniform requires samples strictly below 1 to fit"
            )
        exponents = np.log10(complements)
        return cls(low=float(exponents.min()), high=float(exponents.max()))


@dataclass(frozen=True)
class Fixed:
    """Point mass: a hyperparameter that is not searched."""

    value: float

    def __post_init__(self) -> None:
        _finite("fixed", self.value)

    def sample(self, rng: np.random.Generator) -> float:
        return self.value


Distribution = LogNormal | LogUniform10 | Uniform | OneMinusLogUniform10 | Fixed


@dataclass(frozen=True)
class PriorSpec:
    """Per-hyperparameter distributions for one optimizer."""

    distributions: Mapping[str, Distribution]

    def __post_init__(self) -> None:
        object.__setattr__(self, "distributions", dict(self.distributions))
        if not self.distributions:
            raise ValueError("prior must cover at least one hyperparameter")

    def sample(self, rng: np.random.Generator) -> dict[str, float]:
        """Draw one full configuration, hyperparameters in declaration order."""
        return {name: dist.sample(rng) for name, dist in self.distributions.items()}

    def names(self) -> tuple[str, ...]:
        return tuple(self.distributions)


_SGD_LR = LogNormal(mu=-2.09, sigma=1.312)
_ADAGRAD_LR = LogNormal(mu=-2.004, sigma=1.20)
_ADAM_LR = LogNormal(mu=-2.69, sigma=1.42)

_FREE_PRIORS: dict[str, dict[str, Distribution]] = {
    "sgd": {
        "learning_rate": _SGD_LR,
        "effective_learning_rate": _SGD_LR,
        "momentum": Uniform(0.0, 1.0),
        "weight_decay": LogUniform10(-5.0, -1.0),
        _DECAY_EXPONENT: Uniform(0.5, 5.0),
    },
    "adagrad": {
        "learning_rate": _ADAGRAD_LR,
    },
    "adam": {
        "learning_rate": _ADAM_LR,
        "beta1": OneMinusLogUniform10(-5.0, -1.0),
        "beta2": OneMinusLogUniform10(-5.0, -1.0),
        "epsilon": LogUniform10(-8.0, 0.0),
        _DECAY_EXPONENT: Uniform(0.5, 5.0),
    },
}


def default_priors(optimizer_id: str) -> PriorSpec:
    """Stock prior for a roster optimizer: free slots get their family's
    default distribution, fixed slots become point masses."""
    spec = optimizer_spec(optimizer_id)
    distributions: dict[str, Distribution] = {}
    for name in spec.free:
        distributions[name] = _FREE_PRIORS[spec.family][name]
    for name, value in spec.fixed.items():
        distributions[name] = Fixed(value)
    return PriorSpec(distributions)


def effective_lr_config(learning_rate: float, effective_learning_rate: float) -> tuple[float, float]:
    """Resolve an (lr, effective lr) draw into (lr, momentum).

    The effective learning rate of heavy-ball SGD is lr / (1 - momentum);
    sampling it directly and backing out momentum = max(0, 1 - lr/lr_eff)
    couples the two draws instead of treating momentum as independent.
    """
    if learning_rate <= 0 or effective_learning_rate <= 0:
        raise ValueError("learning rates must be positive")
    return learning_rate, max(0.0, 1.0 - learning_rate / effective_learning_rate)


def retained_trials(trials: Sequence[Trial], retention: float = 0.2) -> list[Trial]:
    """Keep, per task, the trials whose objective is within ``retention``
    (relative) of that task's best, then pool across tasks.

    Diverged trials never qualify.  The relative band reads
    ``|objective - best| <= retention * |best|`` on the worse side of best,
    which for positive losses is exactly "within 20% of the best loss".
    """
    if not 0.0 <= retention:
        raise ValueError("retention must be nonnegative")
    finished = [t for t in trials if not t.diverged]
    if not finished:
        raise ValueError("no finished trials to calibrate from")
    by_task: dict[str, list[Trial]] = {}
    for t in finished:
        by_task.setdefault(t.task_id, []).append(t)
    kept: list[Trial] = []
    for task_trials in by_task.values():
        direction = task_trials[0].direction
        objectives = np.array([t.objective for t in task_trials])
        if direction is Direction.MINIMIZE:
            best = float(objectives.min())
            cutoff = best + retention * abs(best)
            kept.extend(t for t, o in zip(task_trials, objectives) if o <= cutoff)
        else:
            best = float(objectives.max())
            cutoff = best - retention * abs(best)
            kept.extend(t for t, o in zip(task_trials, objectives) if o >= cutoff)
    return kept


def calibrate(trials: Sequence[Trial], retention: float = 0.2) -> PriorSpec:
    """Refit an optimizer's free priors to its well-performing configurations.

    All trials must belong to one optimizer.  Each free hyperparameter is
    refit by maximum likelihood within its declared family; fixed slots and
    the decay exponent keep their stock distributions.
    """
    trials = list(trials)
    if not trials:
        raise ValueError("no trials to calibrate from")
    optimizer_id = trials[0].optimizer_id
    if any(t.optimizer_id != optimizer_id for t in trials):
        raise ValueError("calibration trials must all share one optimizer")
    template = default_priors(optimizer_id)
    kept = retained_trials(trials, retention)

    fitted: dict[str, Distribution] = {}
    for name, dist in template.distributions.items():
        if isinstance(dist, Fixed) or name == _DECAY_EXPONENT:
            fitted[name] = dist
            continue
        values = np.array([t.config[name] for t in kept], dtype=float)
        if values.size < 2:
            raise ValueError(
                f"need at least 2 retained samples to fit {name!r}, got {values.size}"
            )
        fitted[name] = type(dist).fit(values)
    return PriorSpec(fitted)
