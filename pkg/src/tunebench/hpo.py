"""Random-search driver: trial training, library generation, time-budget runs.

A library is built once per (optimizer, task) and then resampled by the
estimator module to simulate any number of hyperparameter searches.  Trial i
is fully determined by (master_seed, i): its config draw and its training
seed come from substreams keyed on those integers, so generation can be
parallelized or rerun in any order with identical results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from tunebench.core import (
    BudgetCurve,
    Direction,
    Trial,
    TrialLibrary,
    substream,
)
from tunebench.optim import (
    OptimizerSpec,
    OptimizerState,
    adagrad_step,
    adam_step,
    early_stop,
    poly_decay,
    sgd_step,
)
from tunebench.priors import PriorSpec, effective_lr_config
from tunebench.tasks import TaskInstance


@dataclass(frozen=True)
class TrialOutcome:
    objective: float | None
    diverged: bool
    update_steps: int
    epochs_run: int


def _finite(*arrays) -> bool:
    return all(np.all(np.isfinite(a)) for a in arrays)


def train_trial(
    opt: OptimizerSpec,
    config: Mapping[str, float],
    task: TaskInstance,
    trial_seed: int,
) -> TrialOutcome:
    """Train one configuration with early stopping and divergence detection.

    A trial is flagged diverged when training produces a nonfinite loss,
    gradient or parameter, or when an epoch ends with the validation loss
    above its value at initialization: the run made the model worse than
    no training at all, which is how exploding runs look long before they
    overflow.  Diverged trials record no objective.
    """
    if set(config) != set(opt.hyperparameters):
        raise ValueError(
            f"config keys {sorted(config)} do not match optimizer "
            f"{opt.optimizer_id!r} hyperparameters {sorted(opt.hyperparameters)}"
        )
    lr0 = config["learning_rate"]
    if opt.effective_lr:
        lr0, momentum = effective_lr_config(lr0, config["effective_learning_rate"])
    else:
        momentum = config.get("momentum", 0.0)
    weight_decay = config.get("weight_decay", 0.0)

    params = task.init_params(trial_seed)
    state = OptimizerState.initial(params.size)
    baseline = task.validation_loss(params)
    total_steps = task.max_epochs * task.n_batches
    steps = 0
    val_losses: list[float] = []
    diverged = False

    for epoch in range(task.max_epochs):
        for batch in range(task.n_batches):
            loss, grad = task.batch_loss_grad(params, epoch, batch, trial_seed)
            if not np.isfinite(loss) or not _finite(grad):
                diverged = True
                break
            lr = lr0
            if opt.poly_decay:
                lr = poly_decay(lr0, steps, total_steps, config["poly_exponent"])
            if opt.family == "sgd":
                params, state = sgd_step(params, grad, state, lr, momentum, weight_decay)
            elif opt.family == "adam":
                params, state = adam_step(
                    params, grad, state, lr,
                    config["beta1"], config["beta2"], config["epsilon"],
                )
            elif opt.family == "adagrad":
                params, state = adagrad_step(params, grad, state, lr)
            else:
                raise ValueError(f"unknown optimizer family {opt.family!r}")
            steps += 1
            if not _finite(params):
                diverged = True
                break
        if diverged:
            break
        val = task.validation_loss(params)
        if not np.isfinite(val) or val > baseline:
            diverged = True
            break
        val_losses.append(val)
        if early_stop(val_losses, patience=2, max_epochs=task.max_epochs):
            break

    objective = None if diverged else task.objective(params)
    return TrialOutcome(
        objective=objective,
        diverged=diverged,
        update_steps=steps,
        epochs_run=len(val_losses),
    )


@dataclass(frozen=True)
class SearchRun:
    """One complete random search: budget i.i.d. trials in draw order."""

    optimizer: OptimizerSpec
    prior: PriorSpec
    task_id: str
    budget: int
    master_seed: int
    trials: tuple[Trial, ...]

    def library(self) -> TrialLibrary:
        return TrialLibrary.from_trials(self.trials)


def _trial_seed(master_seed: int, index: int) -> int:
    # hash-expanded so trial seeds never collide with the config streams
    return int(np.random.SeedSequence((master_seed, index, 1)).generate_state(1)[0])


def random_search(
    opt: OptimizerSpec,
    prior: PriorSpec,
    task: TaskInstance,
    budget: int,
    master_seed: int,
) -> SearchRun:
    """Draw ``budget`` configs from the prior and train each one."""
    if budget < 1:
        raise ValueError("budget must be a positive integer")
    if set(prior.names()) != set(opt.hyperparameters):
        raise ValueError(
            f"prior hyperparameters {sorted(prior.names())} do not match "
            f"optimizer {opt.optimizer_id!r} ({sorted(opt.hyperparameters)})"
        )
    trials = []
    for i in range(budget):
        config = prior.sample(substream(master_seed, i, 0))
        seed = _trial_seed(master_seed, i)
        outcome = train_trial(opt, config, task, seed)
        trials.append(
            Trial(
                optimizer_id=opt.optimizer_id,
                task_id=task.task_id,
                seed=seed,
                config=config,
                objective=outcome.objective,
                direction=task.direction,
                update_steps=outcome.update_steps,
                epochs_run=outcome.epochs_run,
                diverged=outcome.diverged,
            )
        )
    return SearchRun(
        optimizer=opt,
        prior=prior,
        task_id=task.task_id,
        budget=budget,
        master_seed=master_seed,
        trials=tuple(trials),
    )


def precompute_library(
    opt: OptimizerSpec,
    prior: PriorSpec,
    task: TaskInstance,
    size: int = 100,
    master_seed: int = 0,
) -> TrialLibrary:
    """Library of ``size`` finished trials for one (optimizer, task) pair."""
    if size < 1:
        raise ValueError("library size must be a positive integer")
    return random_search(opt, prior, task, size, master_seed).library()


@dataclass(frozen=True)
class TimeBudgetResult:
    """Per-optimizer curves over equal step-count intervals."""

    max_steps: int
    boundaries: np.ndarray
    curves: dict[str, BudgetCurve]


def time_budget_curve(
    libraries: Sequence[TrialLibrary],
    intervals: int = 100,
    repetitions: int = 1000,
    rng_seed: int = 0,
) -> TimeBudgetResult:
    """Simulate searches under a shared update-step budget.

    The budget is the smallest total step count any optimizer needed for its
    whole library, split into equal intervals.  Each simulated run draws
    trials with replacement, accumulates their step costs, and records the
    incumbent at every interval boundary; intervals before the first
    completed trial hold the worst sentinel.  Run r of every optimizer uses
    the stream keyed (rng_seed, r), so optimizers of equal library size see
    identical draw sequences and cheaper trials simply reach further into
    the same sequence.
    """
    if not libraries:
        raise ValueError("need at least one library")
    if intervals < 1 or repetitions < 1:
        raise ValueError("intervals and repetitions must be positive integers")
    task_id = libraries[0].task_id
    direction = libraries[0].direction
    seen: set[str] = set()
    for lib in libraries:
        if lib.task_id != task_id or lib.direction is not direction:
            raise ValueError("libraries must share one task and direction")
        if lib.optimizer_id in seen:
            raise ValueError(f"duplicate optimizer id {lib.optimizer_id!r}")
        seen.add(lib.optimizer_id)
        if np.any(lib.update_steps() < 1):
            raise ValueError("every trial must record update_steps >= 1")

    max_steps = min(int(lib.update_steps().sum()) for lib in libraries)
    boundaries = max_steps * np.arange(1, intervals + 1) / intervals

    curves: dict[str, BudgetCurve] = {}
    minimize = direction is Direction.MINIMIZE
    for lib in libraries:
        costs = lib.update_steps()
        objectives = lib.analysis_objectives()
        sentinel = lib.worst_sentinel()
        n = objectives.size
        draws = int(max_steps // int(costs.min())) + 1
        values = np.empty((repetitions, intervals))
        for r in range(repetitions):
            idx = substream(rng_seed, r).integers(0, n, size=draws)
            cumulative = np.cumsum(costs[idx])
            completed = np.searchsorted(cumulative, boundaries, side="right")
            picked = objectives[idx]
            running = np.minimum.accumulate(picked) if minimize else np.maximum.accumulate(picked)
            values[r] = np.where(
                completed > 0, running[np.maximum(completed - 1, 0)], sentinel
            )
        # Stats are taken per interval on 1-D column slices: a whole-array
        # axis=0 reduction uses a different summation order and would not
        # reproduce bitwise the value computed from a standalone 1-D sample.
        cols = [values[:, k] for k in range(intervals)]
        quantiles = {
            "q25": np.array([np.quantile(c, 0.25) for c in cols]),
            "q50": np.array([np.quantile(c, 0.50) for c in cols]),
            "q75": np.array([np.quantile(c, 0.75) for c in cols]),
        }
        curves[lib.optimizer_id] = BudgetCurve(
            budgets=np.arange(1, intervals + 1, dtype=np.int64),
            mean=np.array([c.mean() for c in cols]),
            variance=np.array([c.var() for c in cols]),
            quantiles=quantiles,
        )
    return TimeBudgetResult(max_steps=max_steps, boundaries=boundaries, curves=curves)
