"""Update rules, learning-rate decay and early stopping for the testbed.

Steppers are pure: they take (params, grads, state) plus hyperparameters and
return fresh arrays, so a training step is reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class OptimizerState:
    """Per-parameter buffers; each update rule touches only its own slots."""

    velocity: np.ndarray  # SGD momentum buffer
    m: np.ndarray  # Adam first moment
    u: np.ndarray  # Adam second moment
    accum: np.ndarray  # Adagrad squared-gradient accumulator
    step: int = 0

    @classmethod
    def initial(cls, dim: int) -> "OptimizerState":
        zeros = np.zeros(dim)
        return cls(velocity=zeros, m=zeros, u=zeros, accum=zeros, step=0)


def sgd_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: OptimizerState,
    lr: float,
    momentum: float = 0.0,
    weight_decay: float = 0.0,
) -> tuple[np.ndarray, OptimizerState]:
    """Heavy-ball SGD with decoupled weight decay applied before the update."""
    w = (1.0 - weight_decay) * params
    v = momentum * state.velocity + grads
    w = w - lr * v
    return w, replace(state, velocity=v, step=state.step + 1)


def adam_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: OptimizerState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[np.ndarray, OptimizerState]:
    t = state.step + 1
    m = beta1 * state.m + (1.0 - beta1) * grads
    u = beta2 * state.u + (1.0 - beta2) * grads * grads
    m_hat = m / (1.0 - beta1**t)
    u_hat = u / (1.0 - beta2**t)
    w = params - lr * m_hat / (np.sqrt(u_hat) + eps)
    return w, replace(state, m=m, u=u, step=t)


def adagrad_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: OptimizerState,
    lr: float,
    eps: float = 1e-10,
) -> tuple[np.ndarray, OptimizerState]:
    accum = state.accum + grads * grads
    w = params - lr * grads / (np.sqrt(accum) + eps)
    return w, replace(state, accum=accum, step=state.step + 1)


def poly_decay(lr0: float, step: int, total_steps: int, exponent: float) -> float:
    """Polynomial decay lr0 * (1 - step/total_steps)**exponent, floored at 0."""
    if lr0 <= 0:
        raise ValueError("base learning rate must be positive")
    if total_steps < 1:
        raise ValueError("total_steps must be a positive integer")
    if exponent <= 0:
        raise ValueError("decay exponent must be positive")
    if step < 0:
        raise ValueError("step must be nonnegative")
    if step >= total_steps:
        return 0.0
    return lr0 * (1.0 - step / total_steps) ** exponent


def early_stop(
    val_losses,
    patience: int = 2,
    max_epochs: int | None = None,
    rel_delta: float = 1e-4,
) -> bool:
    """Decide whether to stop after the latest epoch.

    An epoch improves when its validation loss beats the best significant
    loss so far by a relative margin of ``rel_delta``; sub-margin downticks
    do not reset the plateau.  Training stops once more than ``patience``
    consecutive epochs fail to improve, or the epoch cap is reached.
    """
    losses = list(val_losses)
    if not losses:
        raise ValueError("val_losses must contain at least one epoch")
    if patience < 0:
        raise ValueError("patience must be nonnegative")
    if max_epochs is not None and len(losses) >= max_epochs:
        return True
    best = losses[0]
    last_improving = 0
    for i, loss in enumerate(losses[1:], start=1):
        if loss < best - rel_delta * abs(best):
            best = loss
            last_improving = i
    return (len(losses) - 1) - last_improving > patience


@dataclass(frozen=True)
class OptimizerSpec:
    """An update-rule family plus its free/fixed hyperparameter split.

    ``free`` names are sampled from a prior; ``fixed`` entries are baked-in
    constants.  A config for this optimizer carries exactly the union.
    """

    optimizer_id: str
    family: str  # "sgd" | "adam" | "adagrad"
    free: tuple[str, ...]
    fixed: dict[str, float] = field(default_factory=dict)
    poly_decay: bool = False
    effective_lr: bool = False

    @property
    def hyperparameters(self) -> tuple[str, ...]:
        return self.free + tuple(self.fixed)


_ROSTER: dict[str, OptimizerSpec] = {
    spec.optimizer_id: spec
    for spec in [
        OptimizerSpec("sgd-lr", "sgd", ("learning_rate",),
                      {"momentum": 0.0, "weight_decay": 0.0}),
        OptimizerSpec("sgd-m", "sgd", ("learning_rate", "momentum"),
                      {"weight_decay": 0.0}),
        OptimizerSpec("sgd-mc", "sgd", ("learning_rate",),
                      {"momentum": 0.9, "weight_decay": 0.0}),
        OptimizerSpec("sgd-mcwc", "sgd", ("learning_rate",),
                      {"momentum": 0.9, "weight_decay": 1e-5}),
        OptimizerSpec("sgd-mcd", "sgd", ("learning_rate", "poly_exponent"),
                      {"momentum": 0.9, "weight_decay": 1e-5}, poly_decay=True),
        OptimizerSpec("sgd-mw", "sgd", ("learning_rate", "momentum", "weight_decay")),
        OptimizerSpec("adagrad", "adagrad", ("learning_rate",)),
        OptimizerSpec("adam-lr", "adam", ("learning_rate",),
                      {"beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8}),
        OptimizerSpec("adam", "adam",
                      ("learning_rate", "beta1", "beta2", "epsilon")),
        OptimizerSpec("adam-wcd", "adam", ("learning_rate", "poly_exponent"),
                      {"beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8},
                      poly_decay=True),
        OptimizerSpec("sgd-lreff", "sgd",
                      ("learning_rate", "effective_learning_rate", "weight_decay"),
                      effective_lr=True),
    ]
}


def optimizer_ids() -> tuple[str, ...]:
    return tuple(_ROSTER)


def optimizer_spec(optimizer_id: str) -> OptimizerSpec:
    try:
        return _ROSTER[optimizer_id]
    except KeyError:
        known = ", ".join(_ROSTER)
        raise ValueError(f"unknown optimizer id {optimizer_id!r}; known ids: {known}") from None
