"""Mini-batch Adam training of the score network on the quadrature objective."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .data import as_matrix
from .dsde import DsdeSpec
from .objective import ObjectiveConfig, objective, objective_and_gradient
from .rng import stream
from .score_net import PARAM_NAMES, NumericError, ScoreParams, init_params

__all__ = ["TrainConfig", "OptimizerState", "adam_step", "train", "NumericError"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 2000
    batch_size: int = 32
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    shuffle: bool = True
    hidden: int = 16
    checkpoint_every: int = 100
    trainable: tuple[str, ...] = PARAM_NAMES

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        for name in ("learning_rate", "adam_beta1", "adam_beta2"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.adam_eps <= 0 or self.hidden < 1:
            raise ValueError("adam_eps must be > 0 and hidden >= 1")
        object.__setattr__(self, "trainable", tuple(self.trainable))
        unknown = set(self.trainable) - set(PARAM_NAMES)
        if unknown:
            raise ValueError(f"unknown trainable parameters {sorted(unknown)}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "adam_beta1": self.adam_beta1,
            "adam_beta2": self.adam_beta2,
            "adam_eps": self.adam_eps,
            "seed": self.seed,
            "shuffle": self.shuffle,
            "hidden": self.hidden,
            "checkpoint_every": self.checkpoint_every,
            "trainable": list(self.trainable),
        }


@dataclass
class OptimizerState:
    m: ScoreParams
    v: ScoreParams
    step: int = 0

    @classmethod
    def fresh(cls, theta: ScoreParams) -> "OptimizerState":
        z = ScoreParams.zeros(theta.d, theta.h)
        return cls(z, z, 0)


def adam_step(theta: ScoreParams, grad: ScoreParams, state: OptimizerState, cfg: TrainConfig,
              ) -> tuple[ScoreParams, OptimizerState]:
    """One bias-corrected Adam update; parameters outside ``cfg.trainable`` are left untouched."""
    if (grad.d, grad.h) != (theta.d, theta.h) or (state.m.d, state.m.h) != (theta.d, theta.h):
        raise ValueError("shape mismatch between parameters, gradient and optimizer state")
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    step = state.step + 1
    new_theta, new_m, new_v = {}, {}, {}
    for name in PARAM_NAMES:
        p, g = getattr(theta, name), getattr(grad, name)
        m, v = getattr(state.m, name), getattr(state.v, name)
        if name not in cfg.trainable:
            new_theta[name], new_m[name], new_v[name] = p, m, v
            continue
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1**step)
        v_hat = v / (1 - b2**step)
        new_theta[name] = p - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        new_m[name], new_v[name] = m, v
    return ScoreParams(**new_theta), OptimizerState(ScoreParams(**new_m), ScoreParams(**new_v), step)


def train(
    ds,
    spec: DsdeSpec,
    obj_cfg: ObjectiveConfig,
    train_cfg: TrainConfig,
    theta0: ScoreParams | None = None,
    callback: Callable[[int, ScoreParams, float], None] | None = None,
) -> tuple[ScoreParams, list[float]]:
    """Fit the score network; returns the final parameters and the loss history.

    ``loss_history[e]`` is the full-dataset objective after ``e`` epochs, so the
    history has ``epochs + 1`` entries. ``callback(epoch, theta, loss)`` runs
    after every recorded loss.
    """
    X = as_matrix(ds)
    n, d = X.shape
    bs = train_cfg.batch_size
    if bs > n:
        raise ValueError(f"batch_size {bs} exceeds dataset size {n}")
    theta = theta0 if theta0 is not None else init_params(d, train_cfg.hidden, train_cfg.seed)
    state = OptimizerState.fresh(theta)
    rng = stream(train_cfg.seed, 0, "shuffle")

    def record(epoch: int) -> float:
        loss = objective(theta, X, spec, obj_cfg)
        if not np.isfinite(loss):
            raise NumericError(f"non-finite loss at epoch {epoch}")
        history.append(loss)
        if callback is not None:
            callback(epoch, theta, loss)
        return loss

    history: list[float] = []
    record(0)
    for epoch in range(1, train_cfg.epochs + 1):
        order = rng.permutation(n) if train_cfg.shuffle else np.arange(n)
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            _, g = objective_and_gradient(theta, X, spec, obj_cfg, batch=idx)
            theta, state = adam_step(theta, g, state, train_cfg)
        loss = record(epoch)
        if epoch % max(1, train_cfg.epochs // 10) == 0:
            log.info("epoch %d loss %.6g", epoch, loss)
    return theta, history
