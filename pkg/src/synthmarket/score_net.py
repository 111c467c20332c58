"""Single-hidden-layer noise-conditional score network.

``K(x) = c @ act(w @ x + b) + d_out`` and the fitted score is ``K(x) / C(t)``,
with C(t) the marginal variance of the SDE. Output index first: ``c[k, j]``
couples output k to hidden unit j.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any, Iterator

import numpy as np

from .activation import SOFTPLUS, Activation
from .dsde import DsdeSpec, marginal_moments

__all__ = [
    "NumericError",
    "ScoreParams",
    "k_forward",
    "score_eval",
    "true_gaussian_score",
    "init_params",
]

PARAM_NAMES = ("w", "b", "c", "d_out")


class NumericError(ArithmeticError):
    """Non-finite parameters or losses."""


@dataclass(frozen=True)
class ScoreParams:
    w: np.ndarray  # (h, d)
    b: np.ndarray  # (h,)
    c: np.ndarray  # (d, h)
    d_out: np.ndarray  # (d,)

    def __post_init__(self):
        for f in fields(self):
            arr = np.array(getattr(self, f.name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, f.name, arr)
        h, d = self.w.shape if self.w.ndim == 2 else (-1, -1)
        if h < 1 or d < 1:
            raise ValueError(f"w must be an (h, d) matrix with h, d >= 1, got shape {self.w.shape}")
        if self.b.shape != (h,) or self.c.shape != (d, h) or self.d_out.shape != (d,):
            raise ValueError(
                f"inconsistent shapes: w{self.w.shape} b{self.b.shape} c{self.c.shape} d_out{self.d_out.shape}"
            )
        if not all(np.all(np.isfinite(a)) for a in self.arrays()):
            raise NumericError("score parameters must be finite")

    @property
    def d(self) -> int:
        return self.w.shape[1]

    @property
    def h(self) -> int:
        return self.w.shape[0]

    def arrays(self) -> Iterator[np.ndarray]:
        return (getattr(self, n) for n in PARAM_NAMES)

    def replace(self, **kw) -> "ScoreParams":
        vals = {n: getattr(self, n) for n in PARAM_NAMES}
        vals.update(kw)
        return ScoreParams(**vals)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    @classmethod
    def from_vector(cls, vec, d: int, h: int) -> "ScoreParams":
        vec = np.asarray(vec, dtype=float)
        sizes = [h * d, h, d * h, d]
        if vec.size != sum(sizes):
            raise ValueError(f"vector of size {vec.size} does not match d={d}, h={h}")
        w, b, c, d_out = np.split(vec, np.cumsum(sizes)[:-1])
        return cls(w.reshape(h, d), b, c.reshape(d, h), d_out)

    @classmethod
    def zeros(cls, d: int, h: int) -> "ScoreParams":
        return cls(np.zeros((h, d)), np.zeros(h), np.zeros((d, h)), np.zeros(d))

    def to_dict(self) -> dict[str, Any]:
        return {
            "d": self.d,
            "h": self.h,
            "w": self.w.tolist(),
            "b": self.b.tolist(),
            "c": self.c.tolist(),
            "d_out": self.d_out.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "ScoreParams":
        p = cls(obj["w"], obj["b"], obj["c"], obj["d_out"])
        if (p.d, p.h) != (obj.get("d", p.d), obj.get("h", p.h)):
            raise ValueError("declared d/h disagree with parameter shapes")
        return p


def _hidden(p: ScoreParams, x: np.ndarray) -> np.ndarray:
    # elementwise product + sum (not matmul): row results do not depend on batch size
    return np.sum(x[..., None, :] * p.w, axis=-1) + p.b


def k_forward(p: ScoreParams, x, act: Activation = SOFTPLUS) -> np.ndarray:
    """K(x; theta) for a single point (d,) or a batch (..., d)."""
    x = np.asarray(x, dtype=float)
    a = act.f(_hidden(p, x))
    return np.sum(a[..., None, :] * p.c, axis=-1) + p.d_out


def score_eval(p: ScoreParams, spec: DsdeSpec, t: float, x, act: Activation = SOFTPLUS) -> np.ndarray:
    """Fitted score s(t, x) = K(x) / C(t); undefined where C(t) = 0 (t = 0)."""
    var = marginal_moments(spec, t, np.zeros(spec.d)).var
    if np.any(var <= 0):
        raise ValueError(f"marginal variance vanishes at t={t}; the fitted score is singular there")
    return k_forward(p, x, act) / var


def true_gaussian_score(mu, var, x) -> np.ndarray:
    """Score -(x - mu) / var of a Gaussian with diagonal covariance."""
    var = np.asarray(var, dtype=float)
    if np.any(var <= 0):
        raise ValueError("variance must be strictly positive")
    return -(np.asarray(x, dtype=float) - mu) / var


def init_params(d: int, h: int, seed) -> ScoreParams:
    """w ~ N(0, 1/d), c ~ N(0, 1/h), zero biases."""
    if d < 1 or h < 1:
        raise ValueError("d and h must be >= 1")
    rng = np.random.default_rng(seed)
    w = rng.normal(0.0, np.sqrt(1.0 / d), size=(h, d))
    c = rng.normal(0.0, np.sqrt(1.0 / h), size=(d, h))
    return ScoreParams(w, np.zeros(h), c, np.zeros(d))
