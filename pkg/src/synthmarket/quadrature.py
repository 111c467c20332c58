"""Gauss-Hermite and Simpson rules, and the 1-D / 2-D reductions of the
Gaussian integrals of one activation (``int_i1``) and of a product of two
activations (``int_i2``).

Gauss-Hermite weights are normalized to sum to one, so that
``sum(w_p * f(sqrt(2) * z_p))`` approximates ``E[f(Z)]`` for standard normal Z.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .activation import SOFTPLUS, Activation
from .dsde import GaussMoments

__all__ = [
    "QuadRule",
    "gh_rule",
    "simpson_rule",
    "make_rule",
    "simpson_integrate",
    "int_i1",
    "int_i2",
    "PARALLEL_TOL",
]

MAX_ORDER = 64
# below this |sin| the pair is treated as parallel and reduced to 1-D
PARALLEL_TOL = 1e-7


@dataclass(frozen=True)
class QuadRule:
    D: int
    nodes: np.ndarray
    weights: np.ndarray
    simpson_S: int
    simpson_nodes: np.ndarray
    simpson_weights: np.ndarray


@lru_cache(maxsize=None)
def _gh(D: int) -> tuple[np.ndarray, np.ndarray]:
    z, w = np.polynomial.hermite.hermgauss(D)
    # symmetrize: hermgauss nodes are symmetric only up to rounding
    z = 0.5 * (z - z[::-1])
    w = 0.5 * (w + w[::-1])
    w = w / w.sum()
    z.setflags(write=False)
    w.setflags(write=False)
    return z, w


def gh_rule(D: int) -> tuple[np.ndarray, np.ndarray]:
    """Roots of the physicists' Hermite polynomial H_D and normalized weights."""
    if not isinstance(D, (int, np.integer)) or not 1 <= D <= MAX_ORDER:
        raise ValueError(f"Gauss-Hermite order must be an integer in [1, {MAX_ORDER}], got {D!r}")
    return _gh(int(D))


def simpson_rule(S: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of composite Simpson on [0, 1] with S subintervals."""
    if not isinstance(S, (int, np.integer)) or S < 2 or S % 2:
        raise ValueError(f"Simpson needs an even number of subintervals >= 2, got {S!r}")
    t = np.linspace(0.0, 1.0, S + 1)
    w = np.ones(S + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return t, w / (3.0 * S)


def make_rule(D: int, S: int) -> QuadRule:
    z, w = gh_rule(D)
    t, ws = simpson_rule(S)
    return QuadRule(int(D), z, w, int(S), t, ws)


def simpson_integrate(S: int, f: Callable[[float], float]) -> float:
    """Composite Simpson estimate of the integral of f over [0, 1]."""
    t, w = simpson_rule(S)
    return float(sum(wi * f(ti) for ti, wi in zip(t, w)))


def _c_norm(w: np.ndarray, var: np.ndarray) -> float:
    return float(np.sqrt(np.sum(w * w * var)))


def int_i1(rule: QuadRule, w, bias: float, m: GaussMoments, act: Activation = SOFTPLUS) -> float:
    """E[act(<w|X> + bias)] for X ~ N(m.mean, diag(m.var)), by 1-D Gauss-Hermite."""
    w = np.asarray(w, dtype=float)
    sig = _c_norm(w, m.var)
    u = float(w @ m.mean) + bias
    return float(rule.weights @ act.f(np.sqrt(2.0) * sig * rule.nodes + u))


def int_i2(
    rule: QuadRule,
    w1,
    b1: float,
    w2,
    b2: float,
    m: GaussMoments,
    act: Activation = SOFTPLUS,
) -> float:
    """E[act(<w1|X> + b1) act(<w2|X> + b2)] for X ~ N(m.mean, diag(m.var)).

    The two directions are orthonormalized by Gram-Schmidt in the metric of
    diag(m.var), which leaves a 2-D tensor Gauss-Hermite sum. The first vector
    of the Gram-Schmidt pass is chosen canonically, so the result is exactly
    symmetric in its two arguments.
    """
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    if not np.any(w1) or not np.any(w2):
        raise ValueError("int_i2 requires nonzero weight vectors")
    if (tuple(w2), b2) < (tuple(w1), b1):
        w1, b1, w2, b2 = w2, b2, w1, b1
    sig1, sig2 = _c_norm(w1, m.var), _c_norm(w2, m.var)
    u1 = float(w1 @ m.mean) + b1
    u2 = float(w2 @ m.mean) + b2
    z, wt = rule.nodes, rule.weights
    r2 = np.sqrt(2.0)
    if sig1 == 0.0 or sig2 == 0.0:
        cos, sin = 0.0, 1.0
    else:
        cos = float(np.sum(w1 * w2 * m.var)) / (sig1 * sig2)
        cos = min(1.0, max(-1.0, cos))
        sin = np.sqrt(max(0.0, 1.0 - cos * cos))
    f1 = act.f(r2 * sig1 * z + u1)
    if sin < PARALLEL_TOL:
        f2 = act.f(r2 * sig2 * cos * z + u2)
        return float(wt @ (f1 * f2))
    arg2 = r2 * sig2 * (sin * z[None, :] + cos * z[:, None]) + u2
    return float(wt @ (f1[:, None] * act.f(arg2)) @ wt)
