"""Smooth positive activations used by the score network."""
from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np


def softplus(u):
    """ln(1 + e^u), overflow-safe for large |u|."""
    u = np.asarray(u, dtype=float)
    return np.maximum(u, 0.0) + np.log1p(np.exp(-np.abs(u)))


def sigmoid(u):
    u = np.asarray(u, dtype=float)
    e = np.exp(-np.abs(u))
    return np.where(u >= 0, 1.0, e) / (1.0 + e)


def softplus_and_sigmoid(u):
    """Both softplus(u) and its derivative from a single exponential."""
    u = np.asarray(u, dtype=float)
    e = np.exp(-np.abs(u))
    one_e = 1.0 + e
    f = np.log1p(e)
    f += np.maximum(u, 0.0)
    df = np.where(u >= 0, 1.0, e)
    df /= one_e
    return f, df


class Activation(NamedTuple):
    """An activation with its derivative; ``f_df`` may compute both at once."""

    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    f_df: Callable[[np.ndarray], tuple] | None = None
    name: str = "custom"

    def both(self, u):
        if self.f_df is not None:
            return self.f_df(u)
        return self.f(u), self.df(u)


SOFTPLUS = Activation(softplus, sigmoid, softplus_and_sigmoid, "softplus")
