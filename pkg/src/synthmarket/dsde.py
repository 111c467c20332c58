"""Denoising SDE families (VP, sub-VP, VE) and their Gaussian transition structure.

All quantities are per-component: ``beta``, ``tau`` and the transition moments
are d-vectors and the diffusion matrix is diagonal.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np

__all__ = [
    "Kind",
    "DsdeSpec",
    "GaussMoments",
    "beta",
    "tau",
    "transition_moments",
    "marginal_moments",
    "drift_diffusion",
]


class Kind(str, Enum):
    VP = "VP"
    SUBVP = "SubVP"
    VE = "VE"

    @classmethod
    def parse(cls, value: "str | Kind") -> "Kind":
        if isinstance(value, Kind):
            return value
        key = str(value).replace("-", "").replace("_", "").lower()
        for k in cls:
            if k.value.lower() == key:
                return k
        raise ValueError(f"unknown SDE kind {value!r}; expected one of VP, SubVP, VE")


@dataclass(frozen=True)
class DsdeSpec:
    """An SDE family with hyperparameters ``a`` (scalar) and ``b`` (one per asset).

    For VP/sub-VP, ``beta_i(t) = b_i (1 - t)^-(1 + a)``; for VE, ``v_i(t) = b_i a^t``.
    """

    kind: Kind
    a: float
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind.parse(self.kind))
        b = np.atleast_1d(np.asarray(self.b, dtype=float)).copy()
        if b.ndim != 1 or b.size < 1:
            raise ValueError("b must be a non-empty vector")
        if not np.all(np.isfinite(b)) or np.any(b <= 0):
            raise ValueError("all b_i must be finite and > 0")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)
        a = float(self.a)
        if self.kind is Kind.VE:
            if not a > 1:
                raise ValueError("VE requires a > 1")
        elif not a >= 0:
            raise ValueError("VP/sub-VP require a >= 0")
        object.__setattr__(self, "a", a)

    @property
    def d(self) -> int:
        return self.b.size

    @classmethod
    def create(cls, kind, a: float, b, d: int | None = None) -> "DsdeSpec":
        """Build a spec, broadcasting a scalar ``b`` to ``d`` components."""
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if d is not None:
            if b.size == 1:
                b = np.full(d, b[0])
            elif b.size != d:
                raise ValueError(f"b has {b.size} entries, expected {d}")
        return cls(Kind.parse(kind), a, b)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "a": self.a, "b": self.b.tolist()}

    @classmethod
    def from_dict(cls, obj: dict[str, Any], d: int | None = None) -> "DsdeSpec":
        extra = set(obj) - {"kind", "a", "b"}
        if extra:
            raise ValueError(f"unknown dsde keys: {sorted(extra)}")
        return cls.create(obj.get("kind", "VP"), obj.get("a", 0.0), obj.get("b", 0.1), d)

    def __eq__(self, other):
        if not isinstance(other, DsdeSpec):
            return NotImplemented
        return (self.kind, self.a) == (other.kind, other.a) and np.array_equal(self.b, other.b)

    def __hash__(self):
        return hash((self.kind, self.a, self.b.tobytes()))


@dataclass(frozen=True)
class GaussMoments:
    """Mean and diagonal variance of a Gaussian with diagonal covariance."""

    mean: np.ndarray
    var: np.ndarray


def _check_t(t: float, upper_open: bool) -> float:
    t = float(t)
    if not 0.0 <= t <= 1.0 or (upper_open and t >= 1.0):
        bound = "[0, 1)" if upper_open else "[0, 1]"
        raise ValueError(f"t={t} outside {bound}")
    return t


def beta(spec: DsdeSpec, t: float) -> np.ndarray:
    """Instantaneous variance rate: beta(t) for VP/sub-VP, dv/dt for VE."""
    if spec.kind is Kind.VE:
        t = _check_t(t, upper_open=False)
        return spec.b * np.log(spec.a) * spec.a**t
    t = _check_t(t, upper_open=True)
    return spec.b * (1.0 - t) ** (-(1.0 + spec.a))


def tau(spec: DsdeSpec, t: float) -> np.ndarray:
    """Time change tau(t).

    For VP/sub-VP ``tau(1)`` is ``+inf``; downstream ``exp(-tau)`` then evaluates
    to exactly 0, which yields the limit moments without special cases.
    """
    t = _check_t(t, upper_open=False)
    if spec.kind is Kind.VE:
        return spec.b * spec.a**t
    if t == 1.0:
        return np.full(spec.d, np.inf)
    ell = -np.log1p(-t)
    y = spec.a * ell
    if y == 0.0:
        # a = 0, or a so small that a*ell underflows: the logarithmic limit
        return spec.b * ell
    # ((1-t)^-a - 1)/a == ell * expm1(y)/y, which stays finite for tiny a
    return spec.b * ell * (np.expm1(y) / y)


def transition_moments(spec: DsdeSpec, u: float, t: float, y) -> GaussMoments:
    """Moments of X_t given X_u = y."""
    u, t = float(u), float(t)
    if u > t:
        raise ValueError(f"u={u} > t={t}")
    y = np.asarray(y, dtype=float)
    tu, tt = tau(spec, u), tau(spec, t)
    if spec.kind is Kind.VE:
        return GaussMoments(y.copy(), np.broadcast_to(tt - tu, y.shape).copy())
    with np.errstate(invalid="ignore"):
        dtau = tt - tu
    # inf - inf only arises for u == t == 1: identity transition
    dtau = np.where(np.isnan(dtau), 0.0, dtau)
    decay = np.exp(-0.5 * dtau)
    var = -np.expm1(-dtau)
    if spec.kind is Kind.SUBVP:
        # time-inhomogeneous noise: reduces to (1 - e^-tau)^2 when u = 0
        var = var * -np.expm1(-(tu + tt))
    return GaussMoments(y * decay, np.broadcast_to(var, y.shape).copy())


def marginal_moments(spec: DsdeSpec, t: float, x0) -> GaussMoments:
    """Moments of X_t started from x0 at time 0 (mu(t, x0) and C(t))."""
    return transition_moments(spec, 0.0, t, x0)


def drift_diffusion(spec: DsdeSpec, t: float, x) -> tuple[np.ndarray, np.ndarray]:
    """Drift alpha(t, x) and diagonal diffusion sigma(t) of the forward SDE."""
    x = np.asarray(x, dtype=float)
    bt = beta(spec, t)
    if spec.kind is Kind.VE:
        return np.zeros_like(x), np.sqrt(bt)
    drift = -0.5 * bt * x
    if spec.kind is Kind.VP:
        return drift, np.sqrt(bt)
    return drift, np.sqrt(bt * -np.expm1(-2.0 * tau(spec, t)))
