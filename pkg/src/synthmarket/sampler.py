"""Forward encoding and reverse-time decoding with Euler-Maruyama, and
scenario generation.

Time grid: ``t_j = j / K``. Forward steps use coefficients at the left end
``t_j``; reverse steps from ``t_j`` to ``t_{j-1}`` use coefficients at
``t_{j-1}``. Neither ever touches ``beta(1) = inf``. On the final reverse step
the marginal variance at ``t_0 = 0`` is zero and the fitted score is singular,
so the score there is taken at ``t_1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence, Union

import numpy as np

from .activation import SOFTPLUS
from .data import as_matrix
from .dsde import DsdeSpec, drift_diffusion, marginal_moments
from .rng import stream
from .score_net import ScoreParams, k_forward

__all__ = [
    "PathConfig",
    "ScenarioSet",
    "forward_path",
    "reverse_path",
    "generate_scenarios",
    "gaussian_data_score",
]

SCHEMES = ("euler_maruyama", "exact_transition")
ScoreLike = Union[ScoreParams, Callable[[float, np.ndarray], np.ndarray]]
CHUNK = 1024


@dataclass(frozen=True)
class PathConfig:
    steps: int = 256
    scheme: str = "euler_maruyama"
    seed: int = 0

    def __post_init__(self):
        if self.steps < 2:
            raise ValueError("steps must be >= 2")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")

    def to_dict(self) -> dict[str, Any]:
        return {"steps": self.steps, "scheme": self.scheme, "seed": self.seed}


@dataclass(frozen=True)
class ScenarioSet:
    samples: np.ndarray  # (m, d)
    source_indices: np.ndarray  # (m,)
    seed: int
    checkpoint_id: str = ""
    tickers: tuple[str, ...] = ()
    steps: int = 0
    scheme: str = "euler_maruyama"

    def __post_init__(self):
        x = np.array(self.samples, dtype=float)
        idx = np.array(self.source_indices, dtype=np.int64)
        if x.ndim != 2 or idx.shape != (x.shape[0],):
            raise ValueError("samples must be (m, d) with one source index per row")
        if not np.all(np.isfinite(x)):
            raise ValueError("scenario samples must be finite")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "source_indices", idx)
        object.__setattr__(self, "tickers", tuple(self.tickers))

    @property
    def m(self) -> int:
        return self.samples.shape[0]

    def provenance(self) -> dict[str, Any]:
        return {
            "m": self.m,
            "d": self.samples.shape[1],
            "seed": self.seed,
            "checkpoint_id": self.checkpoint_id,
            "steps": self.steps,
            "scheme": self.scheme,
            "tickers": list(self.tickers),
            "source_indices": self.source_indices.tolist(),
        }


def _noise(rngs, steps: int, rows: int, d: int) -> np.ndarray:
    """Standard normal increments of shape (steps, rows, d).

    A single Generator fills the whole block; a sequence supplies one
    independent stream per row.
    """
    if rngs is None:
        raise ValueError("a random generator is required when noise is enabled")
    if isinstance(rngs, np.random.Generator):
        return rngs.standard_normal((steps, rows, d))
    rngs = list(rngs)
    if len(rngs) != rows:
        raise ValueError(f"{len(rngs)} generators for {rows} rows")
    return np.stack([g.standard_normal((steps, d)) for g in rngs], axis=1)


def forward_path(spec: DsdeSpec, x_init, cfg: PathConfig, rng=None, noise: bool = True,
                 t_end: float | None = None, xi: np.ndarray | None = None) -> np.ndarray:
    """Encode x_init (d,) or (rows, d) to its terminal value.

    ``rng`` is one Generator or a sequence with one Generator per row; ``xi``
    optionally supplies the standard normal increments, shape (K, rows, d).
    Euler-Maruyama runs the first ``round(t_end * K)`` steps (all K by
    default); ``exact_transition`` draws from the transition law at ``t_end``
    (default 1).
    """
    x = np.array(x_init, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    rows, d = x.shape
    K = cfg.steps
    if cfg.scheme == "exact_transition":
        mom = marginal_moments(spec, 1.0 if t_end is None else t_end, x)
        eps = _noise(rng, 1, rows, d)[0] if noise else 0.0
        out = mom.mean + np.sqrt(mom.var) * eps
        return out[0] if single else out
    n_steps = K if t_end is None else int(round(t_end * K))
    if noise and xi is None:
        xi = _noise(rng, K, rows, d)
    dt = 1.0 / K
    sq = np.sqrt(dt)
    for j in range(n_steps):
        drift, sig = drift_diffusion(spec, j / K, x)
        x = x + drift * dt
        if noise:
            x = x + sig * sq * xi[j]
    return x[0] if single else x


def _score_fn(score: ScoreLike) -> Callable[[float, np.ndarray], np.ndarray]:
    if isinstance(score, ScoreParams):
        return lambda t, x, _p=score: k_forward(_p, x, SOFTPLUS)
    return score


def reverse_path(spec: DsdeSpec, theta: ScoreLike, x_term, cfg: PathConfig, rng=None,
                 noise: bool = True) -> np.ndarray:
    """Decode x_term (d,) or (rows, d) from t=1 back to t=0.

    ``theta`` is fitted ScoreParams (score ``K(x)/C(t)``) or any callable
    ``score(t, x)``. Each step is
    ``X <- X - (alpha(t*, X) - sigma(t*)^2 s(t*, X)) dt + sigma(t*) sqrt(dt) xi``.
    """
    x = np.array(x_term, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    rows, d = x.shape
    K = cfg.steps
    fitted = isinstance(theta, ScoreParams)
    score = _score_fn(theta)
    xi = _noise(rng, K, rows, d) if noise else None
    dt = 1.0 / K
    sq = np.sqrt(dt)
    zero = np.zeros(d)
    for j in range(K, 0, -1):
        t_lo = (j - 1) / K
        drift, sig = drift_diffusion(spec, t_lo, x)
        t_s = t_lo
        C = marginal_moments(spec, t_s, zero).var
        if np.any(C <= 0):
            t_s = j / K
            C = marginal_moments(spec, t_s, zero).var
        s = score(t_s, x)
        if fitted:
            s = s / C
        x = x - (drift - sig * sig * s) * dt
        if noise:
            x = x + sig * sq * xi[K - j]
    return x[0] if single else x


def gaussian_data_score(spec: DsdeSpec, mean, var) -> Callable[[float, np.ndarray], np.ndarray]:
    """Exact marginal score when the data law is N(mean, diag(var))."""
    mean = np.asarray(mean, dtype=float)
    var = np.asarray(var, dtype=float)

    def score(t, x):
        mom = marginal_moments(spec, t, np.ones_like(mean))
        decay, C = mom.mean, mom.var
        return -(x - decay * mean) / (C + decay**2 * var)

    return score


def generate_scenarios(
    ds,
    spec: DsdeSpec,
    theta: ScoreLike,
    m: int,
    cfg: PathConfig,
    scenario_ids: Sequence[int] | None = None,
    checkpoint_id: str = "",
) -> ScenarioSet:
    """Sample m synthetic scenarios: pick a training row, encode it, decode it.

    Scenario k uses its own streams keyed by ``(cfg.seed, k, phase)``, so any
    subset ``scenario_ids`` reproduces the matching rows of a full run.
    """
    X = as_matrix(ds)
    n, d = X.shape
    if m < 0:
        raise ValueError("m must be >= 0")
    if isinstance(theta, ScoreParams) and theta.d != d:
        raise ValueError(f"checkpoint dimension {theta.d} != data dimension {d}")
    ids = np.arange(m) if scenario_ids is None else np.asarray(scenario_ids, dtype=np.int64)
    tickers = getattr(ds, "tickers", ())
    samples = np.empty((ids.size, d))
    src = np.empty(ids.size, dtype=np.int64)
    for lo in range(0, ids.size, CHUNK):
        chunk = ids[lo:lo + CHUNK]
        src[lo:lo + CHUNK] = [stream(cfg.seed, k, "index").integers(n) for k in chunk]
        fwd = [stream(cfg.seed, k, "forward") for k in chunk]
        rev = [stream(cfg.seed, k, "reverse") for k in chunk]
        term = forward_path(spec, X[src[lo:lo + CHUNK]], cfg, fwd)
        samples[lo:lo + CHUNK] = reverse_path(spec, theta, term, cfg, rev)
    return ScenarioSet(samples, src, cfg.seed, checkpoint_id, tickers, cfg.steps, cfg.scheme)
