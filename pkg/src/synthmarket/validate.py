"""Historical-versus-synthetic comparison: portfolio projection, the two-sample
Cramer-von Mises test, covariance condition numbers, Q-Q pairs and the
assembled report.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass
from typing import Any, Sequence

import numpy as np
from scipy.stats import rankdata

from .data import as_matrix
from .rng import stream

__all__ = [
    "ValidationReport",
    "portfolio_project",
    "cvm_statistic",
    "cvm_pvalue",
    "cvm_pvalue_exact",
    "sample_covariance",
    "condition_number",
    "qq_pairs",
    "histograms",
    "build_report",
]

WEIGHT_TOL = 1e-10
SYMMETRY_TOL = 1e-10
KAPPA_FLOOR = 1e-300


def _sample(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise ValueError(f"{name} is empty")
    return x


def equal_weights(d: int) -> np.ndarray:
    return np.full(d, 1.0 / d)


def portfolio_project(X, g) -> np.ndarray:
    """Portfolio returns p_i = <g | x_i> for long-only, fully invested g."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    g = np.asarray(g, dtype=float)
    if g.shape != (X.shape[1],):
        raise ValueError(f"weights have shape {g.shape}, expected ({X.shape[1]},)")
    if np.any(g < 0) or abs(g.sum() - 1.0) > WEIGHT_TOL:
        raise ValueError("portfolio weights must be nonnegative and sum to 1")
    return X @ g


# -- Cramer-von Mises --------------------------------------------------------

def _twice_u(ranks2: np.ndarray, n: int, m: int) -> np.ndarray:
    """4*U for rows of doubled pooled midranks; first n columns belong to P.

    Doubled midranks are integers, so U is computed exactly and equal
    statistics compare equal.
    """
    rp = np.sort(ranks2[..., :n], axis=-1)
    rq = np.sort(ranks2[..., n:], axis=-1)
    ip = 2 * np.arange(1, n + 1, dtype=np.int64)
    iq = 2 * np.arange(1, m + 1, dtype=np.int64)
    return n * np.sum((rp - ip) ** 2, axis=-1) + m * np.sum((rq - iq) ** 2, axis=-1)


def _t_from_u4(u4, n: int, m: int):
    N = n + m
    return u4 / 4.0 / (n * m * N) - (4.0 * n * m - 1.0) / (6.0 * N)


def _pooled_ranks2(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    return np.rint(2.0 * rankdata(np.concatenate([P, Q]), method="average")).astype(np.int64)


def cvm_statistic(P, Q) -> float:
    """Two-sample Cramer-von Mises statistic T (rank form, midranks for ties)."""
    P, Q = _sample(P, "P"), _sample(Q, "Q")
    n, m = P.size, Q.size
    u4 = int(_twice_u(_pooled_ranks2(P, Q), n, m))
    return float(_t_from_u4(u4, n, m))


def cvm_pvalue(P, Q, B: int = 1000, seed: int = 0, block: int = 256) -> float:
    """Permutation p-value (1 + #{T_b >= T_obs}) / (B + 1).

    Relabeling b is drawn from its own stream ``(seed, b, "permutation")``, so
    the result does not depend on how the loop is blocked.
    """
    P, Q = _sample(P, "P"), _sample(Q, "Q")
    if B < 99:
        raise ValueError("B must be >= 99")
    n, m = P.size, Q.size
    r2 = _pooled_ranks2(P, Q)
    u_obs = _twice_u(r2, n, m)
    hits = 0
    for lo in range(0, B, block):
        perms = np.stack([r2[stream(seed, b, "permutation").permutation(n + m)]
                          for b in range(lo, min(lo + block, B))])
        hits += int(np.count_nonzero(_twice_u(perms, n, m) >= u_obs))
    return (1 + hits) / (B + 1)


def cvm_pvalue_exact(P, Q, max_relabelings: int = 2_000_000) -> float:
    """Exact permutation p-value over all C(n+m, n) relabelings."""
    P, Q = _sample(P, "P"), _sample(Q, "Q")
    n, m = P.size, Q.size
    total = math.comb(n + m, n)
    if total > max_relabelings:
        raise ValueError(f"{total} relabelings exceed the enumeration limit")
    r2 = _pooled_ranks2(P, Q)
    u_obs = _twice_u(r2, n, m)
    idx = np.arange(n + m)
    rows = []
    for chosen in itertools.combinations(range(n + m), n):
        rest = np.setdiff1d(idx, chosen, assume_unique=True)
        rows.append(np.concatenate([r2[list(chosen)], r2[rest]]))
    u = _twice_u(np.array(rows), n, m)
    return int(np.count_nonzero(u >= u_obs)) / total


# -- covariance ---------------------------------------------------------------

def sample_covariance(X) -> np.ndarray:
    """Unbiased (divisor rows - 1) covariance, exactly symmetric."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 2:
        raise ValueError("need at least 2 rows for a covariance")
    Xc = X - X.mean(axis=0)
    S = (Xc.T @ Xc) / (X.shape[0] - 1)
    return 0.5 * (S + S.T)


def condition_number(S) -> float:
    """lambda_max / lambda_min of a symmetric PSD matrix; inf if singular.

    The symmetry check is relative to the largest entry, so the result is
    invariant under positive rescaling.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("condition_number needs a square matrix")
    scale = float(np.max(np.abs(S))) if S.size else 0.0
    if np.max(np.abs(S - S.T)) > SYMMETRY_TOL * max(scale, 1e-300):
        raise ValueError("matrix is not symmetric")
    lam = np.linalg.eigvalsh(0.5 * (S + S.T))
    lo, hi = lam[0], lam[-1]
    if lo < -SYMMETRY_TOL * max(abs(hi), 1e-300):
        raise ValueError(f"matrix is not positive semidefinite (eigenvalue {lo:g})")
    if lo <= KAPPA_FLOOR:
        return math.inf
    return float(hi / lo)


# -- quantiles and histograms -------------------------------------------------

def qq_probabilities(levels: int) -> np.ndarray:
    if levels < 1:
        raise ValueError("levels must be >= 1")
    return np.arange(1, levels + 1) / (levels + 1)


def qq_pairs(P, Q, levels: int = 99) -> list[tuple[float, float]]:
    """Empirical quantile pairs at k/(L+1), linear interpolation of order statistics."""
    P, Q = _sample(P, "P"), _sample(Q, "Q")
    probs = qq_probabilities(levels)
    hq = np.quantile(P, probs, method="linear")
    sq = np.quantile(Q, probs, method="linear")
    return [(float(a), float(b)) for a, b in zip(hq, sq)]


def histograms(P, Q, bins: int = 30):
    """Counts of both samples on common bin edges spanning the pooled range."""
    P, Q = _sample(P, "P"), _sample(Q, "Q")
    edges = np.histogram_bin_edges(np.concatenate([P, Q]), bins=bins)
    return edges, np.histogram(P, edges)[0], np.histogram(Q, edges)[0]


# -- report -------------------------------------------------------------------

@dataclass
class ValidationReport:
    t_cvm: float
    p_cvm: float
    kappa_hist: float
    kappa_synth: float
    qq_pairs: list
    qq_probs: list
    weights: list
    n: int
    m: int
    permutations: int
    seed: int
    bin_edges: list
    hist_counts: list
    synth_counts: list

    def __post_init__(self):
        if not 0.0 <= self.p_cvm <= 1.0:
            raise ValueError("p_cvm must lie in [0, 1]")
        self.qq_pairs = [tuple(map(float, pair)) for pair in self.qq_pairs]

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["qq_pairs"] = [list(pair) for pair in self.qq_pairs]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ValidationReport":
        names = set(cls.__dataclass_fields__)
        unknown = set(data) - names
        missing = names - set(data)
        if unknown or missing:
            raise ValueError(f"report fields mismatch: unknown {sorted(unknown)}, missing {sorted(missing)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ValidationReport":
        return cls.from_dict(json.loads(text))


def build_report(hist, synth, g: Sequence[float] | None = None, B: int = 1000, seed: int = 0,
                 bins: int = 30, levels: int = 99) -> ValidationReport:
    """Compare a historical dataset with synthetic scenarios.

    ``hist`` and ``synth`` may be ReturnsDataset / ScenarioSet objects or plain
    (rows, d) arrays. Portfolio weights default to equal weights.
    """
    H = as_matrix(hist)
    S = getattr(synth, "samples", None)
    S = np.atleast_2d(np.asarray(synth if S is None else S, dtype=float))
    if S.size == 0 or S.shape[0] == 0:
        raise ValueError("synthetic sample is empty")
    if H.shape[1] != S.shape[1]:
        raise ValueError(f"dimension mismatch: historical d={H.shape[1]}, synthetic d={S.shape[1]}")
    g = equal_weights(H.shape[1]) if g is None else np.asarray(g, dtype=float)
    p = portfolio_project(H, g)
    q = portfolio_project(S, g)
    edges, hc, sc = histograms(p, q, bins)
    return ValidationReport(
        t_cvm=cvm_statistic(p, q),
        p_cvm=cvm_pvalue(p, q, B, seed),
        kappa_hist=condition_number(sample_covariance(H)),
        kappa_synth=condition_number(sample_covariance(S)),
        qq_pairs=qq_pairs(p, q, levels),
        qq_probs=qq_probabilities(levels).tolist(),
        weights=g.tolist(),
        n=int(H.shape[0]),
        m=int(S.shape[0]),
        permutations=int(B),
        seed=int(seed),
        bin_edges=edges.tolist(),
        hist_counts=hc.tolist(),
        synth_counts=sc.tolist(),
    )
