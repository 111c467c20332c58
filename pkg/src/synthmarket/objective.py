"""Quadrature evaluation of the denoising score-matching objective and its
exact gradient, plus a Monte Carlo estimator of the same quantity.

With ``lambda(t) = lambda0 * C(t)**2`` the objective is

    L = 1/(2n) sum_i  int_0^1 lambda0 E_x ||K(x) + r_i(t)||^2 dt,
        x ~ N(mu(t, x_i), C(t)),

which expands into a residual term, a term linear in the hidden activations
(1-D Gaussian integrals) and a term quadratic in them (2-D Gaussian integrals).
Time integrals use composite Simpson on [0, 1] and the Gaussian integrals use
normalized Gauss-Hermite rules, so no sampling enters the evaluation.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .activation import SOFTPLUS, Activation
from .data import as_matrix
from .dsde import DsdeSpec, Kind, marginal_moments
from ._pairs import mc_row, pair_block
from .quadrature import PARALLEL_TOL, QuadRule, make_rule
from .score_net import ScoreParams

__all__ = [
    "ObjectiveConfig",
    "residual",
    "objective",
    "gradient",
    "objective_and_gradient",
    "mc_oracle",
]

RESIDUAL_MODES = ("consistent", "paper_literal_ve")
TARGETS = ("expansion", "denoising")
SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class ObjectiveConfig:
    """Settings of the quadrature objective.

    ``target="expansion"`` evaluates the expansion with the data point x_i in
    the residual. ``target="denoising"`` puts the noisy point x in the
    residual, ``||K(x) + x - mu(t, x_i)||^2``, and drops the theta-free term
    ``E||x - mu||^2``; its cross term is a 1-D Gaussian integral on the same
    nodes as the linear term.
    """

    lambda0: float = 1.0
    gh_order: int = 4
    simpson_S: int = 8
    residual_mode: str = "consistent"
    target: str = "expansion"
    threads: int = 1
    _rule: QuadRule = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.lambda0 >= 0:
            raise ValueError("lambda0 must be >= 0")
        if self.residual_mode not in RESIDUAL_MODES:
            raise ValueError(f"residual_mode must be one of {RESIDUAL_MODES}")
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        object.__setattr__(self, "_rule", make_rule(self.gh_order, self.simpson_S))

    @property
    def rule(self) -> QuadRule:
        return self._rule

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda0": self.lambda0,
            "gh_order": self.gh_order,
            "simpson_subintervals": self.simpson_S,
            "residual_mode": self.residual_mode,
            "target": self.target,
        }


def _residuals(spec: DsdeSpec, decay: np.ndarray, x: np.ndarray, mode: str) -> np.ndarray:
    if spec.kind is Kind.VE:
        return x.copy() if mode == "paper_literal_ve" else np.zeros_like(x)
    return x * (1.0 - decay)


def residual(spec: DsdeSpec, t: float, x_i, mode: str = "consistent") -> np.ndarray:
    """r_i(t) = x_i - mu(t, x_i); for VE, ``paper_literal_ve`` gives x_i instead of 0."""
    if mode not in RESIDUAL_MODES:
        raise ValueError(f"residual_mode must be one of {RESIDUAL_MODES}")
    x_i = np.asarray(x_i, dtype=float)
    decay = marginal_moments(spec, t, np.ones(spec.d)).mean
    return _residuals(spec, decay, x_i, mode)


def _node_moments(spec: DsdeSpec, times) -> tuple[np.ndarray, np.ndarray]:
    ones = np.ones(spec.d)
    moms = [marginal_moments(spec, t, ones) for t in times]
    return np.array([m.mean for m in moms]), np.array([m.var for m in moms])


def _terms(theta: ScoreParams, X: np.ndarray, spec: DsdeSpec, cfg: ObjectiveConfig,
           act: Activation, want_grad: bool):
    """Simpson-weighted sum over rows of X and time nodes of the integrand.

    Arrays carry a leading time-node axis T. Returns the value and, if
    requested, the gradient as a tuple (gw, gb, gc, gd).
    """
    rule = cfg.rule
    z, om, wt = rule.nodes, rule.weights, rule.simpson_weights
    w, b, c, dv = theta.w, theta.b, theta.c, theta.d_out
    h = theta.h
    decay, C = _node_moments(spec, rule.simpson_nodes)  # (T, d)
    denoise = cfg.target == "denoising"

    mu = X[None] * decay[:, None, :]  # (T, n, d)
    if denoise:
        r = np.zeros_like(mu)
    else:
        r = np.stack([_residuals(spec, dc, X, cfg.residual_mode) for dc in decay])
    U = mu @ w.T + b  # (T, n, h) hidden pre-activation means
    wC = w[None] * C[:, None, :]  # (T, h, d)
    sig2 = np.sum(w * wC, axis=2)  # (T, h)
    sig = np.sqrt(sig2)
    rho = wC @ w.T  # (T, h, h)

    ju, ku = np.triu_indices(h, 1)
    sj, sk = sig[:, ju], sig[:, ku]
    pos_j = sj > 0
    safe_j = np.where(pos_j, sj, 1.0)
    alpha = np.where(pos_j, rho[:, ju, ku] / safe_j, 0.0)  # (T, P)
    gam = np.sqrt(np.maximum(sig2[:, ku] - alpha**2, 0.0))
    gam = np.where(gam > PARALLEL_TOL * sk, gam, 0.0)

    A = U[..., None] + SQRT2 * sig[:, None, :, None] * z  # (T, n, h, D)
    if want_grad:
        fA, dA = act.both(A)
    else:
        fA = act.f(A)
    I1 = fA @ om
    I2d = (fA * fA) @ om
    rd = r + dv
    e = rd @ c  # (T, n, h)
    G = c.T @ c
    gP = G[ju, ku]
    Gd = np.diag(G)
    # pairs j < k: second factor on the Gram-Schmidt rotated grid
    I2p, du_pair, s_sig, s_al, s_ga = pair_block(
        U, fA, dA if want_grad else None, alpha, gam, ju, ku, z, om, gP, act, want_grad)
    val_t = (0.5 * np.sum(rd * rd, axis=(1, 2)) + np.sum(e * I1, axis=(1, 2))
             + 0.5 * I2d.sum(1) @ Gd + I2p @ gP)
    if denoise:
        # E[a(U_j) (x - mu)_k] = (C_k w_jk / sig_j) E[a(u_j + sig_j Y) Y], on the I1 nodes
        vj = np.sum(c.T * wC, axis=2)  # (T, h): sum_k c[k, j] C_k w[j, k]
        pos = sig > 0
        inv_sig = np.where(pos, 1.0 / np.where(pos, sig, 1.0), 0.0)
        q = vj * inv_sig
        J = fA @ (om * SQRT2 * z)  # (T, n, h)
        val_t = val_t + np.sum(J * q[:, None, :], axis=(1, 2))
    value = float(wt @ val_t)
    if not want_grad:
        return value, None

    zs = SQRT2 * z
    gd = wt @ (rd.sum(1) + I1.sum(1) @ c.T)
    I2d_s = wt @ I2d.sum(1)
    M = np.zeros((h, h))
    M[ju, ku] = M[ku, ju] = wt @ I2p
    M[np.diag_indices(h)] = I2d_s
    gc = np.einsum("t,tnk,tnj->kj", wt, rd, I1) + c @ M

    fdA = 2.0 * fA * dA
    du = e * (dA @ om) + 0.5 * Gd * (fdA @ om)  # (T, n, h)
    dsig = np.sum(e * ((dA * zs) @ om), axis=1) + 0.5 * Gd * np.sum((fdA * zs) @ om, axis=1)

    P = ju.size
    Ej = np.zeros((P, h))
    Ej[np.arange(P), ju] = 1.0
    Ek = np.zeros((P, h))
    Ek[np.arange(P), ku] = 1.0
    du += du_pair
    Gs, Ga, Gg = gP * s_sig, gP * s_al, gP * s_ga  # (T, P)
    pos_g = gam > 0
    safe_g = np.where(pos_g, gam, 1.0)
    H_al = Ga - np.where(pos_g, Gg * alpha / safe_g, 0.0)
    d_rho = np.where(pos_j, H_al / safe_j, 0.0)
    dsig += (Gs - np.where(pos_j, H_al * alpha / safe_j, 0.0)) @ Ej
    dsig += np.where(pos_g, Gg * sk / safe_g, 0.0) @ Ek

    gw = np.zeros_like(w)
    if denoise:
        du += q[:, None, :] * ((dA * zs) @ om)
        Js = J.sum(1)  # (T, h)
        dsig += q * np.sum((dA * zs * zs) @ om, axis=1) - vj * inv_sig**2 * Js
        coef = Js * inv_sig  # (T, h)
        gc += np.einsum("t,tk,jk,tj->kj", wt, C, w, coef)
        gw += np.einsum("t,kj,tk,tj->jk", wt, c, C, coef)

    R = np.zeros((rule.simpson_nodes.size, h, h))
    R[:, ju, ku] = d_rho
    R[:, ku, ju] = d_rho
    pos = sig > 0
    ratio = np.where(pos, dsig / np.where(pos, sig, 1.0), 0.0)  # (T, h)
    gw += np.einsum("t,tnh,tnd->hd", wt, du, mu)
    gw += np.einsum("t,th,thd->hd", wt, ratio, wC)
    gw += np.einsum("t,thk,tkd->hd", wt, R, wC)
    gb = wt @ du.sum(1)
    return value, (gw, gb, gc, gd)


ROW_BLOCK = 64


def _chunk_eval(theta, X, spec, cfg, act, want_grad):
    total = 0.0
    grads = [np.zeros_like(a) for a in theta.arrays()] if want_grad else None
    for lo in range(0, X.shape[0], ROW_BLOCK):
        v, g = _terms(theta, X[lo:lo + ROW_BLOCK], spec, cfg, act, want_grad)
        total += v
        if want_grad:
            for acc, gi in zip(grads, g):
                acc += gi
    return total, grads


def _select(ds, batch) -> np.ndarray:
    X = as_matrix(ds)
    if batch is not None:
        X = X[np.asarray(batch)]
    return X


def objective_and_gradient(theta: ScoreParams, ds, spec: DsdeSpec, cfg: ObjectiveConfig,
                           batch=None, act: Activation = SOFTPLUS, want_grad: bool = True):
    """Objective value and (optionally) its gradient as a ScoreParams.

    With ``cfg.threads > 1`` the rows are split into that many contiguous
    chunks evaluated concurrently; partial sums are combined in chunk order,
    so results are reproducible for a fixed thread count.
    """
    X = _select(ds, batch)
    if X.ndim != 2 or X.shape[1] != theta.d or spec.d != theta.d:
        raise ValueError(f"dimension mismatch: data {X.shape}, theta d={theta.d}, spec d={spec.d}")
    n = X.shape[0]
    if n == 0:
        raise ValueError("empty batch")
    if cfg.threads > 1 and n > 1:
        chunks = np.array_split(X, min(cfg.threads, n))
        with ThreadPoolExecutor(max_workers=len(chunks)) as ex:
            parts = list(ex.map(lambda Xc: _chunk_eval(theta, Xc, spec, cfg, act, want_grad), chunks))
    else:
        parts = [_chunk_eval(theta, X, spec, cfg, act, want_grad)]
    scale = cfg.lambda0 / n
    value = scale * sum(p[0] for p in parts)
    if not want_grad:
        return value, None
    g = [scale * sum(p[1][k] for p in parts) for k in range(4)]
    return value, ScoreParams(*g)


def objective(theta: ScoreParams, ds, spec: DsdeSpec, cfg: ObjectiveConfig, batch=None,
              act: Activation = SOFTPLUS) -> float:
    return float(objective_and_gradient(theta, ds, spec, cfg, batch, act, want_grad=False)[0])


def gradient(theta: ScoreParams, ds, spec: DsdeSpec, cfg: ObjectiveConfig, batch=None,
             act: Activation = SOFTPLUS) -> ScoreParams:
    """Exact gradient of ``objective`` with the quadrature nodes held fixed."""
    return objective_and_gradient(theta, ds, spec, cfg, batch, act)[1]


MC_CHUNK = 16384  # samples per block; keeps temporaries small


def mc_oracle(theta: ScoreParams, ds, spec: DsdeSpec, cfg: ObjectiveConfig, N: int, seed,
              batch=None, act: Activation = SOFTPLUS) -> tuple[float, float]:
    """Monte Carlo estimate of ``objective`` and its standard error.

    For every data row and Simpson node, N points are drawn from the transition
    Gaussian and the integrand is averaged; the Simpson sum is kept, so only the
    Gaussian integrals are replaced by sampling.
    """
    if N < 100:
        raise ValueError("mc_oracle needs N >= 100")
    X = _select(ds, batch)
    n, d = X.shape
    rng = np.random.default_rng(seed)
    denoise = cfg.target == "denoising"
    est, var = 0.0, 0.0
    for t, ws in zip(cfg.rule.simpson_nodes, cfg.rule.simpson_weights):
        mom = marginal_moments(spec, t, np.ones(d))
        decay, sd = mom.mean, np.sqrt(mom.var)
        r = np.zeros_like(X) if denoise else _residuals(spec, decay, X, cfg.residual_mode)
        coef = cfg.lambda0 * ws / n
        w_sd = theta.w.T * sd[:, None]
        shift = (X * decay) @ theta.w.T + theta.b
        if not np.any(sd):
            # degenerate transition: the Gaussian integral is a point evaluation
            K = act.f(shift) @ theta.c.T + theta.d_out + (0.0 if denoise else r)
            est += coef * float(np.sum(0.5 * np.einsum("ij,ij->i", K, K)))
            continue
        for i in range(n):
            offset = theta.d_out if denoise else theta.d_out + r[i]
            count, mean, m2 = 0, 0.0, 0.0
            for lo in range(0, N, MC_CHUNK):
                # chunks read the stream in order, so draws match a single (N, d) call
                z = rng.standard_normal((min(MC_CHUNK, N - lo), d))
                c_mean, c_m2 = mc_row(z, w_sd, shift[i], theta.c, offset, sd, act, denoise)
                k = len(z)
                delta = c_mean - mean
                total = count + k
                mean += delta * k / total
                m2 += c_m2 + delta * delta * count * k / total
                count = total
            est += coef * mean
            var += coef**2 * m2 / (N - 1) / N
    return float(est), float(np.sqrt(var))
