"""Hot loop of the objective: the 2-D Gauss-Hermite integrals over hidden-unit
pairs and their partial derivatives.

For pair P = (j, k), time node t and data row n the second factor lives on the
rotated grid ``B[p, q] = U_k + sqrt(2) (alpha z_p + gamma z_q)``. The numpy
version materializes B for all (t, n, P) at once; the compiled version walks
the same sums without temporaries. Both return identical quantities (up to
rounding) and the numpy one doubles as the test oracle for the kernel.

Returned arrays (all sums in a fixed loop order):
    i2    (T, P)      sum_n I2(t, n, P)
    du    (T, n, h)   sum over pairs of gP * dI2/dU_j and gP * dI2/dU_k
    s_sig (T, P)      sum_n dI2/d sigma_j  (first factor scale, alpha/gamma held)
    s_al  (T, P)      sum_n dI2/d alpha
    s_ga  (T, P)      sum_n dI2/d gamma
"""
from __future__ import annotations

import math

import numpy as np

try:  # pragma: no cover - exercised implicitly when numba is present
    import numba
except ImportError:  # pragma: no cover
    numba = None

SQRT2 = math.sqrt(2.0)


def pair_block_numpy(U, fA, dA, alpha, gam, ju, ku, z, om, gP, act, want_grad):
    zs = SQRT2 * z
    B = (U[:, :, ku, None, None]
         + SQRT2 * (alpha[:, None, :, None, None] * z[:, None]
                    + gam[:, None, :, None, None] * z[None, :]))  # (T, n, P, D, D)
    D = z.size
    if want_grad:
        fB, dB = act.both(B)
    else:
        fB = act.f(B)
    Fq = (fB.reshape(-1, D) @ om).reshape(B.shape[:-1])  # (T, n, P, D)
    fAj = fA[:, :, ju, :]
    i2 = ((fAj * Fq) @ om).sum(1)
    if not want_grad:
        return i2, None, None, None, None
    dq = dB.reshape(-1, D) @ np.stack([om, om * zs], axis=1)
    dFq = dq[:, 0].reshape(Fq.shape)
    dFqz = dq[:, 1].reshape(Fq.shape)
    dAj = dA[:, :, ju, :]
    d_uj = (dAj * Fq) @ om  # (T, n, P)
    d_uk = (fAj * dFq) @ om
    s_sig = ((dAj * Fq) @ (om * zs)).sum(1)
    s_al = ((fAj * dFq) @ (om * zs)).sum(1)
    s_ga = ((fAj * dFqz) @ om).sum(1)
    T, n, h = U.shape
    P = ju.size
    Ej = np.zeros((P, h))
    Ej[np.arange(P), ju] = 1.0
    Ek = np.zeros((P, h))
    Ek[np.arange(P), ku] = 1.0
    du = (gP * d_uj) @ Ej + (gP * d_uk) @ Ek
    return i2, du, s_sig, s_al, s_ga


EXP_SAFE = 200.0


def _sp_from_exp(E):
    """softplus and sigmoid of x given E = exp(x) (finite)."""
    one = 1.0 + E
    f = math.log(one) if E > 1e-8 else E * (1.0 - 0.5 * E)
    return f, E / one


def _sp_direct(x):
    e = math.exp(-abs(x))
    if x > 0.0:
        return x + math.log1p(e), 1.0 / (1.0 + e)
    return math.log1p(e), e / (1.0 + e)


def _softplus_kernel(U, fA, dA, alpha, gam, ju, ku, z, om, gP, want_grad):
    T, n, h = U.shape
    P = ju.shape[0]
    D = z.shape[0]
    i2 = np.zeros((T, P))
    du = np.zeros((T, n, h))
    s_sig = np.zeros((T, P))
    s_al = np.zeros((T, P))
    s_ga = np.zeros((T, P))
    zs = np.empty(D)
    ep = np.empty(D)
    eq = np.empty(D)
    zmax = 0.0
    for p in range(D):
        zs[p] = SQRT2 * z[p]
        zmax = max(zmax, abs(zs[p]))
    F = np.empty(D)
    dF = np.empty(D)
    dFz = np.empty(D)
    for t in range(T):
        for pi in range(P):
            j = ju[pi]
            k = ku[pi]
            a = alpha[t, pi]
            g = gam[t, pi]
            gp = gP[pi]
            grid_ok = abs(a) * zmax <= EXP_SAFE and abs(g) * zmax <= EXP_SAFE
            if grid_ok:
                for p in range(D):
                    ep[p] = math.exp(a * zs[p])
                    eq[p] = math.exp(g * zs[p])
            for r in range(n):
                uk = U[t, r, k]
                fast = grid_ok and abs(uk) <= EXP_SAFE
                euk = math.exp(uk) if fast else 0.0
                for p in range(D):
                    base = uk + a * zs[p]
                    Fp = 0.0
                    dFp = 0.0
                    dFzp = 0.0
                    if not want_grad:
                        for q in range(D):
                            if fast:
                                E = euk * ep[p] * eq[q]
                                f = math.log(1.0 + E) if E > 1e-8 else E * (1.0 - 0.5 * E)
                            else:
                                f = _sp_direct(base + g * zs[q])[0]
                            Fp += om[q] * f
                        F[p] = Fp
                        continue
                    for q in range(D):
                        if fast:
                            f, s = _sp_from_exp(euk * ep[p] * eq[q])
                        else:
                            f, s = _sp_direct(base + g * zs[q])
                        Fp += om[q] * f
                        dFp += om[q] * s
                        dFzp += om[q] * zs[q] * s
                    F[p] = Fp
                    dF[p] = dFp
                    dFz[p] = dFzp
                acc = 0.0
                for p in range(D):
                    acc += om[p] * fA[t, r, j, p] * F[p]
                i2[t, pi] += acc
                if want_grad:
                    a_uj = 0.0
                    a_uk = 0.0
                    a_sig = 0.0
                    a_al = 0.0
                    a_ga = 0.0
                    for p in range(D):
                        fa = fA[t, r, j, p]
                        da = dA[t, r, j, p]
                        a_uj += om[p] * da * F[p]
                        a_uk += om[p] * fa * dF[p]
                        a_sig += om[p] * zs[p] * da * F[p]
                        a_al += om[p] * zs[p] * fa * dF[p]
                        a_ga += om[p] * fa * dFz[p]
                    du[t, r, j] += gp * a_uj
                    du[t, r, k] += gp * a_uk
                    s_sig[t, pi] += a_sig
                    s_al[t, pi] += a_al
                    s_ga[t, pi] += a_ga
    return i2, du, s_sig, s_al, s_ga


if numba is not None:
    _sp_from_exp = numba.njit(inline="always")(_sp_from_exp)
    _sp_direct = numba.njit(inline="always")(_sp_direct)
    _compiled = numba.njit(cache=True, nogil=True)(_softplus_kernel)
else:  # pragma: no cover
    _compiled = None


def pair_block(U, fA, dA, alpha, gam, ju, ku, z, om, gP, act, want_grad):
    """Pair integrals and derivative sums; compiled path for softplus."""
    if _compiled is None or act.name != "softplus":
        return pair_block_numpy(U, fA, dA, alpha, gam, ju, ku, z, om, gP, act, want_grad)
    if dA is None:
        dA = fA
    i2, du, s_sig, s_al, s_ga = _compiled(
        np.ascontiguousarray(U), np.ascontiguousarray(fA), np.ascontiguousarray(dA),
        np.ascontiguousarray(alpha), np.ascontiguousarray(gam),
        ju.astype(np.int64), ku.astype(np.int64), np.ascontiguousarray(z, dtype=float),
        np.ascontiguousarray(om, dtype=float), np.ascontiguousarray(gP, dtype=float),
        bool(want_grad))
    if not want_grad:
        return i2, None, None, None, None
    return i2, du, s_sig, s_al, s_ga


# -- Monte Carlo rows ---------------------------------------------------------------

def mc_row(z, w_sd, shift, c, offset, sd, act, denoise):
    """Mean and centered sum of squares (M2) of the squared-residual integrand.

    Sample s has pre-activations ``z[s] @ w_sd + shift`` and network output
    ``K = act(pre) @ c.T + offset``; the value is ``|K|^2 / 2`` plus
    ``K . (sd * z[s])`` for the denoising target.
    """
    pre = z @ w_sd
    pre += shift
    K = act.f(pre) @ c.T
    K += offset
    vals = 0.5 * np.einsum("ij,ij->i", K, K)
    if denoise:
        vals += np.einsum("ij,ij->i", K, z * sd)
    mean = vals.mean()
    return float(mean), float(np.sum((vals - mean) ** 2))
