"""Quadrature versus sampling for the score-matching objective.

Builds a random score network on Gaussian toy returns, evaluates the objective
with Gauss-Hermite/Simpson quadrature and with the Monte Carlo oracle, and
reports how many samples the oracle needs to match the quadrature precision.

    python3 demos/quadrature_vs_monte_carlo.py
"""
import time

import numpy as np

from synthmarket import DsdeSpec, ObjectiveConfig, init_params, mc_oracle, objective

d, n, h = 5, 16, 4
rng = np.random.default_rng(0)
X = rng.normal(0, 0.5, (n, d))
theta = init_params(d, h, seed=1).replace(b=rng.normal(0, 0.5, h))
spec = DsdeSpec.create("VP", a=0.0, b=0.1, d=d)
cfg = ObjectiveConfig(gh_order=4, simpson_S=8)

objective(theta, X, spec, cfg)  # first call loads the compiled kernel
t0 = time.perf_counter()
value = objective(theta, X, spec, cfg)
t_quad = time.perf_counter() - t0
print(f"quadrature (D=4, S=8):  {value:.8f}   [{1e3 * t_quad:.1f} ms]")

for D in (8, 16):
    print(f"quadrature (D={D:<2}, S=8): {objective(theta, X, spec, ObjectiveConfig(gh_order=D)):.8f}")

for N in (1_000, 10_000, 100_000):
    t0 = time.perf_counter()
    est, se = mc_oracle(theta, X, spec, cfg, N, seed=2)
    dt = time.perf_counter() - t0
    print(f"Monte Carlo N={N:>7}:  {est:.8f} +/- {se:.1e}   "
          f"|gap| = {abs(est - value) / se:.2f} se   [{1e3 * dt:.0f} ms]")
