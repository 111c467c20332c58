import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from synthmarket.activation import softplus
from synthmarket.dsde import GaussMoments
from synthmarket.quadrature import (
    gh_rule,
    int_i1,
    int_i2,
    make_rule,
    simpson_integrate,
    simpson_rule,
)

R8 = make_rule(8, 8)


def moments(mean, var):
    return GaussMoments(np.asarray(mean, float), np.asarray(var, float))


def trapezoid_expectation(f, mu, sd, n=1_000_001, half_width=40.0):
    """E[f(mu + sd Z)] on a uniform grid wide enough for Gaussian tails."""
    z = np.linspace(-half_width, half_width, n)
    y = f(mu + sd * z) * np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi)
    return np.trapezoid(y, z) if hasattr(np, "trapezoid") else np.trapz(y, z)


# -- rules ---------------------------------------------------------------------

def test_gh_examples():
    z, w = gh_rule(1)
    np.testing.assert_array_equal(z, [0.0])
    np.testing.assert_array_equal(w, [1.0])
    z, w = gh_rule(2)
    np.testing.assert_allclose(z, [-1 / np.sqrt(2), 1 / np.sqrt(2)], rtol=1e-15)
    np.testing.assert_allclose(w, [0.5, 0.5], rtol=1e-15)
    z, w = gh_rule(8)
    assert w @ (np.sqrt(2) * z) ** 4 == pytest.approx(3.0, rel=1e-13)


@pytest.mark.parametrize("D", [0, 65, 2.5])
def test_gh_order_range(D):
    with pytest.raises(ValueError):
        gh_rule(D)


@given(st.integers(1, 64))
def test_gh_invariants(D):
    z, w = gh_rule(D)
    assert abs(w.sum() - 1) <= 1e-14
    assert np.all(w > 0)
    np.testing.assert_array_equal(z, -z[::-1])
    np.testing.assert_array_equal(w, w[::-1])


@given(st.integers(1, 20), st.data())
def test_gh_polynomial_exactness(D, data):
    k = data.draw(st.integers(0, 2 * D - 1))
    z, w = gh_rule(D)
    # E[Z^k] = (k-1)!! for even k, 0 for odd k
    exact = 0.0 if k % 2 else float(np.prod(np.arange(k - 1, 0, -2))) if k else 1.0
    terms = w * (np.sqrt(2) * z) ** k
    # odd moments cancel large terms, so rounding is relative to their magnitude
    assert terms.sum() == pytest.approx(exact, rel=1e-10, abs=1e-13 * np.abs(terms).sum())


def test_simpson_weights_pattern():
    t, w = simpson_rule(6)
    np.testing.assert_allclose(t, np.linspace(0, 1, 7))
    np.testing.assert_allclose(w * 3 * 6, [1, 4, 2, 4, 2, 4, 1])
    with pytest.raises(ValueError):
        simpson_rule(5)
    with pytest.raises(ValueError):
        simpson_rule(0)


def test_simpson_examples():
    assert simpson_integrate(4, lambda t: 1.0) == pytest.approx(1.0, rel=1e-15)
    assert simpson_integrate(2, lambda t: t ** 3) == pytest.approx(0.25, rel=1e-15)
    # composite Simpson error for e^t at S=8 is (1/8)^4/180 * (e - 1) ~ 2.3e-6
    got = simpson_integrate(8, np.exp)
    assert abs(got - (np.e - 1)) <= (1 / 8) ** 4 / 180 * (np.e - 1) * 1.0001
    assert got == pytest.approx(1.718282, abs=5e-6)


@pytest.mark.xfail(strict=True, reason=(
    "composite Simpson with S=8 has error ~2.3e-6 on e^t, so a 1e-6 match "
    "to e - 1 is out of reach for any correct implementation (see decisions ledger)"))
def test_simpson_exp_within_1e6():
    assert simpson_integrate(8, np.exp) == pytest.approx(np.e - 1, abs=1e-6)


# -- one-dimensional reduction -------------------------------------------------

def test_i1_examples():
    m = moments([0.3, -1.0], [2.0, 0.5])
    assert int_i1(R8, np.zeros(2), 0.7, m) == pytest.approx(softplus(np.array([0.7]))[0], rel=1e-15)
    m0 = moments([0.3, -1.0], [0.0, 0.0])
    w = np.array([1.5, 2.0])
    assert int_i1(R8, w, 0.2, m0) == pytest.approx(softplus(np.array([w @ m0.mean + 0.2]))[0], rel=1e-15)


def test_i1_trapezoid_oracle():
    got = int_i1(R8, np.array([1.0]), 0.0, moments([0.0], [1.0]))
    oracle = trapezoid_expectation(softplus, 0.0, 1.0)
    # absolute agreement; the D=8 quadrature error here is 9.8e-7
    assert abs(got - oracle) <= 1e-6


def test_i1_uses_scaled_norm():
    # an anisotropic variance is equivalent to a 1-D Gaussian with sd ||w||_C
    w, var, mean = np.array([0.5, -1.0, 2.0]), np.array([0.2, 0.1, 0.05]), np.array([0.1, 0.2, -0.3])
    sd = np.sqrt(np.sum(w * w * var))
    oracle = trapezoid_expectation(softplus, w @ mean + 0.4, sd)
    assert int_i1(R8, w, 0.4, moments(mean, var)) == pytest.approx(oracle, rel=1e-9)


# -- two-dimensional reduction -------------------------------------------------

def test_i2_orthogonal_factorizes():
    m = moments([0.2, -0.1], [0.5, 2.0])
    w1, w2 = np.array([1.0, 0.0]), np.array([0.0, -0.7])
    prod = int_i1(R8, w1, 0.3, m) * int_i1(R8, w2, -0.2, m)
    assert int_i2(R8, w1, 0.3, w2, -0.2, m) == pytest.approx(prod, rel=1e-12)


def test_i2_degenerate_moments():
    m = moments([0.2, -0.1], [0.0, 0.0])
    w1, w2 = np.array([1.0, 2.0]), np.array([-0.5, 0.7])
    expect = softplus(np.array([w1 @ m.mean + 0.1]))[0] * softplus(np.array([w2 @ m.mean - 0.4]))[0]
    assert int_i2(R8, w1, 0.1, w2, -0.4, m) == pytest.approx(expect, rel=1e-14)


def test_i2_parallel_fallback_matches_1d_oracle():
    m = moments([0.3, -0.2], [0.4, 0.1])
    w1 = np.array([0.8, -0.6])
    w2 = 2 * w1
    sd = np.sqrt(np.sum(w1 * w1 * m.var))
    u1 = w1 @ m.mean + 0.1
    # with v = <w1|X> + 0.1 the second argument is <w2|X> - 0.3 = 2 (v - 0.1) - 0.3
    oracle = trapezoid_expectation(lambda v: softplus(v) * softplus(2 * (v - 0.1) - 0.3), u1, sd)
    got = int_i2(make_rule(32, 2), w1, 0.1, w2, -0.3, m)
    assert got == pytest.approx(oracle, rel=1e-10)


def test_i2_rejects_zero_vectors():
    with pytest.raises(ValueError):
        int_i2(R8, np.zeros(2), 0.0, np.ones(2), 0.0, moments([0, 0], [1, 1]))


vec2 = st.lists(st.floats(-3, 3), min_size=3, max_size=3).map(np.array).filter(lambda v: np.any(v != 0))


@given(vec2, st.floats(-2, 2), vec2, st.floats(-2, 2),
       st.lists(st.floats(0.0, 2.0), min_size=3, max_size=3))
def test_i2_symmetric(w1, b1, w2, b2, var):
    m = moments([0.1, -0.2, 0.3], var)
    a = int_i2(R8, w1, b1, w2, b2, m)
    b = int_i2(R8, w2, b2, w1, b1, m)
    assert abs(a - b) <= 1e-13 * max(1.0, abs(a))


def test_i2_self_pair_is_second_moment():
    m = moments([0.1, 0.2], [0.3, 0.6])
    w = np.array([0.9, -0.4])
    sd = np.sqrt(np.sum(w * w * m.var))
    oracle = trapezoid_expectation(lambda v: softplus(v) ** 2, w @ m.mean + 0.5, sd)
    assert int_i2(make_rule(32, 2), w, 0.5, w, 0.5, m) == pytest.approx(oracle, rel=1e-10)


def test_i2_correlated_monte_carlo(rng):
    m = moments([0.1, -0.3], [0.3, 0.5])
    w1, w2 = np.array([1.0, 0.4]), np.array([0.3, -1.2])
    X = m.mean + np.sqrt(m.var) * rng.standard_normal((1_000_000, 2))
    vals = softplus(X @ w1 + 0.2) * softplus(X @ w2 - 0.1)
    se = vals.std(ddof=1) / np.sqrt(vals.size)
    assert abs(int_i2(R8, w1, 0.2, w2, -0.1, m) - vals.mean()) <= 4 * se


# -- convergence envelope ------------------------------------------------------

def _d_vs_2d(D, s_max, n):
    rng = np.random.default_rng(7)
    worst = 0.0
    r1, r2 = make_rule(D, 2), make_rule(2 * D, 2)
    for _ in range(n):
        w = rng.normal(size=3)
        scale = rng.uniform(0, s_max) / (np.sqrt(2) * np.linalg.norm(w))
        m = moments(rng.normal(size=3) * 0.5, np.full(3, scale ** 2))
        b = rng.normal()
        a1, a2 = int_i1(r1, w, b, m), int_i1(r2, w, b, m)
        worst = max(worst, abs(a1 - a2) / abs(a2))
        w2 = rng.normal(size=3)
        w2 *= np.linalg.norm(w) / np.linalg.norm(w2)  # keep both directions inside the envelope
        a1, a2 = int_i2(r1, w, b, w2, 0.1, m), int_i2(r2, w, b, w2, 0.1, m)
        worst = max(worst, abs(a1 - a2) / abs(a2))
    return worst


def test_d_vs_2d_within_unit_scale():
    # where the integrand is smooth on the quadrature scale, D=8 is already converged
    assert _d_vs_2d(8, 1.0, 100) < 1e-6


@pytest.mark.xfail(strict=True, reason=(
    "softplus has a kink of width 1; once ||w||_C*sqrt(2) reaches ~3 a D=8 Gauss-Hermite rule "
    "cannot resolve it and D vs 2D differ by 1e-3..1e-1 (see decisions ledger)"))
def test_d_vs_2d_full_envelope():
    assert _d_vs_2d(8, 10.0, 100) < 1e-6
