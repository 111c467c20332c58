import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from synthmarket.activation import SOFTPLUS, sigmoid, softplus, softplus_and_sigmoid
from synthmarket.dsde import DsdeSpec
from synthmarket.score_net import (
    NumericError,
    ScoreParams,
    init_params,
    k_forward,
    score_eval,
    true_gaussian_score,
)


def one_unit(w):
    return ScoreParams([[w]], [0.0], [[1.0]], [0.0])


def test_softplus_overflow_safe():
    u = np.array([-800.0, -50.0, 0.0, 50.0, 800.0])
    v = softplus(u)
    assert np.all(np.isfinite(v))
    assert v[0] == 0.0 or v[0] < 1e-300
    assert v[-1] == 800.0
    assert v[2] == pytest.approx(np.log(2), rel=1e-15)


@given(st.floats(-700, 700))
def test_fused_softplus_matches(u):
    f, df = softplus_and_sigmoid(np.array([u]))
    assert f[0] == pytest.approx(softplus(np.array([u]))[0], rel=1e-14, abs=1e-300)
    assert df[0] == pytest.approx(sigmoid(np.array([u]))[0], rel=1e-14, abs=1e-300)


def test_k_forward_examples():
    p = ScoreParams.zeros(3, 4).replace(d_out=[1.0, -2.0, 0.5])
    for x in ([0, 0, 0], [10, -3, 2]):
        np.testing.assert_array_equal(k_forward(p, x), [1.0, -2.0, 0.5])
    assert k_forward(one_unit(0.0), [5.0])[0] == pytest.approx(0.693147, rel=1e-6)
    assert 0 <= k_forward(one_unit(1.0), [-50.0])[0] <= 1e-20


def test_k_forward_index_convention():
    # c[k, j]: output k, hidden j
    p = ScoreParams(np.zeros((2, 2)), [0.0, 10.0], [[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0])
    out = k_forward(p, [0.0, 0.0])
    assert out[0] == pytest.approx(np.log(2))
    assert out[1] == pytest.approx(softplus(np.array([10.0]))[0])


def test_k_forward_batch_rows_independent(rng):
    p = init_params(4, 6, 3)
    X = rng.normal(size=(9, 4))
    batch = k_forward(p, X)
    for i in range(9):
        np.testing.assert_array_equal(batch[i], k_forward(p, X[i]))


def test_score_eval_examples():
    vp = DsdeSpec.create("VP", 0.0, 0.1, d=2)
    p = init_params(2, 5, 11)
    x = np.array([0.3, -0.7])
    np.testing.assert_allclose(score_eval(p, vp, 1.0, x), k_forward(p, x), rtol=1e-15)
    np.testing.assert_allclose(score_eval(p, vp, 0.5, x), k_forward(p, x) / 0.06697, rtol=1e-4)
    zero = p.replace(c=np.zeros((2, 5)), d_out=np.zeros(2))
    np.testing.assert_array_equal(score_eval(zero, vp, 0.4, x), 0.0)
    with pytest.raises(ValueError):
        score_eval(p, vp, 0.0, x)


def test_true_gaussian_score_examples():
    x = np.array([1.5, -2.0])
    np.testing.assert_array_equal(true_gaussian_score(0.0, 1.0, x), -x)
    np.testing.assert_array_equal(true_gaussian_score(x, [1.0, 2.0], x), 0.0)
    assert true_gaussian_score(1.0, 0.25, 2.0) == -4.0
    with pytest.raises(ValueError):
        true_gaussian_score(0.0, 0.0, 1.0)


def test_init_params_examples():
    a, b = init_params(3, 7, 42), init_params(3, 7, 42)
    for u, v in zip(a.arrays(), b.arrays()):
        np.testing.assert_array_equal(u, v)
    assert not np.any(a.b) and not np.any(a.d_out)
    big = init_params(20, 600, 0)
    assert big.w.var() == pytest.approx(1 / 20, rel=0.2)
    assert big.c.var() == pytest.approx(1 / 600, rel=0.2)
    with pytest.raises(ValueError):
        init_params(0, 3, 0)


@given(st.integers(1, 6), st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_init_rows_pairwise_independent(d, h, seed):
    if d == 1:
        return  # in one dimension every pair of rows is parallel
    w = init_params(d, h, seed).w
    n = w / np.linalg.norm(w, axis=1, keepdims=True)
    cos = n @ n.T
    sin = np.sqrt(np.clip(1 - cos[np.triu_indices(h, 1)] ** 2, 0, None))
    assert np.all(sin > 0)


def test_param_validation():
    with pytest.raises(ValueError):
        ScoreParams(np.zeros((2, 3)), np.zeros(2), np.zeros((2, 2)), np.zeros(3))
    with pytest.raises(NumericError):
        ScoreParams([[np.nan]], [0.0], [[1.0]], [0.0])


@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 1000))
def test_vector_and_dict_round_trip(d, h, seed):
    p = init_params(d, h, seed).replace(b=np.arange(h) * 0.1)
    q = ScoreParams.from_vector(p.to_vector(), d, h)
    r = ScoreParams.from_dict(p.to_dict())
    for u, v, w in zip(p.arrays(), q.arrays(), r.arrays()):
        np.testing.assert_array_equal(u, v)
        np.testing.assert_array_equal(u, w)


@given(st.integers(0, 500))
def test_jacobian_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    d, h = 3, 4
    p = init_params(d, h, seed).replace(b=rng.normal(size=h))
    x, v = rng.normal(size=d), rng.normal(size=d)
    pre = p.w @ x + p.b
    jac = p.c @ (SOFTPLUS.df(pre)[:, None] * p.w)
    eps = 1e-6
    fd = (k_forward(p, x + eps * v) - k_forward(p, x - eps * v)) / (2 * eps)
    np.testing.assert_allclose(fd, jac @ v, rtol=1e-5, atol=1e-8)
