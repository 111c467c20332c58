import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from synthmarket.data import (
    DataError,
    PriceTable,
    ReturnsDataset,
    load_prices,
    load_returns,
    save_returns,
    select_window,
    to_returns,
)


def write_csv(path, header, rows):
    path.write_text("\n".join([",".join(header)] + [",".join(map(str, r)) for r in rows]) + "\n")
    return path


def test_load_small_csv(tmp_path):
    p = write_csv(tmp_path / "p.csv", ["date", "A", "B"],
                  [["2024-01-02", 10, 20], ["2024-01-03", 11, 21], ["2024-01-04", 12, 19]])
    pt = load_prices(p)
    assert (len(pt.dates), len(pt.tickers)) == (3, 2)
    assert pt.tickers == ("A", "B")
    np.testing.assert_array_equal(pt.prices[:, 0], [10, 11, 12])


def test_rows_sorted_by_date(tmp_path):
    p = write_csv(tmp_path / "p.csv", ["date", "A"], [["2024-01-03", 2], ["2024-01-01", 1], ["2024-01-02", 3]])
    pt = load_prices(p)
    assert pt.dates == ("2024-01-01", "2024-01-02", "2024-01-03")
    np.testing.assert_array_equal(pt.prices[:, 0], [1, 3, 2])


def test_zero_price_reports_location(tmp_path):
    p = write_csv(tmp_path / "p.csv", ["date", "A", "B"], [["d1", 1, 2], ["d2", 0.0, 2]])
    with pytest.raises(DataError, match="non-positive price at row"):
        load_prices(p)


@pytest.mark.parametrize(
    "rows, message",
    [
        ([["d1", 1], ["d2", "abc"]], "non-numeric cell 'abc' at row 3"),
        ([["d1", 1], ["d1", 2]], "duplicate date"),
        ([["d1", 1], ["d2", ""]], "non-numeric"),
    ],
)
def test_bad_cells(tmp_path, rows, message):
    p = write_csv(tmp_path / "p.csv", ["date", "A"], rows)
    with pytest.raises(DataError, match=message):
        load_prices(p)


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="not found"):
        load_prices(tmp_path / "nope.csv")


def test_reference_sized_table(tmp_path):
    rng = np.random.default_rng(0)
    prices = 100 * np.cumprod(1 + rng.normal(0, 0.01, (1258, 33)), axis=0)
    rows = [[f"r{i:05d}", *p] for i, p in enumerate(prices)]
    pt = load_prices(write_csv(tmp_path / "p.csv", ["date"] + [f"T{k}" for k in range(33)], rows))
    assert pt.prices.shape == (1258, 33)


def test_returns_definition():
    pt = PriceTable(("a", "b", "c"), ("X",), np.array([[100.0], [110.0], [99.0]]))
    np.testing.assert_allclose(to_returns(pt).returns[:, 0], [0.10, -0.10], rtol=1e-14)


def test_constant_prices_give_zero_returns():
    pt = PriceTable(("a", "b", "c"), ("X", "Y"), np.full((3, 2), 7.5))
    assert np.all(to_returns(pt).returns == 0.0)


def test_log_returns_only_on_request():
    pt = PriceTable(("a", "b"), ("X",), np.array([[100.0], [110.0]]))
    assert to_returns(pt).returns[0, 0] == pytest.approx(0.1)
    assert to_returns(pt, log=True).returns[0, 0] == pytest.approx(np.log(1.1))


@given(arrays(float, st.tuples(st.integers(2, 30), st.integers(1, 4)),
              elements=st.floats(0.01, 1e4, allow_nan=False)))
def test_cumulative_reconstruction(prices):
    pt = PriceTable(tuple(f"d{i}" for i in range(prices.shape[0])),
                    tuple(f"t{k}" for k in range(prices.shape[1])), prices)
    r = to_returns(pt).returns
    rebuilt = prices[0] * np.vstack([np.ones(prices.shape[1]), np.cumprod(1 + r, axis=0)])
    # 1 + r cancels when a price collapses, losing about log10(max/min) digits
    # per step, so the tolerance grows with the price range and path length
    tol = 1e-12 + 4e-16 * prices.shape[0] * prices.max() / prices.min()
    np.testing.assert_allclose(rebuilt, prices, rtol=tol)


def make_ds(n, d=2, seed=0):
    x = np.random.default_rng(seed).normal(0, 0.01, (n, d))
    return ReturnsDataset.from_array(x)


def test_window_reference_length():
    ds = make_ds(1257)
    w = select_window(ds, 0, 256)
    assert w.n == 256
    assert w.dates == ds.dates[:256]


def test_window_identity():
    ds = make_ds(20)
    w = select_window(ds, 0, ds.n)
    np.testing.assert_array_equal(w.returns, ds.returns)
    assert w.tickers == ds.tickers


def test_window_out_of_range():
    with pytest.raises(DataError, match="out of range"):
        select_window(make_ds(10), 8, 5)


@given(st.integers(1, 40), st.data())
def test_window_rows_exact(n, data):
    ds = make_ds(n)
    s = data.draw(st.integers(0, n - 1))
    L = data.draw(st.integers(1, n - s))
    np.testing.assert_array_equal(select_window(ds, s, L).returns, ds.returns[s:s + L])


def test_returns_must_exceed_minus_one():
    with pytest.raises(DataError):
        ReturnsDataset.from_array(np.array([[-1.0]]))


def test_returns_csv_round_trip(tmp_path):
    ds = make_ds(7, 3, seed=4)
    save_returns(ds, tmp_path / "r.csv")
    back = load_returns(tmp_path / "r.csv")
    np.testing.assert_array_equal(back.returns, ds.returns)
    assert back.tickers == ds.tickers and back.dates == ds.dates
