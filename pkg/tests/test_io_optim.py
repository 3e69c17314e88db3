import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import rosen

from egokit import csvio
from egokit.optim import nelder_mead_multistart


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips(v):
    assert float(csvio.fmt(v)) == v


def test_table_round_trip(tmp_path):
    data = np.random.default_rng(1).normal(size=(5, 3)) * 1e5
    csvio.write_table(tmp_path / "t.csv", ["a", "b", "c"], data)
    header, back = csvio.read_table(tmp_path / "t.csv")
    assert header == ["a", "b", "c"]
    assert np.array_equal(back, data)


def test_bad_cell_names_row_and_column(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("x1,y\n1.0,2.0\n3.0,abc\n")
    with pytest.raises(csvio.CsvFormatError, match=r"row 3, column 'y'"):
        csvio.read_table(p)


def test_ragged_row(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("x1,y\n1.0\n")
    with pytest.raises(csvio.CsvFormatError, match="row 2"):
        csvio.read_table(p)


def test_atomic_write_leaves_no_temporaries(tmp_path):
    p = tmp_path / "s.json"
    csvio.write_json(p, {"a": 1})
    csvio.write_json(p, {"a": 2})
    assert csvio.read_json(p) == {"a": 2}
    assert os.listdir(tmp_path) == ["s.json"]


def test_quadratic_minimum():
    res = nelder_mead_multistart(lambda X: ((X - 0.3) ** 2).sum(axis=1), np.array([[0.9, 0.9, 0.1]]), 0.0, 1.0, 3000, xatol=1e-9, fatol=1e-15)
    assert np.allclose(res.x[0], 0.3, atol=1e-6)
    assert res.fun[0] <= res.f0[0]


def test_rosenbrock():
    res = nelder_mead_multistart(
        lambda X: np.array([rosen(x) for x in X]), np.array([[-1.2, 1.0], [0.0, 0.0]]), -5, 5, 4000, xatol=1e-8, fatol=1e-14
    )
    assert np.allclose(res.x, 1.0, atol=1e-4)


def test_bound_active_solution():
    res = nelder_mead_multistart(lambda X: X.sum(axis=1), np.array([[0.5, 0.5]]), 0.0, 1.0, 2000, xatol=1e-10, fatol=1e-14)
    assert np.allclose(res.x[0], 0.0, atol=1e-8)


def test_budget_respected():
    res = nelder_mead_multistart(lambda X: np.sin(30 * X).sum(axis=1), np.random.default_rng(0).random((6, 3)), 0, 1, 50)
    assert np.all(res.nfev <= 50 + 3)
