import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from canvar.jet import Jet, atan, cos, cosh, exp, log, sin, sinh, sqrt, tan, tanh, unpack, value_of

coords = st.floats(-1.5, 1.5, allow_nan=False)


def _fd(f, p, h=1e-5):
    """Central-difference gradient and Hessian, for comparison only."""
    p = np.asarray(p, dtype=float)
    n = len(p)
    g = np.zeros(n)
    H = np.zeros((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        g[i] = (f(p + e) - f(p - e)) / (2 * h)
        for j in range(n):
            e2 = np.zeros(n)
            e2[j] = h
            H[i, j] = (f(p + e + e2) - f(p + e - e2) - f(p - e + e2) + f(p - e - e2)) / (4 * h * h)
    return g, H


def _expr(x):
    a, b = x[0], x[1]
    return sin(a * b) + exp(0.3 * a) / (2 + cos(b)) + sqrt(3 + a * a) * atan(b) - tanh(a - b) ** 3 + log(4 + sinh(a) * cosh(b) / 5)


def test_known_derivatives():
    x, y = Jet.variables([0.7, -0.4])
    f = x * x * y + exp(y)
    assert f.v == pytest.approx(0.49 * -0.4 + math.exp(-0.4))
    np.testing.assert_allclose(f.d, [2 * 0.7 * -0.4, 0.49 + math.exp(-0.4)], rtol=1e-15)
    np.testing.assert_allclose(f.dd, [[2 * -0.4, 2 * 0.7], [2 * 0.7, math.exp(-0.4)]], rtol=1e-15)


def test_division_and_powers():
    (x,) = Jet.variables([2.0])
    f = 1.0 / x + x ** 3 + x ** 0.5 + 2.0 ** x
    assert f.d[0] == pytest.approx(-0.25 + 12 + 0.5 / math.sqrt(2) + math.log(2) * 4, rel=1e-14)
    assert f.dd[0, 0] == pytest.approx(2 / 8 + 12 - 0.25 * 2 ** -1.5 + math.log(2) ** 2 * 4, rel=1e-14)


@given(coords, coords)
def test_matches_finite_differences(a, b):
    jet = _expr(Jet.variables([a, b]))
    g, H = _fd(lambda p: _expr(list(p)), [a, b])
    np.testing.assert_allclose(jet.d, g, atol=1e-7)
    np.testing.assert_allclose(jet.dd, H, atol=2e-4)
    np.testing.assert_allclose(jet.dd, jet.dd.T, atol=1e-13)


@given(coords, coords)
def test_value_consistent_across_backends(a, b):
    jv = _expr(Jet.variables([a, b])).v
    fv = _expr([a, b])
    with mpmath.workdps(40):
        mv = _expr([mpmath.mpf(a), mpmath.mpf(b)])
    assert jv == pytest.approx(fv, rel=1e-14, abs=1e-14)
    assert float(mv) == pytest.approx(fv, rel=1e-13, abs=1e-13)


def test_mp_dispatch_keeps_precision():
    with mpmath.workdps(60):
        v = exp(mpmath.mpf(1)) - mpmath.e
        assert isinstance(v, mpmath.mpf)
        assert abs(v) < mpmath.mpf(10) ** -55


def test_numpy_dispatch():
    out = sin(np.array([0.0, math.pi / 2]))
    np.testing.assert_allclose(out, [0.0, 1.0], atol=1e-15)


def test_first_order_jets():
    x, y = Jet.variables([0.3, 0.2], order=1)
    f = tan(x * y)
    assert f.dd is None
    sec2 = 1 + math.tan(0.06) ** 2
    np.testing.assert_allclose(f.d, [0.2 * sec2, 0.3 * sec2], rtol=1e-14)


def test_unpack_layout():
    x, y = Jet.variables([1.0, 2.0])
    v, d, dd = unpack([[x * y, 3.0], [y, x]], 2)
    assert v.shape == (2, 2) and d.shape == (2, 2, 2) and dd.shape == (2, 2, 2, 2)
    np.testing.assert_allclose(d[0, 0], [2.0, 1.0])
    assert np.all(d[0, 1] == 0)
    np.testing.assert_allclose(dd[0, 0], [[0, 1], [1, 0]])


def test_unpack_rejects_first_order_when_second_needed():
    (x,) = Jet.variables([1.0], order=1)
    with pytest.raises(ValueError):
        unpack([x], 1, order=2)


def test_comparisons_use_values():
    (x,) = Jet.variables([1.0])
    assert x > 0.5 and x < 2 and value_of(x) == 1.0 and value_of(3.0) == 3.0
