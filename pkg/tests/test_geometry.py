import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from canvar import jet
from canvar.catalog import get_entry
from canvar.errors import DegenerateMetric, DegeneratePlane, NullSeedField, PointOutsideDomain, SignatureMismatch
from canvar.geometry import (
    LORENTZIAN, RIEMANNIAN, Chart, DifferentiationConfig, ScalarFieldExpr, VectorFieldExpr, christoffel,
    curvature_bundle, evaluate_metric, field_calculus, lightlike_sectional, orthonormal_frame,
    scalar_field_calculus, sectional,
)

FD = DifferentiationConfig(mode="finite_difference")
JET_FUNCS = {name: getattr(jet, name) for name in ("sin", "cos", "exp", "sqrt", "cosh", "sinh", "tanh", "log")}


# --- symbolic oracle -------------------------------------------------------

def symbolic_curvature(g, xs):
    """Christoffels, Riemann (R^l_{ijk}) and scalar curvature computed in sympy."""
    n = len(xs)
    ginv = g.inv()
    Gam = [[[(sum(ginv[k, m] * (sp.diff(g[m, i], xs[j]) + sp.diff(g[m, j], xs[i])
                                           - sp.diff(g[i, j], xs[m])) for m in range(n)) / 2)
             for j in range(n)] for i in range(n)] for k in range(n)]
    R = [[[[sp.diff(Gam[l][j][k], xs[i]) - sp.diff(Gam[l][i][k], xs[j])
            + sum(Gam[l][i][m] * Gam[m][j][k] - Gam[l][j][m] * Gam[m][i][k] for m in range(n))
            for k in range(n)] for j in range(n)] for i in range(n)] for l in range(n)]
    ric = [[sum(R[l][l][j][k] for l in range(n)) for k in range(n)] for j in range(n)]
    scal = sum(ginv[j, k] * ric[j][k] for j in range(n) for k in range(n))
    return Gam, R, scal


def _lambdified(g, xs):
    f = sp.lambdify([xs], g.tolist(), modules=[JET_FUNCS, "math"])
    return lambda x: f(list(x))


SYM = {}


def _oracle(name):
    if name in SYM:
        return SYM[name]
    x, y, z = xs = sp.symbols("x y z")
    if name == "coupled":
        # non-diagonal Riemannian metric with no symmetry
        g = sp.Matrix([[2 + sp.sin(y), sp.Rational(1, 3) * sp.cos(x * z), 0],
                       [sp.Rational(1, 3) * sp.cos(x * z), sp.exp(x / 2), sp.Rational(1, 4) * y],
                       [0, sp.Rational(1, 4) * y, 3 + x * x]])
        chart = Chart(3, ((-1, 1),) * 3, _lambdified(g, xs), RIEMANNIAN, name)
    else:
        # Lorentzian, off-diagonal time coupling
        g = sp.Matrix([[-1 - x * x / 4, sp.Rational(1, 5) * sp.sin(y), 0],
                       [sp.Rational(1, 5) * sp.sin(y), sp.cosh(x), sp.Rational(1, 7) * z],
                       [0, sp.Rational(1, 7) * z, 1 + sp.exp(-y)]])
        chart = Chart(3, ((-1, 1),) * 3, _lambdified(g, xs), LORENTZIAN, name)
    SYM[name] = (chart, xs, symbolic_curvature(g, xs))
    return SYM[name]


@pytest.mark.parametrize("name", ["coupled", "lorentz"])
@pytest.mark.parametrize("p", [(0.2, -0.3, 0.5), (-0.6, 0.4, -0.1)])
def test_curvature_matches_symbolic(name, p):
    chart, xs, (Gam, R, scal) = _oracle(name)
    sub = dict(zip(xs, p))
    b = curvature_bundle(chart, p)
    G = np.array([[[float(Gam[k][i][j].subs(sub)) for j in range(3)] for i in range(3)] for k in range(3)])
    Rn = np.array([[[[float(R[l][i][j][k].subs(sub)) for k in range(3)] for j in range(3)] for i in range(3)]
                   for l in range(3)])
    np.testing.assert_allclose(b.Gamma, G, atol=1e-13)
    np.testing.assert_allclose(b.Riemann, Rn, atol=1e-12)
    assert b.scalar == pytest.approx(float(scal.subs(sub)), abs=1e-11)


@pytest.mark.parametrize("name", ["coupled", "lorentz"])
def test_finite_difference_mode_agrees(name):
    chart, _, _ = _oracle(name)
    p = (0.1, 0.2, -0.3)
    a, b = curvature_bundle(chart, p), curvature_bundle(chart, p, cfg=FD)
    np.testing.assert_allclose(b.Gamma, a.Gamma, atol=1e-8)
    np.testing.assert_allclose(b.Riemann, a.Riemann, atol=1e-4)


# --- closed forms ----------------------------------------------------------

def test_hyperbolic_plane_christoffels():
    chart = get_entry("hyperbolic_2").chart
    x, y = 0.4, -0.7
    G = christoffel(chart, (x, y))
    expected = np.zeros((2, 2, 2))
    expected[0, 1, 1] = -math.exp(2 * x)
    expected[1, 0, 1] = expected[1, 1, 0] = 1.0
    np.testing.assert_allclose(G, expected, atol=1e-14)


def test_sphere_and_hyperbolic_space():
    s2 = curvature_bundle(get_entry("round_s2").chart, (1.0, 0.5))
    assert s2.scalar == pytest.approx(2.0, abs=1e-12)
    h3 = curvature_bundle(get_entry("hyperbolic_3").chart, (0.3, -0.2, 0.9))
    np.testing.assert_allclose(h3.Ricci, -2 * h3.g, atol=1e-12)
    assert h3.scalar == pytest.approx(-6.0, abs=1e-12)


@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6))
def test_sectional_basis_invariant(c):
    b = curvature_bundle(get_entry("hyperbolic_3").chart, (0.1, 0.2, 0.3))
    u, v = np.array(c[:3]), np.array(c[3:])
    if abs(b.norm2(u) * b.norm2(v) - b.inner(u, v) ** 2) < 1e-3:
        return
    k = sectional(b, u, v)
    assert k == pytest.approx(-1.0, abs=1e-10)
    assert sectional(b, 2 * u + v, u - 3 * v) == pytest.approx(k, abs=1e-10)


def test_curvature_symmetries():
    chart, _, _ = _oracle("coupled")
    Rm = curvature_bundle(chart, (0.3, 0.1, -0.4)).riemann_lowered()
    np.testing.assert_allclose(Rm, -np.swapaxes(Rm, 0, 1), atol=1e-12)
    np.testing.assert_allclose(Rm, -np.swapaxes(Rm, 2, 3), atol=1e-12)
    np.testing.assert_allclose(Rm, np.transpose(Rm, (2, 3, 0, 1)), atol=1e-12)
    bianchi = Rm + np.transpose(Rm, (1, 2, 0, 3)) + np.transpose(Rm, (2, 0, 1, 3))
    assert np.abs(bianchi).max() < 1e-12


# --- frames ----------------------------------------------------------------

spd_entries = st.lists(st.floats(-1, 1), min_size=9, max_size=9)


@given(spd_entries, st.booleans())
def test_orthonormal_frame(entries, lorentz):
    M = np.array(entries).reshape(3, 3)
    g = M @ M.T + 0.5 * np.eye(3)
    if lorentz:
        g[0, 0] -= 10.0
    frame, signs = orthonormal_frame(g)
    np.testing.assert_allclose(frame @ g @ frame.T, np.diag(signs), atol=1e-10)
    assert int(np.sum(signs < 0)) == int(np.sum(np.linalg.eigvalsh(g) < 0))


@given(spd_entries, st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_seeded_frame_ends_with_seed(entries, seed):
    M = np.array(entries).reshape(3, 3)
    g = M @ M.T + 0.5 * np.eye(3)
    s = np.array(seed)
    if s @ g @ s < 1e-3:
        return
    frame, signs = orthonormal_frame(g, s)
    np.testing.assert_allclose(frame[-1], s / math.sqrt(s @ g @ s), atol=1e-10)
    np.testing.assert_allclose(frame @ g @ frame.T, np.diag(signs), atol=1e-10)


# --- fields ----------------------------------------------------------------

def test_field_calculus_on_hyperbolic():
    e = get_entry("hyperbolic_3")
    p = (0.2, 0.5, -0.4)
    fc = field_calculus(e.chart, e.field("E1").expr, p)
    assert fc.div == pytest.approx(2.0, abs=1e-13)
    np.testing.assert_allclose(fc.accel, 0, atol=1e-14)
    np.testing.assert_allclose(fc.d_omega, 0, atol=1e-14)
    fc2 = field_calculus(e.chart, e.field("E2").expr, p)
    # E2 = e^{-x} d_z: acceleration -d_x direction of unit length
    b = curvature_bundle(e.chart, p)
    assert b.norm2(fc2.accel) == pytest.approx(1.0, abs=1e-13)


def test_scalar_laplacian_against_closed_form():
    chart = get_entry("hyperbolic_2").chart
    f = ScalarFieldExpr(chart, lambda x: x[0] * x[0] + jet.sin(x[1]), "f")
    x, y = 0.3, 0.8
    sc = scalar_field_calculus(chart, f, (x, y))
    # Δf = f_xx + f_x (1) + e^{-2x} f_yy on dx^2 + e^{2x} dy^2
    assert sc.laplacian == pytest.approx(2 + 2 * x - math.exp(-2 * x) * math.sin(y), abs=1e-12)


def test_lightlike_sectional_on_de_sitter_cap():
    chart = get_entry("hyperbolic_3").variation(-2.0, "E1").chart
    b = curvature_bundle(chart, (0.1, 0.2, 0.3))
    E = np.array([1.0, 0.0, 0.0])
    x = np.array([0.0, 0.0, 1.0]) / math.exp(0.1)
    u = E + np.array([0.0, 1.0, 0.0]) / math.exp(0.1)
    assert abs(b.norm2(u)) < 1e-12
    # constant curvature +1: g(R(u,x)x,u) = g(u,u)g(x,x) - g(u,x)^2 = 0
    assert lightlike_sectional(b, u, x, E) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DegeneratePlane):
        sectional(b, u, x)


def test_errors():
    chart = get_entry("round_s2").chart
    with pytest.raises(PointOutsideDomain):
        evaluate_metric(chart, (0.0, 0.0))
    with pytest.raises(PointOutsideDomain):
        evaluate_metric(chart, (1.0,))
    bad = Chart(2, ((-1, 1), (-1, 1)), lambda x: [[1.0, 0.0], [0.0, x[0] * 0.0]], RIEMANNIAN, "flat0")
    with pytest.raises(DegenerateMetric):
        evaluate_metric(bad, (0.1, 0.1))
    wrong = Chart(2, ((-1, 1), (-1, 1)), lambda x: [[-1.0, 0.0], [0.0, 1.0]], RIEMANNIAN, "wrong")
    with pytest.raises(SignatureMismatch):
        evaluate_metric(wrong, (0.1, 0.1))
    mink = get_entry("minkowski_3").chart
    null = VectorFieldExpr(mink, lambda x: [1.0, 1.0, 0.0], "null")
    with pytest.raises(NullSeedField):
        curvature_bundle(mink, (0.0, 0.0, 0.0), seed_field=null)
    with pytest.raises(ValueError):
        DifferentiationConfig(mode="symbolic")
