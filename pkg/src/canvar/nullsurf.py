"""Lightlike hypersurfaces of a Lorentzian chart and their image under the standard variation.

Given a timelike unit field E, the null generator ξ is the radical direction
of the induced metric scaled so that g(E, ξ) = 1/√2, the screen is
TM̄ ∩ E^⊥ and N = √2E + ξ.  Under g_R = g + 2 ω⊗ω the hypersurface becomes
Riemannian with unit normal N, and its second fundamental form can be
compared with closed expressions in B, τ and E.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateMetric, NotLightlike, WrongRank
from .geometry import (
    FORWARD,
    LORENTZIAN,
    Chart,
    DifferentiationConfig,
    ImmersionSpec,
    VectorFieldExpr,
    field_calculus,
)
from .jet import cos, cosh, sin, sinh, value_of
from .submanifold import ImmersionPoint, adjugate, bilinear, immersion_point, split, unit_normal_jet
from .variation import VariationConfig, estimate_epsilon

SQRT2 = math.sqrt(2.0)
RADICAL_TOL = 1e-8
RANK_TOL = 1e-6


@dataclass
class NullStructure:
    q: np.ndarray
    x: np.ndarray
    tangent: np.ndarray
    E: np.ndarray
    xi: np.ndarray
    screen: list[np.ndarray]
    N: np.ndarray
    X0: np.ndarray
    ip: ImmersionPoint = field(repr=False)
    xi_jet: list = field(repr=False)
    E_jet: list = field(repr=False)

    @property
    def g(self) -> np.ndarray:
        return self.ip.bundle.g

    def to_params(self, U: np.ndarray) -> np.ndarray:
        """Coordinates of a tangent vector in the parameter basis."""
        u, *_ = np.linalg.lstsq(self.tangent, U, rcond=None)
        return u

    def invariants(self) -> dict[str, float]:
        g = self.g
        ip = lambda u, v: float(u @ g @ v)
        out = {
            "xi_null": abs(ip(self.xi, self.xi)),
            "E_xi": abs(ip(self.E, self.xi) - 1 / SQRT2),
            "N_null": abs(ip(self.N, self.N)),
            "N_screen": max([abs(ip(self.N, s)) for s in self.screen], default=0.0),
            "xi_split": float(np.abs(self.xi - (-self.E / SQRT2 + self.X0)).max()),
            "N_split": float(np.abs(self.N - (self.E / SQRT2 + self.X0)).max()),
            "xi_radical": float(np.abs(self.tangent.T @ g @ self.xi).max()),
        }
        return out


def _induced_jets(ip: ImmersionPoint) -> list[list]:
    T, g = ip.T_jet, ip.g_jet
    n, m = len(T), len(T[0])
    col = lambda a: [T[i][a] for i in range(n)]
    return [[bilinear(g, col(a), col(b)) for b in range(m)] for a in range(m)]


def build_null_structure(chart: Chart, E: VectorFieldExpr, immersion: ImmersionSpec, q: Sequence[float],
                         dcfg: DifferentiationConfig = FORWARD) -> NullStructure:
    if chart.signature_hint != LORENTZIAN:
        raise DegenerateMetric("lightlike hypersurfaces need a Lorentzian chart")
    ip = immersion_point(immersion, q, dcfg)
    h = ip.J.T @ ip.bundle.g @ ip.J
    sv = np.linalg.svd(h, compute_uv=False)
    scale = max(1.0, float(sv[0]))
    if sv[-1] > RADICAL_TOL * scale:
        raise NotLightlike(f"induced metric is nondegenerate (smallest singular value {sv[-1]:.3e})")
    if len(sv) > 1 and sv[-2] < RANK_TOL * scale:
        raise WrongRank(f"induced metric has a radical of dimension ≥ 2 (singular values {sv.tolist()})")
    m = ip.nparams
    n = len(ip.x)
    hj = _induced_jets(ip)
    # columns of adj(h) span the radical wherever rank h = m - 1; pick the best-conditioned one
    adj = adjugate(hj) if m > 1 else [[1.0]]
    vals = np.array([[_value(c) for c in row] for row in adj])
    j = int(np.argmax(np.linalg.norm(vals, axis=0)))
    k = [adj[a][j] for a in range(m)]
    T = ip.T_jet
    raw = [sum(T[i][a] * k[a] for a in range(m)) for i in range(n)]
    E_jet = ip.field_jet(E)
    c = bilinear(ip.g_jet, E_jet, raw)
    if abs(_value(c)) < 1e-14 * max(1.0, float(np.abs(vals).max())):
        raise NotLightlike("null direction is orthogonal to E")
    factor = 1.0 / (SQRT2 * c)
    xi_jet = [r * factor for r in raw]
    xi, _ = split(xi_jet, m)
    Ev = np.array([_value(e) for e in E_jet])
    g = ip.bundle.g
    # screen: tangent directions orthogonal to E, orthonormalized in the induced metric
    w = Ev @ g @ ip.J
    _, _, Vt = np.linalg.svd(w.reshape(1, -1))
    screen = []
    for row in Vt[1:]:
        s = ip.J @ row
        for e in screen:
            s = s - float(e @ g @ s) * e
        screen.append(s / math.sqrt(float(s @ g @ s)))
    N = SQRT2 * Ev + xi
    X0 = xi + Ev / SQRT2
    return NullStructure(np.asarray(q, dtype=float), ip.x, ip.J, Ev, xi, screen, N, X0, ip, xi_jet, E_jet)


def _value(c) -> float:
    return float(value_of(c))


@dataclass
class NullForms:
    B: np.ndarray
    tau_xi: float
    H_L: float
    A_star: np.ndarray
    residuals: dict[str, float]


def null_fundamental_forms(st: NullStructure, chart: Chart, E: VectorFieldExpr,
                           dcfg: DifferentiationConfig = FORWARD) -> NullForms:
    """B on the parameter basis, τ(ξ), H_L and the shape operator on the screen."""
    ip, g = st.ip, st.g
    m = ip.nparams
    xi_v, xi_d = split(st.xi_jet, m)
    Dxi = ip.covariant(xi_v, xi_d)
    B = -(Dxi.T @ g @ st.tangent)
    fc = field_calculus(chart, E, st.x, dcfg, ip.bundle)
    tau = SQRT2 * float((fc.A_E @ st.xi) @ g @ st.xi)
    u_xi = st.to_params(st.xi)
    us = [st.to_params(s) for s in st.screen]
    H_L = float(sum(u @ B @ u for u in us))
    # ∇_U ξ = -τ(U) ξ - A*(U): screen part of -∇_U ξ
    A_star = np.array([[-float((Dxi @ ua) @ g @ sb) for ua in us] for sb in st.screen]) if us else np.zeros((0, 0))
    nabla_xi_xi = Dxi @ u_xi
    tau_alt = -float(nabla_xi_xi @ g @ st.N)
    scale = 1.0 + float(np.abs(B).max())
    residuals = {
        "B_symmetric": float(np.abs(B - B.T).max()) / scale,
        "B_radical": float(np.abs(B @ u_xi).max()) / scale,
        "xi_pregeodesic": float(np.abs(nabla_xi_xi + tau * st.xi).max()) / (1.0 + abs(tau)),
        "tau_transversal": abs(tau - tau_alt) / (1.0 + abs(tau)),
    }
    return NullForms(B, tau, H_L, A_star, residuals)


@dataclass
class VariationForms:
    II_screen: np.ndarray
    II_screen_xi: np.ndarray
    II_xi_xi: float
    H_R: float
    H_R_formula: float
    div_R_xi: float
    residuals: dict[str, float]


def variation_fundamental_forms(st: NullStructure, chart: Chart, E: VectorFieldExpr, immersion: ImmersionSpec,
                                dcfg: DifferentiationConfig = FORWARD,
                                forms: NullForms | None = None) -> VariationForms:
    """Second fundamental form of the hypersurface in the standard variation g_R, two routes."""
    eps = estimate_epsilon(chart, E)
    vcfg = VariationConfig(-2.0 * eps, chart, E)
    vimm = ImmersionSpec(vcfg.chart, immersion.map, immersion.param_box, immersion.name)
    ipR = immersion_point(vimm, st.q, dcfg)
    gR, gL = ipR.bundle.g, st.g
    m = ipR.nparams
    forms = forms or null_fundamental_forms(st, chart, E, dcfg)
    # route 1: N = √2 E + ξ carried as jets
    N_jet = [SQRT2 * e + x for e, x in zip(st.E_jet, st.xi_jet)]
    N_v, N_d = split(N_jet, m)
    II = -(ipR.covariant(N_v, N_d).T @ gR @ st.tangent)
    # route 2: the metric unit normal of the varied chart, built from cofactors
    Nn_jet, delta = unit_normal_jet(ipR)
    Nn_v, Nn_d = split(Nn_jet, m)
    sgn = 1.0 if float(Nn_v @ gR @ N_v) > 0 else -1.0
    II2 = -sgn * (ipR.covariant(Nn_v, Nn_d).T @ gR @ st.tangent)

    us = [st.to_params(s) for s in st.screen]
    u_xi = st.to_params(st.xi)
    fc = field_calculus(chart, E, st.x, dcfg, st.ip.bundle)
    A, lie = fc.A_E, fc.lie_g
    II_s = np.array([[ua @ II @ ub for ub in us] for ua in us]) if us else np.zeros((0, 0))
    II_sx = np.array([ua @ II @ u_xi for ua in us])
    II_xx = float(u_xi @ II @ u_xi)
    B = forms.B
    cf_s = np.array([[ua @ B @ ub - float(sa @ lie @ sb) / SQRT2 for ub, sb in zip(us, st.screen)]
                     for ua, sa in zip(us, st.screen)]) if us else np.zeros((0, 0))
    cf_sx = np.array([-float((A @ (st.E + SQRT2 * st.xi)) @ gL @ s) for s in st.screen])
    cf_xx = -(2 * float(st.xi @ gL @ fc.accel) + forms.tau_xi)
    H_R = float(np.trace(II_s)) + II_xx
    H_R_formula = forms.H_L - SQRT2 * fc.div + forms.tau_xi
    # divergence of ξ along the hypersurface in g_R, over the g_R-orthonormal basis {screen, ξ}
    xi_v, xi_d = split(st.xi_jet, m)
    DxiR = ipR.covariant(xi_v, xi_d)
    basis = us + [u_xi]
    div_R_xi = float(sum((DxiR @ u) @ gR @ (st.tangent @ u) for u in basis))
    frame = np.array([st.tangent @ u for u in basis])
    gram = frame @ gR @ frame.T

    def r(a, b):
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        if a.size == 0:
            return 0.0
        return float(np.abs(a - b).max()) / (1.0 + max(float(np.abs(a).max()), float(np.abs(b).max())))

    residuals = {
        "normal_routes": r(N_v, sgn * Nn_v),
        "II_routes": r(II, II2),
        "II_symmetric": r(II, II.T),
        "II_screen": r(II_s, cf_s),
        "II_screen_xi": r(II_sx, cf_sx),
        "II_xi_xi": r(II_xx, cf_xx),
        "H_R": r(H_R, H_R_formula),
        "div_R_xi": r(div_R_xi, -forms.H_L),
        "basis_orthonormal": r(gram, np.eye(len(basis))),
        "N_unit": abs(float(N_v @ gR @ N_v) - 1.0),
    }
    return VariationForms(II_s, II_sx, II_xx, H_R, H_R_formula, div_R_xi, residuals)


# --------------------------------------------------------------------------
# shipped examples


@dataclass(frozen=True)
class NullExample:
    id: str
    chart: Chart
    E: VectorFieldExpr
    immersion: ImmersionSpec
    description: str
    lightlike: bool = True

    def sample_params(self, count: int, seed: int) -> np.ndarray:
        box = np.asarray(self.immersion.param_box, dtype=float)
        pad = 0.05 * (box[:, 1] - box[:, 0])
        lo, hi = box[:, 0] + pad, box[:, 1] - pad
        rng = np.random.default_rng(seed)
        return lo + (hi - lo) * rng.random((count, len(box)))


def _minkowski_chart(n: int, name: str) -> Chart:
    diag = [-1.0] + [1.0] * (n - 1)
    rows = [[diag[i] if i == j else 0.0 for j in range(n)] for i in range(n)]
    return Chart(n, ((-10.0, 10.0),) * n, lambda x: rows, LORENTZIAN, name)


def _static(n: int, chart: Chart) -> VectorFieldExpr:
    return VectorFieldExpr(chart, lambda x: [1.0] + [0.0] * (n - 1), "E")


def _tilted(chart: Chart) -> VectorFieldExpr:
    """A non-geodesic, non-Killing, non-closed unit timelike field on 3d Minkowski space."""

    def comps(x):
        a = 0.3 * sin(x[1]) + 0.4 * cos(0.7 * x[2] + 0.3 * x[0])
        b = 0.4 * cos(x[2] + 0.5 * x[0])
        return [cosh(a), sinh(a) * cos(b), sinh(a) * sin(b)]

    return VectorFieldExpr(chart, comps, "E_tilted")


def _examples() -> dict[str, NullExample]:
    m3 = _minkowski_chart(3, "minkowski_3")
    m4 = _minkowski_chart(4, "minkowski_4")
    plane = ImmersionSpec(m3, lambda q: [q[0], q[0], q[1]], ((-2.0, 2.0), (-2.0, 2.0)), "null_plane")
    cone3 = ImmersionSpec(m3, lambda q: [q[0], q[0] * cos(q[1]), q[0] * sin(q[1])], ((0.5, 3.0), (-3.0, 3.0)),
                          "light_cone")
    cone4 = ImmersionSpec(
        m4, lambda q: [q[0], q[0] * sin(q[1]) * cos(q[2]), q[0] * sin(q[1]) * sin(q[2]), q[0] * cos(q[1])],
        ((0.5, 3.0), (0.3, 2.8), (-3.0, 3.0)), "light_cone")
    spacelike = ImmersionSpec(m3, lambda q: [0.2 * q[0], q[0], q[1]], ((-2.0, 2.0), (-2.0, 2.0)), "spacelike_plane")
    items = [
        NullExample("minkowski_hyperplane", m3, _static(3, m3), plane, "null plane t = x in R^3_1, E = ∂t"),
        NullExample("light_cone_3", m3, _static(3, m3), cone3, "future light cone in R^3_1, E = ∂t"),
        NullExample("light_cone_4", m4, _static(4, m4), cone4, "future light cone in R^4_1, E = ∂t"),
        NullExample("minkowski_hyperplane_tilted", m3, _tilted(m3), plane, "null plane t = x, non-parallel unit E"),
        NullExample("light_cone_3_tilted", m3, _tilted(m3), cone3, "future light cone in R^3_1, non-parallel unit E"),
        NullExample("spacelike_plane", m3, _static(3, m3), spacelike, "spacelike plane (not lightlike)", False),
    ]
    return {e.id: e for e in items}


NULL_EXAMPLES = _examples()


def get_example(id: str) -> NullExample:
    from .errors import UnknownManifold

    try:
        return NULL_EXAMPLES[id]
    except KeyError:
        raise UnknownManifold(f"unknown lightlike example {id!r}; known: {sorted(NULL_EXAMPLES)}") from None


@dataclass
class NullReport:
    example: str
    q: list[float]
    H_L: float
    tau_xi: float
    H_R: float
    B_max: float
    residuals: dict[str, float]


def analyze(example: NullExample, q: Sequence[float], dcfg: DifferentiationConfig = FORWARD) -> NullReport:
    st = build_null_structure(example.chart, example.E, example.immersion, q, dcfg)
    forms = null_fundamental_forms(st, example.chart, example.E, dcfg)
    var = variation_fundamental_forms(st, example.chart, example.E, example.immersion, dcfg, forms)
    res = dict(st.invariants())
    res.update(forms.residuals)
    res.update(var.residuals)
    return NullReport(example.id, [float(c) for c in q], forms.H_L, forms.tau_xi, var.H_R,
                      float(np.abs(forms.B).max()), res)
