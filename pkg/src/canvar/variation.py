"""The canonical variation g_t = g + t ω⊗ω along a unit field and field classification."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import jet
from .errors import ForbiddenParameter, NonUnitField, NullField
from .geometry import (
    LORENTZIAN,
    RIEMANNIAN,
    Chart,
    CurvatureBundle,
    DifferentiationConfig,
    FieldCalculus,
    VectorFieldExpr,
    check_point,
    christoffel,
    curvature_bundle,
    evaluate_metric,
    field_calculus,
)

T_MARGIN = 1e-6
UNIT_TOL = 1e-8


@dataclass(frozen=True)
class SampleSpec:
    count: int = 20
    seed: int = 42


def one_form(base: Chart, E: VectorFieldExpr):
    """Component function of ω = g(E, ·), usable with jets."""

    def omega(x):
        g = base.metric_fn(x)
        e = E.components(x)
        n = base.dim
        return [sum(g[i][j] * e[j] for j in range(n)) for i in range(n)]

    return omega


def estimate_epsilon(base: Chart, E: VectorFieldExpr, checks: int = 8) -> int:
    """Round g(E,E) at the sample-box center, then assert it is constant."""
    c = base.center()
    g = evaluate_metric(base, c)
    e = E(c)
    val = float(e @ g @ e)
    eps = 1 if val > 0 else -1
    if abs(val - eps) > UNIT_TOL:
        raise NonUnitField(f"g(E,E) = {val:.12g} at the center of {base.name!r}")
    for p in base.sample_points(checks, seed=0):
        e = E(p)
        val = float(e @ evaluate_metric(base, p) @ e)
        if abs(val - eps) > UNIT_TOL:
            raise NonUnitField(f"g(E,E) = {val:.12g} at {p.tolist()} on {base.name!r}")
    return eps


def varied_signature(base: Chart, eps: int, t: float) -> str:
    negatives = (0 if base.signature_hint == RIEMANNIAN else 1)
    if eps < 0:
        negatives -= 1
    if eps * (1 + eps * t) < 0:
        negatives += 1
    if negatives == 0:
        return RIEMANNIAN
    if negatives == 1:
        return LORENTZIAN
    raise ForbiddenParameter(f"t = {t} would give a metric with {negatives} negative directions")


@dataclass(frozen=True, eq=False)
class VariationConfig:
    t: float
    base: Chart
    E: VectorFieldExpr

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        eps = self.epsilon
        if abs(self.t + eps) < T_MARGIN:
            raise ForbiddenParameter(f"t = {self.t} is within {T_MARGIN} of -ε = {-eps}")
        varied_signature(self.base, eps, self.t)

    @cached_property
    def epsilon(self) -> int:
        return estimate_epsilon(self.base, self.E)

    @property
    def standard(self) -> bool:
        return self.t == -2.0 * self.epsilon

    @cached_property
    def chart(self) -> Chart:
        return build_variation(self)


def build_variation(cfg: VariationConfig) -> Chart:
    base, t = cfg.base, cfg.t
    omega = one_form(base, cfg.E)
    n = base.dim

    def varied(x):
        g = base.metric_fn(x)
        w = omega(x)
        return [[g[i][j] + t * w[i] * w[j] for j in range(n)] for i in range(n)]

    metric = base.metric_fn if t == 0.0 else varied
    return Chart(
        dim=n,
        domain=base.domain,
        metric_fn=metric,
        signature_hint=varied_signature(base, cfg.epsilon, t),
        name=f"{base.name}[t={t:g}]",
        sample_box=base.sample_box,
        degeneracy_threshold=base.degeneracy_threshold,
    )


def standard_variation(base: Chart, E: VectorFieldExpr) -> VariationConfig:
    eps = estimate_epsilon(base, E)
    return VariationConfig(-2.0 * eps, base, E)


def difference_tensor_direct(cfg: VariationConfig, p: Sequence[float],
                             dcfg: DifferentiationConfig | None = None) -> np.ndarray:
    """``D[k, i, j]`` with ``D(∂_i, ∂_j) = ∇^t_{∂_i}∂_j - ∇_{∂_i}∂_j``."""
    return christoffel(cfg.chart, p, dcfg) - christoffel(cfg.base, p, dcfg)


def difference_tensor_formula(cfg: VariationConfig, p: Sequence[float], U, V, W,
                              dcfg: DifferentiationConfig | None = None,
                              fc: FieldCalculus | None = None) -> float:
    """g_t(D^t(U,V), W) from L_E g, dω and ω alone."""
    p = check_point(cfg.base, p)
    if fc is None:
        fc = field_calculus(cfg.base, cfg.E, p, dcfg)
    g = evaluate_metric(cfg.base, p)
    U, V, W = (np.asarray(a, dtype=float) for a in (U, V, W))
    w = g @ fc.E
    return 0.5 * cfg.t * (float(w @ W) * float(U @ fc.lie_g @ V)
                          + float(w @ U) * float(V @ fc.d_omega @ W)
                          + float(w @ V) * float(U @ fc.d_omega @ W))


# --------------------------------------------------------------------------
# classification


PREDICATES = ("is_unit", "is_killing", "is_closed", "is_conformal", "is_orthogonally_conformal",
              "is_geodesic", "is_parallel", "is_normal", "is_orthogonally_normal")


@dataclass
class FieldClassification:
    is_unit: float
    is_killing: float
    is_closed: float
    is_conformal: float
    is_orthogonally_conformal: float
    is_geodesic: float
    is_parallel: float
    is_normal: float
    is_orthogonally_normal: float
    rho: list[float] = field(default_factory=list)
    sample_count: int = 0
    seed: int = 0

    def residual(self, predicate: str) -> float:
        return float(getattr(self, predicate))

    def as_dict(self) -> dict[str, float]:
        return {k: self.residual(k) for k in PREDICATES}


def unit_field(chart: Chart, E: VectorFieldExpr) -> VectorFieldExpr:
    """E / sqrt|g(E,E)| as a new differentiable field."""

    def comps(x):
        g = chart.metric_fn(x)
        e = E.components(x)
        n = chart.dim
        q = sum(g[i][j] * e[i] * e[j] for i in range(n) for j in range(n))
        s = 1.0 if jet.value_of(q) > 0 else -1.0
        r = 1.0 / jet.sqrt(s * q)
        return [c * r for c in e]

    return VectorFieldExpr(chart, comps, f"{E.name}/|{E.name}|")


def _frame_matrix(bundle: CurvatureBundle, fc: FieldCalculus) -> np.ndarray:
    # M[a, b] = g(∇_{e_a} E, e_b)
    return bundle.frame @ fc.nabla_omega @ bundle.frame.T


def _endomorphism_in_frame(bundle: CurvatureBundle, fc: FieldCalculus) -> np.ndarray:
    # column b holds the frame components of A_E(e_b)
    return bundle.signs[:, None] * _frame_matrix(bundle, fc).T


def _normality_gap(Af: np.ndarray, signs: np.ndarray, block: slice | None = None) -> float:
    """max |g(AV,AV) - g(A*V,A*V)| over the frame quadratic form (optionally on a sub-block)."""
    eta = np.diag(signs)
    adj = eta @ Af.T @ eta
    if block is not None:
        # A*⊥ drops the component along the last frame vector before squaring
        P = np.eye(len(signs))
        P[-1, -1] = 0.0
        adj = P @ adj
        Q1 = (Af.T @ eta @ Af)[block, block]
        Q2 = (adj.T @ eta @ adj)[block, block]
    else:
        Q1 = Af.T @ eta @ Af
        Q2 = adj.T @ eta @ adj
    return float(np.max(np.abs(Q1 - Q2)))


def classify_point(chart: Chart, E: VectorFieldExpr, p: Sequence[float],
                   dcfg: DifferentiationConfig | None = None) -> tuple[dict[str, float], float]:
    """Normalized residual of every predicate at one point, plus the fitted conformal factor."""
    p = check_point(chart, p)
    e = E(p)
    g = evaluate_metric(chart, p)
    gee = float(e @ g @ e)
    if abs(gee) <= 1e-10 * max(1.0, float(np.abs(g).max()) * float(e @ e)):
        raise NullField(f"{E.name!r} is null at {p.tolist()}")
    bundle = curvature_bundle(chart, p, seed_field=E, cfg=dcfg)
    fc = field_calculus(chart, E, p, dcfg, bundle)
    n = chart.dim
    signs = bundle.signs
    M = _frame_matrix(bundle, fc)
    scale = 1.0 + float(np.abs(M).max())
    sym = 0.5 * (M + M.T)
    anti = 0.5 * (M - M.T)
    rho = float(np.sum(signs * np.diag(sym))) / n
    conf = sym - rho * np.diag(signs)
    perp = slice(0, n - 1)
    if n > 1:
        rho_perp = float(np.sum(signs[perp] * np.diag(sym)[perp])) / (n - 1)
        oconf = float(np.max(np.abs(sym[perp, perp] - rho_perp * np.diag(signs[perp]))))
    else:
        oconf = 0.0
    ef = bundle.to_frame(e)
    acc = bundle.to_frame(fc.accel)
    acc_perp = acc - (float(np.sum(signs * acc * ef)) / gee) * ef
    Af = _endomorphism_in_frame(bundle, fc)
    if abs(abs(gee) - 1.0) <= UNIT_TOL:
        unit_bundle, unit_fc = bundle, fc
    else:
        ue = unit_field(chart, E)
        unit_fc = field_calculus(chart, ue, p, dcfg, bundle)
        unit_bundle = bundle
    Uf = _endomorphism_in_frame(unit_bundle, unit_fc)
    uscale = (1.0 + float(np.abs(Uf).max())) ** 2
    res = {
        "is_unit": abs(abs(gee) - 1.0),
        "is_killing": float(np.abs(sym).max()) / scale,
        "is_closed": float(np.abs(anti).max()) / scale,
        "is_conformal": float(np.abs(conf).max()) / scale,
        "is_orthogonally_conformal": oconf / scale,
        "is_geodesic": float(np.abs(acc_perp).max()) / (1.0 + float(np.abs(M).max()) * float(np.abs(ef).max())),
        "is_parallel": float(np.abs(M).max()) / scale,
        "is_normal": _normality_gap(Af, signs) / scale ** 2,
        "is_orthogonally_normal": _normality_gap(Uf, signs, perp) / uscale,
    }
    return res, rho


def classify_field(chart: Chart, E: VectorFieldExpr, sample_spec: SampleSpec = SampleSpec(),
                   dcfg: DifferentiationConfig | None = None,
                   points: np.ndarray | None = None) -> FieldClassification:
    if points is None:
        points = chart.sample_points(sample_spec.count, sample_spec.seed)
    worst = {k: 0.0 for k in PREDICATES}
    rhos = []
    for p in points:
        res, rho = classify_point(chart, E, p, dcfg)
        rhos.append(rho)
        for k, v in res.items():
            worst[k] = max(worst[k], v)
    return FieldClassification(**worst, rho=rhos, sample_count=len(points), seed=sample_spec.seed)


# --------------------------------------------------------------------------
# projection of a field onto a hypersurface


def _tangent_tests(J: np.ndarray) -> list[np.ndarray]:
    cols = [J[:, a] for a in range(J.shape[1])]
    tests = list(cols)
    for a in range(len(cols)):
        for b in range(a + 1, len(cols)):
            tests.append(cols[a] + cols[b])
            tests.append(cols[a] - cols[b])
    return tests


def projection_normality_residual(chart: Chart, U: VectorFieldExpr, hypersurface, q: Sequence[float],
                                  dcfg: DifferentiationConfig | None = None) -> float:
    """Violation of the criterion for the tangential part of ``U`` to have normal endomorphism.

    For tangent X the criterion reads
    ``g(A_U X, N)^2 - g(X, A_U N)^2 = 2 g(U,N) (g(A_U X, S X) - g(A_U S X, X))``
    with S X = -∇_X N.  Returns the largest normalized two-sided gap over a
    tangent basis and its pairwise sums/differences.
    """
    from .submanifold import immersion_point, split, unit_normal_jet

    ip = immersion_point(hypersurface, q, dcfg)
    N_jet, _ = unit_normal_jet(ip)
    N, dN = split(N_jet, ip.nparams)
    nabla_N = ip.covariant(N, dN)
    fc = field_calculus(chart, U, ip.x, dcfg, ip.bundle)
    A, b = fc.A_E, ip.bundle
    u = fc.E
    worst = 0.0
    for X in _tangent_tests(ip.J):
        c = np.linalg.lstsq(ip.J, X, rcond=None)[0]
        SX = -(nabla_N @ c)
        AX = A @ X
        terms = [b.inner(AX, N) ** 2, b.inner(X, A @ N) ** 2,
                 2 * b.inner(u, N) * b.inner(AX, SX), 2 * b.inner(u, N) * b.inner(A @ SX, X)]
        gap = terms[0] - terms[1] - terms[2] + terms[3]
        worst = max(worst, abs(gap) / (1.0 + max(abs(t) for t in terms)))
    return worst


def projected_normality_gap(chart: Chart, U: VectorFieldExpr, hypersurface, q: Sequence[float],
                            dcfg: DifferentiationConfig | None = None) -> float:
    """Direct check: normality defect of A_V for V the tangential part of ``U``.

    A_V(X) = tan(∇_X V) is assembled in the tangent basis and compared with its
    adjoint for the induced metric.
    """
    from .submanifold import bilinear, immersion_point, split, unit_normal_jet

    ip = immersion_point(hypersurface, q, dcfg)
    N_jet, delta = unit_normal_jet(ip)
    U_jet = ip.field_jet(U)
    gUN = bilinear(ip.g_jet, U_jet, N_jet)
    V_jet = [U_jet[i] - delta * gUN * N_jet[i] for i in range(len(U_jet))]
    V, dV = split(V_jet, ip.nparams)
    N = split(N_jet, ip.nparams)[0]
    g = ip.bundle.g
    nabla_V = ip.covariant(V, dV)
    tangential = nabla_V - delta * np.outer(N, N @ g @ nabla_V)
    Amat = np.linalg.lstsq(ip.J, tangential, rcond=None)[0]
    h = ip.J.T @ g @ ip.J
    adj = np.linalg.solve(h, Amat.T @ h)
    Q1 = Amat.T @ h @ Amat
    Q2 = adj.T @ h @ adj
    return float(np.abs(Q1 - Q2).max()) / (1.0 + float(np.abs(Q1).max()) + float(np.abs(Q2).max()))
