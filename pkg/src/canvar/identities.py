"""Registry of pointwise curvature identities for the canonical variation, and the sweep runner.

Each identity is a residual function evaluated on a :class:`PointContext`
(one catalog field, one parameter value t, one sample point) plus a random
generator for auxiliary vectors.  Hypotheses are expressed as guard names;
a cell whose guards fail is reported as skipped, never as failed.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .catalog import CatalogEntry, FieldInfo, resolve, targets
from .errors import ForbiddenParameter, GeometryError, UnknownIdentity
from .geometry import (
    FORWARD,
    RIEMANNIAN,
    CurvatureBundle,
    DifferentiationConfig,
    FieldCalculus,
    ScalarFieldExpr,
    VectorFieldExpr,
    covariant_derivative_full,
    curvature_bundle,
    field_calculus,
    lightlike_sectional,
    scalar_field_calculus,
    sectional,
)
from .jet import log
from .variation import T_MARGIN, SampleSpec, VariationConfig, classify_field, estimate_epsilon

EQUALITY = "equality"
INEQUALITY = "inequality"
SQRT2 = math.sqrt(2.0)


def rel(lhs, rhs, *terms) -> float:
    """|lhs - rhs| / (1 + largest magnitude involved)."""
    lhs, rhs = np.asarray(lhs, dtype=float), np.asarray(rhs, dtype=float)
    scale = max([float(np.abs(lhs).max()), float(np.abs(rhs).max())]
                + [float(np.abs(np.asarray(x, dtype=float)).max()) for x in terms])
    return float(np.abs(lhs - rhs).max()) / (1.0 + scale)


def violation(small, large, *terms) -> float:
    """Normalized amount by which ``small <= large`` fails (0 when it holds)."""
    scale = max([abs(small), abs(large)] + [abs(x) for x in terms])
    return max(0.0, small - large) / (1.0 + scale)


# --------------------------------------------------------------------------
# per-point context


class PointContext:
    """Everything an identity may need at one point, computed lazily."""

    def __init__(self, entry: CatalogEntry, field_name: str, cfg: VariationConfig, p: np.ndarray,
                 dcfg: DifferentiationConfig = FORWARD):
        self.entry = entry
        self.info: FieldInfo = entry.fields[field_name]
        self.cfg = cfg
        self.p = p
        self.dcfg = dcfg
        self.t = cfg.t
        self.eps = cfg.epsilon
        self.n = entry.chart.dim

    @property
    def E_expr(self) -> VectorFieldExpr:
        return self.info.expr

    @cached_property
    def b(self) -> CurvatureBundle:
        return curvature_bundle(self.entry.chart, self.p, seed_field=self.E_expr, cfg=self.dcfg)

    @cached_property
    def bt(self) -> CurvatureBundle:
        return curvature_bundle(self.cfg.chart, self.p, seed_field=self.E_expr, cfg=self.dcfg)

    @cached_property
    def fc(self) -> FieldCalculus:
        return field_calculus(self.entry.chart, self.E_expr, self.p, self.dcfg, self.b)

    @cached_property
    def fct(self) -> FieldCalculus:
        return field_calculus(self.cfg.chart, self.E_expr, self.p, self.dcfg, self.bt)

    @property
    def E(self) -> np.ndarray:
        return self.fc.E

    @cached_property
    def D(self) -> np.ndarray:
        return self.bt.Gamma - self.b.Gamma

    @cached_property
    def nabla_D(self) -> np.ndarray:
        """``[k, i, j, a] = (∇_a D)^k_ij`` for the base connection."""
        return covariant_derivative_full(self.b, self.D, self.bt.dGamma - self.b.dGamma)

    def Dv(self, u, v) -> np.ndarray:
        return np.einsum("kij,i,j->k", self.D, u, v)

    def A(self, v) -> np.ndarray:
        return self.fc.A_E @ v

    def g(self, u, v) -> float:
        return self.b.inner(u, v)

    def gt(self, u, v) -> float:
        return self.bt.inner(u, v)

    def omega(self, v) -> float:
        return self.b.inner(self.E, v)

    @property
    def accel(self) -> np.ndarray:
        return self.fc.accel

    @property
    def perp_frame(self) -> np.ndarray:
        return self.b.frame[:-1]

    @property
    def perp_signs(self) -> np.ndarray:
        return self.b.signs[:-1]

    def d_omega(self, u, v) -> float:
        return float(u @ self.fc.d_omega @ v)

    def lie(self, u, v) -> float:
        return float(u @ self.fc.lie_g @ v)

    def nabla_d_omega(self, z, x, y) -> float:
        """(∇_z dω)(x, y)."""
        return self.g(self.fc.nabla2(z, x), y) - self.g(self.fc.nabla2(z, y), x)

    # A' = A_E restricted to E^⊥
    @cached_property
    def A_perp_norm2(self) -> float:
        return float(sum(s * self.g(self.A(e), self.A(e)) for e, s in zip(self.perp_frame, self.perp_signs)))

    @cached_property
    def A_perp_trace(self) -> float:
        return float(sum(s * self.g(self.A(e), e) for e, s in zip(self.perp_frame, self.perp_signs)))

    @cached_property
    def A_perp_trace_sq(self) -> float:
        return float(sum(s * self.g(self.A(self.A(e)), e) for e, s in zip(self.perp_frame, self.perp_signs)))

    @cached_property
    def A_norm2(self) -> float:
        return float(sum(s * self.g(self.A(e), self.A(e)) for e, s in zip(self.b.frame, self.b.signs)))

    # auxiliary vectors
    def vector(self, rng) -> np.ndarray:
        return rng.uniform(-1.0, 1.0, self.n) @ self.b.frame

    def perp(self, rng) -> np.ndarray:
        return rng.uniform(-1.0, 1.0, self.n - 1) @ self.perp_frame

    def perp_orthonormal(self, rng, k: int) -> list[np.ndarray]:
        """k base-orthonormal vectors in E^⊥ (Gram-Schmidt on random draws)."""
        out: list[np.ndarray] = []
        while len(out) < k:
            v = self.perp(rng)
            for w in out:
                v = v - self.g(w, v) / self.g(w, w) * w
            nv = self.g(v, v)
            if math.sqrt(abs(nv)) < 1e-6:
                continue
            out.append(v / math.sqrt(abs(nv)))
        return out

    def unit_plane(self, rng, alpha: float | None = None):
        """X, V = αE + Y with X ⊥ Y ⊥ E, all base-unit; Y = 0 when dim E^⊥ = 1."""
        if alpha is None:
            alpha = rng.uniform(-1.0, 1.0)
        if self.n - 1 >= 2:
            X, Y = self.perp_orthonormal(rng, 2)
        else:
            (X,) = self.perp_orthonormal(rng, 1)
            Y = np.zeros(self.n)
            alpha = 1.0
        beta = math.sqrt(max(0.0, 1.0 - alpha * alpha))
        return X, alpha * self.E + beta * Y, alpha, beta * Y

    # scalars attached to the field
    @cached_property
    def lam(self) -> ScalarFieldExpr:
        return self.info.lam

    @cached_property
    def U_expr(self) -> VectorFieldExpr:
        return self.E_expr.scaled(self.lam, "U")

    @cached_property
    def fcU(self) -> FieldCalculus:
        return field_calculus(self.entry.chart, self.U_expr, self.p, self.dcfg, self.b)

    @cached_property
    def lam_calc(self):
        return scalar_field_calculus(self.entry.chart, self.lam, self.p, self.dcfg, self.b)

    @cached_property
    def log_lam_calc(self):
        lam = self.lam
        f = ScalarFieldExpr(self.entry.chart, lambda x: log(lam.value(x)), "log_lambda")
        return scalar_field_calculus(self.entry.chart, f, self.p, self.dcfg, self.b)


# --------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class IdentitySpec:
    id: str
    citation: str
    requires: frozenset[str]
    kind: str
    residual_fn: Callable[[PointContext, np.random.Generator], float]
    aggregate: str = "max"

    def __post_init__(self):
        if self.kind not in (EQUALITY, INEQUALITY):
            raise ValueError(self.kind)


_REGISTRY: dict[str, IdentitySpec] = {}


def identity(id: str, citation: str, requires: Iterable[str] = (), kind: str = EQUALITY, aggregate: str = "max"):
    def deco(fn):
        if id in _REGISTRY:
            raise ValueError(f"duplicate identity {id}")
        _REGISTRY[id] = IdentitySpec(id, citation, frozenset(requires), kind, fn, aggregate)
        return fn

    return deco


def list_identities() -> list[IdentitySpec]:
    return list(_REGISTRY.values())


def get_identity(id: str) -> IdentitySpec:
    try:
        return _REGISTRY[id]
    except KeyError:
        raise UnknownIdentity(f"unknown identity {id!r}") from None


def lookup(id: str) -> list[IdentitySpec]:
    """Exact id, or every member of a family: ``"cor3.4"`` gives ``cor3.4.le``, ``.ge``, ``.eq``."""
    if id in _REGISTRY:
        return [_REGISTRY[id]]
    family = [s for k, s in _REGISTRY.items() if k.startswith(id + ".")]
    if not family:
        raise UnknownIdentity(f"unknown identity {id!r}")
    return family


def expand_ids(ids: Iterable[str]) -> list[str]:
    out: list[str] = []
    for i in ids:
        out.extend(s.id for s in lookup(i) if s.id not in out)
    return out


# --- difference tensor ------------------------------------------------------


@identity("cor2.4.1", "g(D^t(X,V),X) = 0 for X ⊥ E")
def _(c, rng):
    X, V = c.perp(rng), c.vector(rng)
    d = c.Dv(X, V)
    return rel(c.g(d, X), 0.0, c.b.to_frame(d))


@identity("cor2.4.2", "g(D^t(V,E),E) = 0")
def _(c, rng):
    V = c.vector(rng)
    d = c.Dv(V, c.E)
    return rel(c.g(d, c.E), 0.0, c.b.to_frame(d))


@identity("cor2.4.3", "g_t(D^t(V,E),W) + g_t(D^t(W,E),V) = t(ω(V)g(W,∇_E E) + ω(W)g(V,∇_E E))")
def _(c, rng):
    V, W = c.vector(rng), c.vector(rng)
    lhs = c.gt(c.Dv(V, c.E), W) + c.gt(c.Dv(W, c.E), V)
    rhs = c.t * (c.omega(V) * c.g(W, c.accel) + c.omega(W) * c.g(V, c.accel))
    return rel(lhs, rhs)


@identity("cor2.4.4", "∇^t_E E = (1+εt)∇_E E")
def _(c, rng):
    lhs = c.b.to_frame(c.fct.accel)
    rhs = c.b.to_frame((1 + c.eps * c.t) * c.accel)
    return rel(lhs, rhs)


@identity("cor2.4.5", "D^t(X,Y) = t/(2(1+εt)) (L_E g)(X,Y) E for X, Y ⊥ E")
def _(c, rng):
    X, Y = c.perp(rng), c.perp(rng)
    lhs = c.b.to_frame(c.Dv(X, Y))
    rhs = c.b.to_frame(c.t / (2 * (1 + c.eps * c.t)) * c.lie(X, Y) * c.E)
    return rel(lhs, rhs)


@identity("cor2.4.6", "(L_E g_t)(X,Y) = (L_E g)(X,Y) for X, Y ⊥ E")
def _(c, rng):
    X, Y = c.perp(rng), c.perp(rng)
    return rel(float(X @ c.fct.lie_g @ Y), c.lie(X, Y))


@identity("cor2.4.7", "div_t V = div V")
def _(c, rng):
    n = c.n
    a = rng.uniform(-1, 1, n)
    M = rng.uniform(-1, 1, (n, n))
    V = VectorFieldExpr(c.entry.chart, lambda x: [a[i] + sum(M[i][j] * x[j] for j in range(n)) for i in range(n)], "V")
    d0 = field_calculus(c.entry.chart, V, c.p, c.dcfg, c.b).div
    dt = field_calculus(c.cfg.chart, V, c.p, c.dcfg, c.bt).div
    return rel(dt, d0)


@identity("prop2.2", "g_t(D^t(U,V),W) = t/2 (ω(W)(L_E g)(U,V) + ω(U)dω(V,W) + ω(V)dω(U,W))")
def _(c, rng):
    U, V, W = c.vector(rng), c.vector(rng), c.vector(rng)
    lhs = c.gt(c.Dv(U, V), W)
    t = c.t
    rhs = 0.5 * t * (c.omega(W) * c.lie(U, V) + c.omega(U) * c.d_omega(V, W) + c.omega(V) * c.d_omega(U, W))
    return rel(lhs, rhs)


# --- curvature of g_t --------------------------------------------------------


@identity("lemma3.1", "R^t(U,V)W = R(U,V)W + (∇_U D)(V,W) - (∇_V D)(U,W) + D(U,D(V,W)) - D(V,D(U,W))")
def _(c, rng):
    D, ND = c.D, c.nabla_D
    # [l, i, j, k] layout, i.e. (R(∂_i, ∂_j)∂_k)^l
    rhs = (c.b.Riemann + np.einsum("ljki->lijk", ND) - np.einsum("likj->lijk", ND)
           + np.einsum("lim,mjk->lijk", D, D) - np.einsum("ljm,mik->lijk", D, D))
    return rel(c.bt.Riemann, rhs, c.b.Riemann)


def _thm32_rhs(c, X):
    t, eps = c.t, c.eps
    AX = c.A(X)
    return (c.b.Rm(X, c.E, c.E, X)
            + t * (eps * c.g(c.fc.nabla_accel(X), X) - c.g(c.accel, X) ** 2)
            + 0.5 * t * (2 * eps + t) * (c.g(AX, AX) - c.g(c.A(AX), X)))


@identity("thm3.2", "g_t(R^t(X,E)E,X) = g(R(X,E)E,X) + t(εg(∇_X ∇_E E,X) - g(∇_E E,X)^2)"
          " + t(2ε+t)/2 (g(A_E X,A_E X) - g(A_E^2 X,X))", {"orthogonally_normal"})
def _(c, rng):
    X = c.perp(rng)
    return rel(c.bt.Rm(X, c.E, c.E, X), _thm32_rhs(c, X))


@identity("cor3.3", "K^t = K/(1+εt) on a surface with geodesic E", {"dim2", "geodesic"})
def _(c, rng):
    u, v = c.b.frame
    return rel(sectional(c.bt, u, v), sectional(c.b, u, v) / (1 + c.eps * c.t))


def _plane_with_E(c, rng):
    X = c.perp_orthonormal(rng, 1)[0]
    return X, sectional(c.bt, X, c.E), sectional(c.b, X, c.E)


@identity("cor3.4.le", "K_t(Π) <= K_R(Π)/(1+t) for planes Π ∋ E, t in (-inf,-2) ∪ (-1,0)",
          {"riemannian_base", "normal", "t_le_range"}, INEQUALITY)
def _(c, rng):
    X, kt, k = _plane_with_E(c, rng)
    return violation(kt, k / (1 + c.t))


@identity("cor3.4.ge", "K_t(Π) >= K_R(Π)/(1+t) for planes Π ∋ E, t in (-2,-1) ∪ (0,inf)",
          {"riemannian_base", "normal", "t_ge_range"}, INEQUALITY)
def _(c, rng):
    X, kt, k = _plane_with_E(c, rng)
    return violation(k / (1 + c.t), kt)


@identity("cor3.4.eq", "K_L(Π) = -K_R(Π) for planes Π ∋ E under the standard variation",
          {"riemannian_base", "normal", "standard_t"})
def _(c, rng):
    X, kt, k = _plane_with_E(c, rng)
    return rel(kt, -k)


@identity("cor3.5", "Ric_t(E,E) = Ric(E,E) + εt div(∇_E E) + t(2ε+t)/2 (|A'_E|^2 - tr(A'_E^2))",
          {"orthogonally_normal"})
def _(c, rng):
    t, eps = c.t, c.eps
    rhs = (c.b.ric(c.E, c.E) + eps * t * c.fc.div_accel()
           + 0.5 * t * (2 * eps + t) * (c.A_perp_norm2 - c.A_perp_trace_sq))
    return rel(c.bt.ric(c.E, c.E), rhs)


@identity("thm3.6", "g_t(R^t(X,Y)Y,X) = g(R(X,Y)Y,X) + t/(1+εt) (g(A_E X,X)g(A_E Y,Y)"
          " - g(A_E X,Y)g(A_E Y,X) - (4+3εt)/4 dω(X,Y)^2) for X, Y ⊥ E")
def _(c, rng):
    X, Y = c.perp(rng), c.perp(rng)
    t, eps = c.t, c.eps
    AX, AY = c.A(X), c.A(Y)
    rhs = c.b.Rm(X, Y, Y, X) + t / (1 + eps * t) * (
        c.g(AX, X) * c.g(AY, Y) - c.g(AX, Y) * c.g(AY, X) - (4 + 3 * eps * t) / 4 * c.d_omega(X, Y) ** 2)
    return rel(c.bt.Rm(X, Y, Y, X), rhs)


def _cor38_rhs(c, X):
    t, eps = c.t, c.eps
    k = t / (1 + eps * t)
    AX = c.A(X)
    return (c.b.ric(X, X) - k * c.b.Rm(X, c.E, c.E, X) + k * c.g(AX, X) * c.fc.div
            + eps * t * k * c.g(c.A(AX), X) - t * c.g(AX, AX)
            + k * (c.g(c.fc.nabla_accel(X), X) - eps * c.g(c.accel, X) ** 2))


@identity("cor3.8", "Ric_t(X,X) = Ric(X,X) - t/(1+εt) g(R(X,E)E,X) + ... for X ⊥ E", {"orthogonally_normal"})
def _(c, rng):
    X = c.perp(rng)
    return rel(c.bt.ric(X, X), _cor38_rhs(c, X))


@identity("cor3.9", "S_t = S - 2t/(1+εt) Ric(E,E) + 2t/(1+εt) div(∇_E E)"
          " + t/(1+εt)(tr(A'_E)^2 - tr(A'_E^2)) + εt^2/(2(1+εt))(tr(A'_E^2) - |A'_E|^2)",
          {"orthogonally_normal"})
def _(c, rng):
    t, eps = c.t, c.eps
    k = t / (1 + eps * t)
    # trace of the Ricci expansions above; no separate |∇_E E|^2 term survives
    rhs = (c.b.scalar - 2 * k * c.b.ric(c.E, c.E) + 2 * k * c.fc.div_accel()
           + k * (c.A_perp_trace ** 2 - c.A_perp_trace_sq)
           + eps * t * t / (2 * (1 + eps * t)) * (c.A_perp_trace_sq - c.A_perp_norm2))
    return rel(c.bt.scalar, rhs, c.b.scalar)


@identity("prop3.10", "g_t(R^t(E,X)X,Y) = g(R(E,X)X,Y) + t/2 (-ε(∇_X dω)(X,Y) + g(A_E X,X)g(∇_E E,Y)"
          " - 2g(X,A_E Y)g(∇_E E,X) + g(A_E X,Y)g(∇_E E,X)) for X, Y ⊥ E")
def _(c, rng):
    X, Y = c.perp(rng), c.perp(rng)
    t, eps = c.t, c.eps
    AX, a = c.A(X), c.accel
    rhs = c.b.Rm(c.E, X, X, Y) + 0.5 * t * (
        -eps * c.nabla_d_omega(X, X, Y) + c.g(AX, X) * c.g(a, Y)
        - 2 * c.g(X, c.A(Y)) * c.g(a, X) + c.g(AX, Y) * c.g(a, X))
    return rel(c.bt.Rm(c.E, X, X, Y), rhs)


# --- standard variation along a Killing field --------------------------------


KILLING_STD = {"riemannian_base", "killing", "standard_t"}


@identity("sec4.connection", "∇^L_U V = ∇^R_U V - 2(ω(U)∇^R_V E + ω(V)∇^R_U E)", KILLING_STD)
def _(c, rng):
    U, V = c.vector(rng), c.vector(rng)
    lhs = c.b.to_frame(c.Dv(U, V))
    rhs = c.b.to_frame(-2 * (c.omega(U) * c.A(V) + c.omega(V) * c.A(U)))
    return rel(lhs, rhs)


@identity("eq4.domega", "(∇_X dω)(X,Y) = -2 g_R(R(E,X)X,Y) for Killing E", {"riemannian_base", "killing"})
def _(c, rng):
    X, Y = c.perp(rng), c.perp(rng)
    return rel(c.nabla_d_omega(X, X, Y), -2 * c.b.Rm(c.E, X, X, Y))


def _mirror(c, V, alpha, Y):
    return alpha * c.E - Y


@identity("eq4.sym", "g_L(R^L(V,X)X,V) = g_R(R^R(V*,X)X,V*) + 6 g_R(∇_X E,Y)^2, V = αE+Y, V* = αE-Y",
          KILLING_STD)
def _(c, rng):
    X, V, alpha, Y = c.unit_plane(rng)
    Vs = _mirror(c, V, alpha, Y)
    return rel(c.bt.Rm(V, X, X, V), c.b.Rm(Vs, X, X, Vs) + 6 * c.g(c.A(X), Y) ** 2)


def _nondegenerate_alpha(rng):
    while True:
        a = rng.uniform(-1.0, 1.0)
        if abs(1 - 2 * a * a) > 0.05:
            return a


@identity("prop4.1.1", "K_R(Π*) <= -cos(2θ) K_L(Π) for nondegenerate Π, cos^2 θ = α^2",
          KILLING_STD, INEQUALITY)
def _(c, rng):
    X, V, alpha, Y = c.unit_plane(rng, _nondegenerate_alpha(rng))
    Vs = _mirror(c, V, alpha, Y)
    cos2 = 2 * alpha * alpha - 1
    lhs, rhs = sectional(c.b, Vs, X), -cos2 * sectional(c.bt, V, X)
    return violation(lhs, rhs)


@identity("prop4.1.1.eq", "K_R(Π*) = -cos(2θ) K_L(Π) when E ∈ Π", KILLING_STD)
def _(c, rng):
    X = c.perp_orthonormal(rng, 1)[0]
    return rel(sectional(c.b, c.E, X), -sectional(c.bt, c.E, X))


@identity("prop4.1.2", "2 K_R(Π*) <= lightlike sectional curvature of Π w.r.t. E for degenerate Π",
          KILLING_STD | {"dim_ge3"}, INEQUALITY)
def _(c, rng):
    X, V, alpha, Y = c.unit_plane(rng, math.copysign(1 / SQRT2, rng.uniform(-1, 1)))
    Vs = _mirror(c, V, alpha, Y)
    return violation(2 * sectional(c.b, Vs, X), lightlike_sectional(c.bt, V, X, c.E))


@identity("prop4.1.3", "Ric_L(v,v) = Ric_R(v*,v*) + 4 g_R(∇_X E,∇_X E), v = αE+X", KILLING_STD)
def _(c, rng):
    X = c.perp(rng)
    alpha = rng.uniform(-1, 1)
    v, vs = alpha * c.E + X, alpha * c.E - X
    AX = c.A(X)
    return rel(c.bt.ric(v, v), c.b.ric(vs, vs) + 4 * c.g(AX, AX))


@identity("prop4.1.4", "S_R + 2 Ric_R(E,E) = S_L", KILLING_STD)
def _(c, rng):
    return rel(c.b.scalar + 2 * c.b.ric(c.E, c.E), c.bt.scalar)


@identity("lemma4.3", "U = λE conformal with E orthogonally conformal: E(λ) = λρ and εX(λ) = -λ g(∇_E E,X)",
          {"orthogonally_conformal", "killing_multiple"})
def _(c, rng):
    X = c.perp(rng)
    Xn = c.perp_orthonormal(rng, 1)[0]
    rho = c.lie(Xn, Xn) / (2 * c.g(Xn, Xn))
    lc = c.lam_calc
    dlam = c.b.g @ lc.grad
    r1 = rel(float(dlam @ c.E), lc.value * rho)
    r2 = rel(c.eps * float(dlam @ X), -lc.value * c.g(c.accel, X))
    return max(r1, r2)


@identity("lemma4.4", "U = λE Killing for g stays Killing for g_t", {"killing_multiple"})
def _(c, rng):
    fu = field_calculus(c.cfg.chart, c.U_expr, c.p, c.dcfg, c.bt)
    L = c.bt.frame @ fu.lie_g @ c.bt.frame.T
    M = c.bt.frame @ fu.nabla_omega @ c.bt.frame.T
    return rel(L, 0.0, M)


@identity("thm4.5.integrand", "Ric_t(U,U) = Ric_L(U,U) + (2t/λ^2) g_L(∇_U U,∇_U U) - t div(∇_U U)"
          " + t(t-2)λ^2 |A'_E|^2 for Killing U = λE",
          {"lorentzian_base", "killing_multiple", "orthogonally_normal"})
def _(c, rng):
    t = c.t
    lam = c.lam_calc.value
    U, aU = c.fcU.E, c.fcU.accel
    rhs = (c.b.ric(U, U) + 2 * t / lam ** 2 * c.g(aU, aU) - t * c.fcU.div_accel()
           + t * (t - 2) * lam ** 2 * c.A_perp_norm2)
    return rel(c.bt.ric(U, U), rhs, c.b.ric(U, U))


@identity("ex4.6.integrand", "Ric_L(U,U) - g_L(∇_U U,∇_U U)/g_L(U,U) = λ Δ_L λ on a static product",
          {"lorentzian_base", "killing_multiple", "tag:static"})
def _(c, rng):
    U, aU = c.fcU.E, c.fcU.accel
    lhs = c.b.ric(U, U) - c.g(aU, aU) / c.g(U, U)
    return rel(lhs, c.lam_calc.value * c.lam_calc.laplacian)


# --- standard variation along a closed field -----------------------------------


CLOSED_STD = {"riemannian_base", "closed", "standard_t"}


def _leaf_gap(c, X, Y) -> float:
    """(K̂ - K)(span(X,Y)) · Q(X,Y) for the leaves orthogonal to E (Gauss equation)."""
    AX, AY = c.A(X), c.A(Y)
    return c.g(AX, X) * c.g(AY, Y) - c.g(AX, Y) ** 2


@identity("sec5.connection", "∇^L_U V = ∇^R_U V + 2 g_R(∇^R_U E,V) E", CLOSED_STD)
def _(c, rng):
    U, V = c.vector(rng), c.vector(rng)
    return rel(c.b.to_frame(c.Dv(U, V)), c.b.to_frame(2 * c.g(c.A(U), V) * c.E))


@identity("prop5.1.1", "-cos(2θ) K_L(Π) = K_R(Π) + 2 sin^2θ (K̂_R - K_R)(p(Π))", CLOSED_STD)
def _(c, rng):
    X, V, alpha, Y = c.unit_plane(rng, _nondegenerate_alpha(rng))
    cos2 = 2 * alpha * alpha - 1
    # sin^2θ (K̂ - K)(span(X, Y/|Y|)) = gap(X, Y) since |Y|^2 = sin^2θ
    rhs = sectional(c.b, V, X) + 2 * _leaf_gap(c, X, Y)
    return rel(-cos2 * sectional(c.bt, V, X), rhs)


@identity("prop5.1.2", "lightlike sectional curvature of Π w.r.t. E = 2 K_R(Π) + 2 (K̂_R - K_R)(p(Π))",
          CLOSED_STD | {"dim_ge3"})
def _(c, rng):
    X, V, alpha, Y = c.unit_plane(rng, math.copysign(1 / SQRT2, rng.uniform(-1, 1)))
    rhs = 2 * sectional(c.b, V, X) + 2 * _leaf_gap(c, X, Y) / c.g(Y, Y)
    return rel(lightlike_sectional(c.bt, V, X, c.E), rhs)


@identity("prop5.1.3", "Ric_L(v,v) = Ric_R(v,v) + 2 g_R(A_E v,v) div E - 2 g_R(A_E v,A_E v) - 2 g_R(R(v,E)E,v)",
          CLOSED_STD)
def _(c, rng):
    v = c.vector(rng)
    Av = c.A(v)
    rhs = c.b.ric(v, v) + 2 * c.g(Av, v) * c.fc.div - 2 * c.g(Av, Av) - 2 * c.b.Rm(v, c.E, c.E, v)
    return rel(c.bt.ric(v, v), rhs)


@identity("prop5.1.4", "S_L = S_R + 4 E(div E) + 2(|A_E|^2 + (div E)^2)", CLOSED_STD)
def _(c, rng):
    e_div = float(c.fc.grad_div() @ c.E)
    rhs = c.b.scalar + 4 * e_div + 2 * (c.A_norm2 + c.fc.div ** 2)
    return rel(c.bt.scalar, rhs, c.b.scalar)


@identity("thm5.2.pointwise", "S_R(p) < S_L(p) at some sampled p for a complete nonparallel closed E",
          CLOSED_STD | {"nonparallel", "complete_field"}, INEQUALITY, aggregate="exists")
def _(c, rng):
    e_div = float(c.fc.grad_div() @ c.E)
    gap = 2 * c.A_norm2 + 4 * e_div + 2 * c.fc.div ** 2
    # value is the shortfall from strict S_R < S_L at this point; the cell passes if some point has none
    return max(0.0, 1e-8 - gap) + rel(c.bt.scalar - c.b.scalar, gap)


# --- Killing fields and lightlike data on a Lorentzian base ----------------------


@identity("lemma6.4", "g_L(R(X,E)E,X) = (1/λ) g_L(∇_X ∇λ,X) + g_L(∇_X E,∇_X E) for Killing U = λE",
          {"lorentzian_base", "killing_multiple"})
def _(c, rng):
    X = c.perp(rng)
    AX = c.A(X)
    lc = c.lam_calc
    return rel(c.b.Rm(X, c.E, c.E, X), float(X @ lc.hessian @ X) / lc.value + c.g(AX, AX))


def _null_pair(c, rng):
    X0 = c.perp(rng)
    X0 = X0 / math.sqrt(2 * c.g(X0, X0))
    return -c.E / SQRT2 + X0, c.E / SQRT2 + X0, X0


@identity("thm6.5.ric", "Ric_R(N,ξ) = Ric_L(N,ξ) + Δ_L ln λ - 4 g_L(∇_{X0} E,∇_{X0} E)",
          {"lorentzian_base", "killing_multiple", "standard_t"})
def _(c, rng):
    xi, N, X0 = _null_pair(c, rng)
    AX = c.A(X0)
    return rel(c.bt.ric(N, xi), c.b.ric(N, xi) + c.log_lam_calc.laplacian - 4 * c.g(AX, AX))


@identity("cor6.6.k", "g_L(∇_{X0} E,∇_{X0} E) = g_L(R(X0,E)E,X0) = -K_L(span(ξ,N))/2 for unit Killing E",
          {"lorentzian_base", "killing"})
def _(c, rng):
    xi, N, X0 = _null_pair(c, rng)
    AX = c.A(X0)
    lhs = c.g(AX, AX)
    return max(rel(lhs, c.b.Rm(X0, c.E, c.E, X0)), rel(lhs, -0.5 * sectional(c.b, xi, N)))


# --------------------------------------------------------------------------
# guards


GUARD_PREDICATES = {
    "killing": "is_killing",
    "closed": "is_closed",
    "geodesic": "is_geodesic",
    "normal": "is_normal",
    "orthogonally_normal": "is_orthogonally_normal",
    "orthogonally_conformal": "is_orthogonally_conformal",
}


def t_in_le_range(t: float) -> bool:
    return t < -2 or -1 < t < 0


def t_in_ge_range(t: float) -> bool:
    return -2 < t < -1 or t > 0


class GuardState:
    """Guard outcomes for one (target, sample set); classification computed once."""

    def __init__(self, entry: CatalogEntry, field_name: str, points: np.ndarray, dcfg: DifferentiationConfig,
                 tol: float):
        self.entry = entry
        self.info = entry.fields[field_name]
        self.points = points
        self.dcfg = dcfg
        self.tol = tol

    @cached_property
    def classification(self):
        return classify_field(self.entry.chart, self.info.expr, SampleSpec(len(self.points), 0), self.dcfg,
                              points=self.points)

    @cached_property
    def killing_multiple(self) -> float:
        if self.info.lam is None:
            return math.inf
        U = self.info.expr.scaled(self.info.lam, "U")
        return classify_field(self.entry.chart, U, SampleSpec(len(self.points), 0), self.dcfg,
                              points=self.points).is_killing

    def evaluate(self, guard: str, t: float, eps: int) -> tuple[bool, float | None]:
        """(holds, residual); residual is reported for classification-based guards."""
        if guard in GUARD_PREDICATES:
            r = self.classification.residual(GUARD_PREDICATES[guard])
            return r <= self.tol, r
        if guard == "killing_multiple":
            r = self.killing_multiple
            return r <= self.tol, (r if math.isfinite(r) else None)
        if guard == "nonparallel":
            r = self.classification.is_parallel
            return r > 1e-6, r
        if guard == "riemannian_base":
            return self.entry.chart.signature_hint == RIEMANNIAN, None
        if guard == "lorentzian_base":
            return self.entry.chart.signature_hint != RIEMANNIAN and eps < 0, None
        if guard == "standard_t":
            return t == -2.0 * eps, None
        if guard == "dim2":
            return self.entry.chart.dim == 2, None
        if guard == "dim_ge3":
            return self.entry.chart.dim >= 3, None
        if guard == "complete_field":
            return self.info.complete, None
        if guard == "t_le_range":
            return t_in_le_range(t), None
        if guard == "t_ge_range":
            return t_in_ge_range(t), None
        if guard.startswith("tag:"):
            return guard[4:] in self.entry.tags, None
        raise ValueError(f"unknown guard {guard!r}")


# --------------------------------------------------------------------------
# reports and sweeps


@dataclass
class VerificationReport:
    identity: str
    manifold: str
    t: float
    samples: int
    seed: int
    kind: str
    citation: str
    tolerance: float
    max_residual: float | None = None
    mean_residual: float | None = None
    guard_residuals: dict[str, float] = field(default_factory=dict)
    passed: bool = False
    skipped_reason: str | None = None
    error: str | None = None

    @property
    def skipped(self) -> bool:
        return self.skipped_reason is not None

    @property
    def failed(self) -> bool:
        return not self.skipped and not self.passed


def default_t_values(eps: int) -> list[float]:
    return [-eps * s for s in (3.0, 2.0, 1.5, 0.5, -0.5, -1.0, -3.0)]


def _stable_seed(*parts) -> list[int]:
    out = []
    for part in parts:
        if isinstance(part, str):
            out.append(zlib.crc32(part.encode()))
        else:
            out.append(int(part) & 0xFFFFFFFF)
    return out


def _tolerance(spec: IdentitySpec, dcfg: DifferentiationConfig) -> float:
    return dcfg.tolerance("equality" if spec.kind == EQUALITY else "inequality")


def _check_t(t: float, eps: int):
    if abs(t + eps) < T_MARGIN:
        raise ForbiddenParameter(f"t = {t} is within {T_MARGIN} of -ε = {-eps}")


def run_suite(manifold_ids: Sequence[str] | None = None, identity_ids: Sequence[str] | None = None,
              t_values: Sequence[float] | None = None, sample_spec: SampleSpec = SampleSpec(),
              dcfg: DifferentiationConfig = FORWARD) -> list[VerificationReport]:
    """Cartesian sweep over (identity, manifold field, t); cells never abort the sweep."""
    specs = [get_identity(i) for i in expand_ids(identity_ids)] if identity_ids is not None else list_identities()
    if manifold_ids is None:
        manifold_ids = targets()
    resolved = [resolve(m) for m in manifold_ids]
    reports: list[VerificationReport] = []
    if not specs:
        return reports
    for (entry, fname), target in zip(resolved, manifold_ids):
        target = f"{entry.id}:{fname}"
        reports.extend(_run_target(entry, fname, target, specs, t_values, sample_spec, dcfg))
    return reports


def _run_target(entry, fname, target, specs, t_values, sample_spec, dcfg):
    info = entry.fields[fname]
    reports = []

    def cell(spec, t, **kw):
        return VerificationReport(spec.id, target, float(t), sample_spec.count, sample_spec.seed, spec.kind,
                                  spec.citation, _tolerance(spec, dcfg), **kw)

    try:
        eps = estimate_epsilon(entry.chart, info.expr)
    except GeometryError as exc:
        ts = list(t_values) if t_values is not None else [0.0]
        return [cell(s, t, skipped_reason=f"unit_field: {exc}") for s in specs for t in ts]
    ts = list(t_values) if t_values is not None else default_t_values(eps)
    points = entry.chart.sample_points(sample_spec.count, sample_spec.seed)
    guards = GuardState(entry, fname, points, dcfg, dcfg.tolerance("guard"))
    for t in ts:
        t = float(t)
        active = []
        for spec in specs:
            reasons, residuals = [], {}
            for gname in sorted(spec.requires):
                ok, r = guards.evaluate(gname, t, eps)
                if r is not None:
                    residuals[gname] = r
                if not ok:
                    reasons.append(gname)
            if reasons:
                reports.append(cell(spec, t, guard_residuals=residuals, skipped_reason="guard failed: " + ",".join(reasons)))
            else:
                active.append((spec, residuals))
        if not active:
            continue
        try:
            _check_t(t, eps)
            cfg = VariationConfig(t, entry.chart, info.expr)
        except GeometryError as exc:
            for spec, residuals in active:
                reports.append(cell(spec, t, guard_residuals=residuals, skipped_reason=f"forbidden_t: {exc}"))
            continue
        values: dict[str, list[float]] = {spec.id: [] for spec, _ in active}
        errors: dict[str, str] = {}
        for k, p in enumerate(points):
            ctx = PointContext(entry, fname, cfg, p, dcfg)
            for spec, _ in active:
                if spec.id in errors:
                    continue
                rng = np.random.default_rng(_stable_seed(sample_spec.seed, spec.id, k))
                try:
                    values[spec.id].append(float(spec.residual_fn(ctx, rng)))
                except GeometryError as exc:
                    errors[spec.id] = f"{type(exc).__name__}: {exc}"
        for spec, residuals in active:
            tol = _tolerance(spec, dcfg)
            if spec.id in errors:
                reports.append(cell(spec, t, guard_residuals=residuals, error=errors[spec.id], passed=False))
                continue
            vals = np.asarray(values[spec.id])
            if spec.aggregate == "exists":
                mx = float(vals.min())
            else:
                mx = float(vals.max())
            reports.append(cell(spec, t, guard_residuals=residuals, max_residual=mx,
                                mean_residual=float(vals.mean()), passed=bool(mx <= tol)))
    return reports


def check_identity(id: str, manifold_id: str, t_values: Sequence[float], sample_spec: SampleSpec = SampleSpec(),
                   dcfg: DifferentiationConfig = FORWARD) -> list[VerificationReport]:
    """One report per t value for a single identity on a single catalog field."""
    spec = get_identity(id)
    entry, fname = resolve(manifold_id)
    eps = estimate_epsilon(entry.chart, entry.fields[fname].expr)
    for t in t_values:
        _check_t(float(t), eps)
    return run_suite([manifold_id], [spec.id], t_values, sample_spec, dcfg)
