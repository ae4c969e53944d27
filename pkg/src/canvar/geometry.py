"""Pointwise semi-Riemannian geometry on a single coordinate chart.

Conventions (fixed once, used everywhere):

* ``Gamma[k, i, j] = Γ^k_ij`` (Levi-Civita).
* ``R(U,V)W = ∇_U∇_V W - ∇_V∇_U W - ∇_[U,V] W`` stored as
  ``Riemann[l, i, j, k] = (R(∂_i, ∂_j)∂_k)^l``.
* ``K(u, v) = g(R(u,v)v, u) / (g(u,u)g(v,v) - g(u,v)^2)`` so the unit
  round sphere has ``K = +1``.
* ``Ric(U, V) = tr(X -> R(X,U)V)``, ``Ricci[j, k] = Riemann[l, l, j, k]``.
* Derivative axes are appended last: ``dg[i, j, k] = ∂_k g_ij``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateMetric,
    DegeneratePlane,
    DegenerateSpan,
    GeometryError,
    NotLightlike,
    NullField,
    NullSeedField,
    PointOutsideDomain,
    SignatureMismatch,
)
from .jet import Jet, unpack

Box = tuple[tuple[float, float], ...]

RIEMANNIAN = "riemannian"
LORENTZIAN = "lorentzian"

DEFAULT_TOLERANCES = {
    "equality": 1e-8,
    "equality_fd": 1e-4,
    "inequality": 1e-10,
    "guard": 1e-8,
}


@dataclass(frozen=True)
class DifferentiationConfig:
    mode: str = "forward_exact"
    fd_step: float = 1e-5
    tolerances: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def __post_init__(self):
        if self.mode not in ("forward_exact", "finite_difference"):
            raise ValueError(f"unknown differentiation mode {self.mode!r}")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")

    @property
    def exact(self) -> bool:
        return self.mode == "forward_exact"

    def tolerance(self, key: str) -> float:
        if key == "equality" and not self.exact:
            key = "equality_fd"
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))


FORWARD = DifferentiationConfig()


def taylor(fn: Callable[[tuple], Any], p: Sequence[float], order: int = 2,
           cfg: DifferentiationConfig | None = None) -> tuple[np.ndarray, ...]:
    """Value and derivatives of ``fn`` at ``p`` (derivative axes last)."""
    cfg = cfg or FORWARD
    p = np.asarray(p, dtype=float)
    if cfg.exact:
        return unpack(fn(tuple(Jet.variables(p, order))), len(p), order)
    return _finite_difference(fn, p, order, cfg.fd_step)


def _finite_difference(fn, p, order, step):
    n = len(p)
    f = lambda x: np.asarray(fn(tuple(float(c) for c in x)), dtype=float)
    f0 = f(p)
    h = step * np.maximum(1.0, np.abs(p))
    d = np.zeros(f0.shape + (n,))
    plus, minus = [], []
    for a in range(n):
        e = np.zeros(n)
        e[a] = h[a]
        plus.append(f(p + e))
        minus.append(f(p - e))
        d[..., a] = (plus[a] - minus[a]) / (2 * h[a])
    if order < 2:
        return f0, d
    dd = np.zeros(f0.shape + (n, n))
    for a in range(n):
        dd[..., a, a] = (plus[a] - 2 * f0 + minus[a]) / (h[a] * h[a])
        for b in range(a + 1, n):
            ea = np.zeros(n)
            eb = np.zeros(n)
            ea[a] = h[a]
            eb[b] = h[b]
            mixed = (f(p + ea + eb) - f(p + ea - eb) - f(p - ea + eb) + f(p - ea - eb)) / (4 * h[a] * h[b])
            dd[..., a, b] = mixed
            dd[..., b, a] = mixed
    return f0, d, dd


# --------------------------------------------------------------------------
# charts and fields


@dataclass(frozen=True, eq=False)
class Chart:
    """A coordinate box with metric components given as smooth functions."""

    dim: int
    domain: Box
    metric_fn: Callable[[Sequence[Any]], Any]
    signature_hint: str = RIEMANNIAN
    name: str = "chart"
    sample_box: Box | None = None
    degeneracy_threshold: float = 1e-10

    def __post_init__(self):
        if self.dim < 1 or len(self.domain) != self.dim:
            raise ValueError("domain must have one interval per coordinate")
        if self.signature_hint not in (RIEMANNIAN, LORENTZIAN):
            raise ValueError(f"unknown signature {self.signature_hint!r}")

    def contains(self, p: Sequence[float]) -> bool:
        return all(lo < x < hi for x, (lo, hi) in zip(p, self.domain))

    def sampling_box(self) -> Box:
        if self.sample_box is not None:
            return self.sample_box
        box = []
        for lo, hi in self.domain:
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise GeometryError(f"chart {self.name!r} has an unbounded domain and no sample_box")
            pad = 0.05 * (hi - lo)
            box.append((lo + pad, hi - pad))
        return tuple(box)

    def sample_points(self, count: int, seed: int) -> np.ndarray:
        box = np.asarray(self.sampling_box(), dtype=float)
        rng = np.random.default_rng(seed)
        return box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((count, self.dim))

    def center(self) -> np.ndarray:
        return np.asarray(self.sampling_box(), dtype=float).mean(axis=1)


@dataclass(frozen=True, eq=False)
class VectorFieldExpr:
    chart: Chart
    components: Callable[[Sequence[Any]], Sequence[Any]]
    name: str = "V"

    def __call__(self, p: Sequence[float]) -> np.ndarray:
        return np.asarray(self.components(tuple(float(c) for c in p)), dtype=float)

    def scaled(self, factor: "ScalarFieldExpr | Callable", name: str | None = None) -> "VectorFieldExpr":
        fn = factor.value if isinstance(factor, ScalarFieldExpr) else factor

        def comps(x):
            s = fn(x)
            return [s * c for c in self.components(x)]

        return VectorFieldExpr(self.chart, comps, name or f"{self.name}*s")

    def on(self, chart: Chart) -> "VectorFieldExpr":
        return VectorFieldExpr(chart, self.components, self.name)


@dataclass(frozen=True, eq=False)
class ScalarFieldExpr:
    chart: Chart
    value: Callable[[Sequence[Any]], Any]
    name: str = "f"

    def __call__(self, p: Sequence[float]) -> float:
        return float(self.value(tuple(float(c) for c in p)))


@dataclass(frozen=True, eq=False)
class ImmersionSpec:
    """A hypersurface given as a smooth map from a parameter box into a chart."""

    chart: Chart
    map: Callable[[Sequence[Any]], Sequence[Any]]
    param_box: Box
    name: str = "hypersurface"

    @property
    def param_dim(self) -> int:
        return self.chart.dim - 1

    def sample_params(self, count: int, seed: int) -> np.ndarray:
        box = np.asarray(self.param_box, dtype=float)
        pad = 0.05 * (box[:, 1] - box[:, 0])
        lo, hi = box[:, 0] + pad, box[:, 1] - pad
        rng = np.random.default_rng(seed)
        return lo + (hi - lo) * rng.random((count, len(box)))


def check_point(chart: Chart, p: Sequence[float]) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (chart.dim,):
        raise PointOutsideDomain(f"expected a point with {chart.dim} coordinates, got shape {p.shape}")
    if not chart.contains(p):
        raise PointOutsideDomain(f"{p.tolist()} is not interior to the domain of {chart.name!r}")
    return p


def _check_metric_value(chart: Chart, g: np.ndarray) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(g))))
    if np.max(np.abs(g - g.T)) > 1e-14 * scale:
        raise GeometryError(f"metric of {chart.name!r} is not symmetric")
    g = 0.5 * (g + g.T)
    eig = np.linalg.eigvalsh(g)
    if abs(float(np.prod(eig))) < chart.degeneracy_threshold:
        raise DegenerateMetric(f"|det g| = {abs(float(np.prod(eig))):.3e} on {chart.name!r}")
    negatives = int(np.sum(eig < 0))
    expected = 0 if chart.signature_hint == RIEMANNIAN else 1
    if negatives != expected:
        raise SignatureMismatch(
            f"metric of {chart.name!r} has {negatives} negative eigenvalues, expected {expected}")
    return g


def evaluate_metric(chart: Chart, p: Sequence[float]) -> np.ndarray:
    p = check_point(chart, p)
    g = np.asarray(chart.metric_fn(tuple(float(c) for c in p)), dtype=float)
    return _check_metric_value(chart, g)


def metric_taylor(chart: Chart, p: Sequence[float], order: int = 2,
                  cfg: DifferentiationConfig | None = None) -> tuple[np.ndarray, ...]:
    p = check_point(chart, p)
    out = taylor(chart.metric_fn, p, order, cfg)
    g = _check_metric_value(chart, out[0])
    sym = tuple(0.5 * (a + np.swapaxes(a, 0, 1)) for a in out[1:])
    return (g,) + sym


def _lowered_gamma(dg: np.ndarray) -> np.ndarray:
    # Γ_{m,ij} = (∂_i g_mj + ∂_j g_mi - ∂_m g_ij) / 2
    return 0.5 * (np.einsum("mji->mij", dg) + dg - np.einsum("ijm->mij", dg))


def christoffel(chart: Chart, p: Sequence[float], cfg: DifferentiationConfig | None = None) -> np.ndarray:
    g, dg = metric_taylor(chart, p, 1, cfg)
    return np.einsum("km,mij->kij", np.linalg.inv(g), _lowered_gamma(dg))


# --------------------------------------------------------------------------
# frames


def orthonormal_frame(g: np.ndarray, seed: np.ndarray | None = None,
                      tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Gram-Schmidt over (seed, timelike eigendirection, coordinate basis).

    Rows of the returned array are the frame vectors; the normalized seed, if
    given, is the last row.  ``signs[a] = g(e_a, e_a)``.
    """
    n = g.shape[0]
    candidates = []
    if seed is not None:
        candidates.append(np.asarray(seed, dtype=float))
    else:
        w, vecs = np.linalg.eigh(g)
        if w[0] < 0:
            candidates.append(vecs[:, 0])
    eye = np.eye(n)
    candidates.extend(eye)
    for i in range(n):
        for j in range(i + 1, n):
            candidates.append(eye[i] + eye[j])
            candidates.append(eye[i] - eye[j])
    vecs: list[np.ndarray] = []
    signs: list[float] = []
    for c in candidates:
        r = c.copy()
        for _ in range(2):
            for e, s in zip(vecs, signs):
                r = r - s * (e @ g @ r) * e
        nr = float(r @ g @ r)
        if math.sqrt(abs(nr)) < tol:
            continue
        vecs.append(r / math.sqrt(abs(nr)))
        signs.append(1.0 if nr > 0 else -1.0)
        if len(vecs) == n:
            break
    if len(vecs) < n:
        raise DegenerateMetric("could not complete an orthonormal frame")
    frame, signs_arr = np.array(vecs), np.array(signs)
    if seed is not None:
        frame = np.roll(frame, -1, axis=0)
        signs_arr = np.roll(signs_arr, -1)
    return frame, signs_arr


# --------------------------------------------------------------------------
# curvature


@dataclass
class CurvatureBundle:
    point: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    Gamma: np.ndarray
    Riemann: np.ndarray
    Ricci: np.ndarray
    scalar: float
    frame: np.ndarray
    signs: np.ndarray
    dg: np.ndarray
    ddg: np.ndarray
    dGamma: np.ndarray
    chart: Chart | None = None

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    def inner(self, u, v) -> float:
        return float(np.asarray(u) @ self.g @ np.asarray(v))

    def norm2(self, u) -> float:
        return self.inner(u, u)

    def R(self, u, v, w) -> np.ndarray:
        """R(u, v)w as a vector."""
        return np.einsum("lijk,i,j,k->l", self.Riemann, u, v, w)

    def Rm(self, u, v, w, z) -> float:
        """g(R(u, v)w, z)."""
        return self.inner(self.R(u, v, w), z)

    def ric(self, u, v) -> float:
        return float(np.asarray(u) @ self.Ricci @ np.asarray(v))

    def lower(self, u) -> np.ndarray:
        return self.g @ np.asarray(u)

    def to_frame(self, u) -> np.ndarray:
        """Components of ``u`` in the orthonormal frame."""
        return self.signs * (self.frame @ self.g @ np.asarray(u))

    def riemann_lowered(self) -> np.ndarray:
        # Rm[i, j, k, z] = g(R(∂i, ∂j)∂k, ∂z)
        return np.einsum("lijk,lz->ijkz", self.Riemann, self.g)


def _curvature_from_metric(p, g, dg, ddg):
    ginv = np.linalg.inv(g)
    low = _lowered_gamma(dg)
    Gamma = np.einsum("km,mij->kij", ginv, low)
    dlow = 0.5 * (np.einsum("mjil->mijl", ddg) + ddg - np.einsum("ijml->mijl", ddg))
    dginv = -np.einsum("ka,abl,bm->kml", ginv, dg, ginv)
    dGamma = np.einsum("kml,mij->kijl", dginv, low) + np.einsum("km,mijl->kijl", ginv, dlow)
    Riemann = (np.einsum("ljki->lijk", dGamma) - np.einsum("likj->lijk", dGamma)
               + np.einsum("lim,mjk->lijk", Gamma, Gamma) - np.einsum("ljm,mik->lijk", Gamma, Gamma))
    Ricci = np.einsum("lljk->jk", Riemann)
    scalar = float(np.einsum("jk,jk->", ginv, Ricci))
    return ginv, Gamma, dGamma, Riemann, Ricci, scalar


def curvature_bundle(chart: Chart, p: Sequence[float], seed_field: VectorFieldExpr | None = None,
                     cfg: DifferentiationConfig | None = None) -> CurvatureBundle:
    p = check_point(chart, p)
    g, dg, ddg = metric_taylor(chart, p, 2, cfg)
    ginv, Gamma, dGamma, Riemann, Ricci, scalar = _curvature_from_metric(p, g, dg, ddg)
    seed = None
    if seed_field is not None:
        seed = seed_field(p)
        scale = max(1.0, float(np.max(np.abs(g))) * float(seed @ seed))
        if abs(float(seed @ g @ seed)) <= 1e-10 * scale:
            raise NullSeedField(f"seed field {seed_field.name!r} is null at {p.tolist()}")
    frame, signs = orthonormal_frame(g, seed)
    return CurvatureBundle(p, g, ginv, Gamma, Riemann, Ricci, scalar, frame, signs, dg, ddg, dGamma, chart)


def plane_gram(bundle: CurvatureBundle, u, v) -> float:
    return bundle.norm2(u) * bundle.norm2(v) - bundle.inner(u, v) ** 2


def sectional(bundle: CurvatureBundle, u, v) -> float:
    u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    q = plane_gram(bundle, u, v)
    # relative to Euclidean norms of the orthonormal-frame components
    scale = float(np.sum(bundle.to_frame(u) ** 2) * np.sum(bundle.to_frame(v) ** 2))
    if abs(q) < 1e-10 * max(scale, 1e-300):
        raise DegeneratePlane("the plane is degenerate; use lightlike_sectional")
    return bundle.Rm(u, v, v, u) / q


def lightlike_sectional(bundle: CurvatureBundle, u, x, E) -> float:
    """Curvature of the degenerate plane span(u, x) normalized by the timelike unit ``E``.

    Value is ``g(R(u,x)x,u) / (g(u,E)^2 g(x,x))``.
    """
    u, x, E = (np.asarray(a, dtype=float) for a in (u, x, E))
    uu, xx, uE = bundle.norm2(u), bundle.norm2(x), bundle.inner(u, E)
    scale = abs(bundle.norm2(E)) * float(np.abs(bundle.to_frame(u)).max()) ** 2
    if abs(uu) > 1e-10 * max(scale, 1.0):
        raise NotLightlike(f"g(u,u) = {uu:.3e} is not null")
    if xx <= 0:
        raise DegenerateSpan("x must be spacelike")
    if abs(uE) <= 1e-12 * math.sqrt(max(scale, 1e-300)):
        raise DegenerateSpan("u is orthogonal to E")
    fu, fx = bundle.to_frame(u), bundle.to_frame(x)
    if np.linalg.matrix_rank(np.vstack([fu, fx]), tol=1e-10 * max(np.abs(fu).max(), np.abs(fx).max())) < 2:
        raise DegenerateSpan("u and x are linearly dependent")
    return bundle.Rm(u, x, x, u) / (uE * uE * xx)


# --------------------------------------------------------------------------
# field calculus


@dataclass
class FieldCalculus:
    """Derived quantities of a vector field ``E`` at one point.

    ``A_E[i, j] = (∇_j E)^i`` so ``A_E @ V = ∇_V E``; ``DA[i, j, k]`` is the
    covariant derivative ``(∇_k A_E)^i_j``.
    """

    E: np.ndarray
    A_E: np.ndarray
    A_E_adjoint: np.ndarray
    A_E_orth: np.ndarray | None
    lie_g: np.ndarray
    d_omega: np.ndarray
    nabla_omega: np.ndarray
    div: float
    accel: np.ndarray
    epsilon: float
    DA: np.ndarray
    dE: np.ndarray

    def nabla2(self, Z, V) -> np.ndarray:
        """Second covariant derivative ∇²_{Z,V}E = (∇_Z A_E)(V)."""
        return np.einsum("ijk,j,k->i", self.DA, V, Z)

    def nabla_accel(self, Z) -> np.ndarray:
        """∇_Z(∇_E E)."""
        return self.nabla2(Z, self.E) + self.A_E @ (self.A_E @ Z)

    def grad_div(self) -> np.ndarray:
        """Covector ∂_k(div E)."""
        return np.einsum("iik->k", self.DA)

    def div_accel(self) -> float:
        """Divergence of ∇_E E."""
        return float(np.einsum("ijk,j->ik", self.DA, self.E).trace() + np.trace(self.A_E @ self.A_E))


def field_calculus(chart: Chart, E: VectorFieldExpr, p: Sequence[float],
                   cfg: DifferentiationConfig | None = None,
                   bundle: CurvatureBundle | None = None) -> FieldCalculus:
    p = check_point(chart, p)
    if bundle is None:
        bundle = curvature_bundle(chart, p, cfg=cfg)
    e, dE, ddE = taylor(E.components, p, 2, cfg)
    return _field_from_jets(bundle, e, dE, ddE)


def _field_from_jets(bundle: CurvatureBundle, e, dE, ddE) -> FieldCalculus:
    G, dG, g, ginv = bundle.Gamma, bundle.dGamma, bundle.g, bundle.g_inv
    A = dE + np.einsum("ijk,k->ij", G, e)
    dA = ddE + np.einsum("ijmk,m->ijk", dG, e) + np.einsum("ijm,mk->ijk", G, dE)
    DA = dA + np.einsum("ikm,mj->ijk", G, A) - np.einsum("mkj,im->ijk", G, A)
    eps = float(e @ g @ e)
    adj = ginv @ A.T @ g
    orth = None
    scale = max(1.0, float(np.abs(g).max()) * float(e @ e))
    if abs(eps) > 1e-10 * scale:
        P = np.eye(len(e)) - np.outer(e, g @ e) / eps
        orth = P @ adj @ P
    nabla_omega = A.T @ g
    return FieldCalculus(
        E=e, A_E=A, A_E_adjoint=adj, A_E_orth=orth,
        lie_g=nabla_omega + nabla_omega.T, d_omega=nabla_omega - nabla_omega.T,
        nabla_omega=nabla_omega, div=float(np.trace(A)), accel=A @ e, epsilon=eps, DA=DA, dE=dE,
    )


@dataclass
class ScalarCalculus:
    value: float
    grad: np.ndarray
    hessian: np.ndarray
    laplacian: float


def scalar_field_calculus(chart: Chart, f: ScalarFieldExpr, p: Sequence[float],
                          cfg: DifferentiationConfig | None = None,
                          bundle: CurvatureBundle | None = None) -> ScalarCalculus:
    p = check_point(chart, p)
    if bundle is None:
        bundle = curvature_bundle(chart, p, cfg=cfg)
    v, df, ddf = taylor(lambda x: f.value(x), p, 2, cfg)
    hess = ddf - np.einsum("kij,k->ij", bundle.Gamma, df)
    hess = 0.5 * (hess + hess.T)
    return ScalarCalculus(float(v), bundle.g_inv @ df, hess, float(np.einsum("ij,ij->", bundle.g_inv, hess)))


def covariant_derivative_full(bundle: CurvatureBundle, T: np.ndarray, dT: np.ndarray) -> np.ndarray:
    """``out[k, i, j, a] = (∇_a T)^k_ij`` for a (1,2)-tensor with partials ``dT[k, i, j, a]``."""
    G = bundle.Gamma
    return (dT + np.einsum("kam,mij->kija", G, T)
            - np.einsum("mai,kmj->kija", G, T) - np.einsum("maj,kim->kija", G, T))


def covariant_derivative_tensor(chart: Chart, T: Callable[[np.ndarray], Any], p: Sequence[float],
                                direction, cfg: DifferentiationConfig | None = None,
                                bundle: CurvatureBundle | None = None) -> np.ndarray:
    """(∇_direction T) for a (1,2)-tensor field ``T``.

    ``T(p)`` may return the component array ``T[k, i, j]`` alone (partials then
    come from central differences) or a pair ``(T, dT)`` with exact partials
    ``dT[k, i, j, a] = ∂_a T^k_ij``.
    """
    cfg = cfg or FORWARD
    p = check_point(chart, p)
    if bundle is None:
        bundle = curvature_bundle(chart, p, cfg=cfg)
    out = T(p)
    if isinstance(out, tuple):
        T0, dT = (np.asarray(a, dtype=float) for a in out)
    else:
        T0 = np.asarray(out, dtype=float)
        dT = np.zeros(T0.shape + (chart.dim,))
        h = cfg.fd_step * np.maximum(1.0, np.abs(p))
        for a in range(chart.dim):
            e = np.zeros(chart.dim)
            e[a] = h[a]
            dT[..., a] = (np.asarray(T(p + e)) - np.asarray(T(p - e))) / (2 * h[a])
    return np.einsum("kija,a->kij", covariant_derivative_full(bundle, T0, dT), np.asarray(direction, dtype=float))


def require_nonnull(fc: FieldCalculus, name: str = "E") -> None:
    if fc.A_E_orth is None:
        raise NullField(f"field {name!r} is null")
