"""Immersed hypersurfaces: tangent frames and normals carried as first-order jets in the parameters.

Everything that must later be differentiated along the immersion (normals,
null generators) is built from polynomial operations (determinants and
adjugates) so that one evaluation on jets yields both the value and its
parameter derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .errors import DegenerateHypersurface, PointOutsideDomain
from .geometry import (
    CurvatureBundle,
    DifferentiationConfig,
    ImmersionSpec,
    VectorFieldExpr,
    check_point,
    curvature_bundle,
    taylor,
)
from .jet import Jet, sqrt, unpack, value_of


def det(m: Sequence[Sequence[Any]]) -> Any:
    n = len(m)
    if n == 0:
        return 1.0
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    total = 0.0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def adjugate(m: Sequence[Sequence[Any]]) -> list[list[Any]]:
    n = len(m)
    if n == 1:
        return [[1.0]]
    out = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [list(row[:i]) + list(row[i + 1:]) for k, row in enumerate(m) if k != j]
            c = det(minor)
            out[i][j] = c if (i + j) % 2 == 0 else -c
    return out


def cross_covector(T: Sequence[Sequence[Any]]) -> list[Any]:
    """Covector annihilating the n-1 columns of the n×(n-1) matrix ``T``."""
    n = len(T)
    out = []
    for i in range(n):
        minor = [list(T[k]) for k in range(n) if k != i]
        c = det(minor)
        out.append(c if i % 2 == 0 else -c)
    return out


def matvec(m, v):
    return [sum(m[i][j] * v[j] for j in range(len(v))) for i in range(len(m))]


def bilinear(g, u, v):
    n = len(u)
    return sum(g[i][j] * u[i] * v[j] for i in range(n) for j in range(n))


def split(values, nparams: int) -> tuple[np.ndarray, np.ndarray]:
    """Value and parameter derivatives ``d[..., a]`` of first-order jets."""
    return unpack(values, nparams, order=1)


@dataclass
class ImmersionPoint:
    """An immersion evaluated at a parameter point.

    ``J[i, a] = ∂_a φ^i`` are the tangent vectors; ``x_jet``, ``T_jet`` and
    ``g_jet`` are first-order jets in the parameters for the point, tangents
    and ambient metric.
    """

    q: np.ndarray
    x: np.ndarray
    J: np.ndarray
    H: np.ndarray
    x_jet: list
    T_jet: list
    g_jet: list
    bundle: CurvatureBundle

    @property
    def nparams(self) -> int:
        return len(self.q)

    def field_jet(self, field: VectorFieldExpr) -> list:
        return list(field.components(tuple(self.x_jet)))

    def covariant(self, W_val: np.ndarray, W_d: np.ndarray) -> np.ndarray:
        """``out[:, a] = ∇_{∂_a φ} W`` for an ambient field known along the image."""
        G = self.bundle.Gamma
        return W_d + np.einsum("kij,ia,j->ka", G, self.J, W_val)


def immersion_point(imm: ImmersionSpec, q: Sequence[float],
                    dcfg: DifferentiationConfig | None = None) -> ImmersionPoint:
    q = np.asarray(q, dtype=float)
    if q.shape != (imm.param_dim,):
        raise PointOutsideDomain(f"expected {imm.param_dim} parameters")
    if not all(lo < c < hi for c, (lo, hi) in zip(q, imm.param_box)):
        raise PointOutsideDomain(f"parameters {q.tolist()} outside the box of {imm.name!r}")
    x, J, H = taylor(imm.map, q, 2)
    x = check_point(imm.chart, x)
    sv = np.linalg.svd(J, compute_uv=False)
    if sv[-1] < 1e-10 * max(1.0, sv[0]):
        raise DegenerateHypersurface(f"immersion {imm.name!r} is not of full rank at {q.tolist()}")
    n, m = J.shape
    x_jet = [Jet(float(x[i]), J[i].copy()) for i in range(n)]
    T_jet = [[Jet(float(J[i, a]), H[i, a].copy()) for a in range(m)] for i in range(n)]
    g_jet = [list(row) for row in imm.chart.metric_fn(tuple(x_jet))]
    bundle = curvature_bundle(imm.chart, x, cfg=dcfg)
    return ImmersionPoint(q, x, J, H, x_jet, T_jet, g_jet, bundle)


def unit_normal_jet(ip: ImmersionPoint) -> tuple[list, float]:
    """Unit normal as jets and its causal sign δ = g(N, N)."""
    nu = cross_covector(ip.T_jet)
    N = matvec(adjugate(ip.g_jet), nu)
    nn = bilinear(ip.g_jet, N, N)
    size = sum(value_of(c) ** 2 for c in N) * float(np.abs(ip.bundle.g).max())
    if abs(value_of(nn)) <= 1e-10 * size:
        raise DegenerateHypersurface("the induced metric is degenerate; no unit normal")
    delta = 1.0 if value_of(nn) > 0 else -1.0
    r = 1.0 / sqrt(delta * nn)
    return [c * r for c in N], delta


def induced_metric(ip: ImmersionPoint) -> np.ndarray:
    return ip.J.T @ ip.bundle.g @ ip.J
