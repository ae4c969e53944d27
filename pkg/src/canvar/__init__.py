"""Canonical variations g_t = g + t ω⊗ω of semi-Riemannian metrics along a unit vector field.

Curvature engine with forward-mode jets, a catalog of test manifolds, a
registry of pointwise curvature identities, geodesic tools and lightlike
hypersurface checks.
"""

from .catalog import get_entry, list_ids, resolve
from .geometry import (
    FORWARD,
    Chart,
    DifferentiationConfig,
    ScalarFieldExpr,
    VectorFieldExpr,
    curvature_bundle,
    field_calculus,
    sectional,
)
from .identities import check_identity, list_identities, lookup, run_suite
from .variation import SampleSpec, VariationConfig, build_variation, classify_field, standard_variation

__all__ = [
    "FORWARD",
    "Chart",
    "DifferentiationConfig",
    "SampleSpec",
    "ScalarFieldExpr",
    "VariationConfig",
    "VectorFieldExpr",
    "build_variation",
    "check_identity",
    "classify_field",
    "curvature_bundle",
    "field_calculus",
    "get_entry",
    "list_ids",
    "list_identities",
    "lookup",
    "resolve",
    "run_suite",
    "sectional",
    "standard_variation",
]
