"""Exact evaluation of clique-count moments, lag covariances and quad combinatorics."""

from .moments import (
    cov_normalized_clique_counts,
    covariance_correction,
    exhaustive_clique_moments,
    mean_clique_count,
    var_clique_count,
    var_clique_count_raw,
    var_order_constants,
    variance_ratio,
    variance_scale,
    variance_scale_ratio,
)
from .quads import (
    QuadIntersection,
    VerPairReport,
    check_ver_pair_bound,
    expected_g,
    expected_g_per_edge,
    intersection_type,
    is_independent_quad,
    labelled_count,
    pair,
    phi,
    quad_classes,
    quad_from_regions,
    venn_classes,
    ver,
    xi_cross_moment_exact,
)

__all__ = [
    "QuadIntersection",
    "VerPairReport",
    "check_ver_pair_bound",
    "cov_normalized_clique_counts",
    "covariance_correction",
    "exhaustive_clique_moments",
    "expected_g",
    "expected_g_per_edge",
    "intersection_type",
    "is_independent_quad",
    "labelled_count",
    "mean_clique_count",
    "pair",
    "phi",
    "quad_classes",
    "quad_from_regions",
    "var_clique_count",
    "var_clique_count_raw",
    "var_order_constants",
    "variance_ratio",
    "variance_scale",
    "variance_scale_ratio",
    "venn_classes",
    "ver",
    "xi_cross_moment_exact",
]
