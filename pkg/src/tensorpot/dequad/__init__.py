"""Doubly exponential quadrature: substitutions, trapezoid rules and node search."""

from .rules import (
    NonDecayingIntegrandError,
    NonFiniteIntegrandError,
    QuadratureRule,
    SubstChain,
    trapezoid,
    truncation_bounds,
)
from .search import (
    CSV_FIELDS,
    ErrorReport,
    NodeSearchFailure,
    ReferenceNonConvergence,
    node_search,
    reference_batch,
    reference_value,
    reference_log_values,
    reference_values,
    reports_to_csv,
    rule_for,
    sample_norms,
    sample_points,
)

__all__ = [
    "CSV_FIELDS",
    "ErrorReport",
    "NodeSearchFailure",
    "NonDecayingIntegrandError",
    "NonFiniteIntegrandError",
    "QuadratureRule",
    "ReferenceNonConvergence",
    "SubstChain",
    "node_search",
    "reference_batch",
    "reference_value",
    "reference_log_values",
    "reference_values",
    "reports_to_csv",
    "rule_for",
    "sample_norms",
    "sample_points",
    "trapezoid",
    "truncation_bounds",
]
