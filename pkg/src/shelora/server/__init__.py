"""Server side: negotiation of the encrypted column set and aggregation."""

from ..messages import SensitivityBid
from .aggregation import (
    AggregatedCipher,
    AggregatedPlain,
    aggregate_cipher,
    aggregate_plain,
    lift_cipher,
    svd_and_slice,
    truncate_cipher,
)
from .bayesopt import optimize_coefficients, search_coefficients
from .negotiation import (
    NegotiationResult,
    coverage_risk,
    negotiate,
    objective_score,
    ranked_lists,
    select_mixed,
)

__all__ = [
    "AggregatedCipher",
    "AggregatedPlain",
    "NegotiationResult",
    "SensitivityBid",
    "aggregate_cipher",
    "aggregate_plain",
    "coverage_risk",
    "lift_cipher",
    "negotiate",
    "objective_score",
    "optimize_coefficients",
    "ranked_lists",
    "search_coefficients",
    "select_mixed",
    "svd_and_slice",
    "truncate_cipher",
]
