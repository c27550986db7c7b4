"""Selective homomorphic encryption for heterogeneous federated LoRA.

Subpackages and modules:

* :mod:`shelora.linalg` - Jacobi SVD, permutations, padding, matrix CSV
* :mod:`shelora.sensitivity` - Wanda scores and budgeted column selection
* :mod:`shelora.crypto` - order-preserving codes and a simulated CKKS backend
* :mod:`shelora.client` / :mod:`shelora.server` - the two sides of a round
* :mod:`shelora.metrics` - leakage, bound and permutation-noise measurements
* :mod:`shelora.orchestrator` - end-to-end runs and reports
"""

from .errors import (
    AuthenticationError,
    CapacityError,
    DepthError,
    DomainError,
    IncompatibleError,
    SheLoraError,
    ShapeError,
    TrainingError,
    ValidationError,
)
from .kernels import backend_name

__version__ = "0.1.0"

__all__ = [
    "AuthenticationError",
    "CapacityError",
    "DepthError",
    "DomainError",
    "IncompatibleError",
    "SheLoraError",
    "ShapeError",
    "TrainingError",
    "ValidationError",
    "backend_name",
]
