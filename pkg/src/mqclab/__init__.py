"""mqclab: multiple-quantum coherence dynamics of quasi-1D dipolar spin chains."""

__version__ = "0.1.0"

from .operators import (
    OperatorSpec,
    PureState,
    apply,
    basis_state,
    build_collective,
    build_dipolar,
    build_dq,
    build_site,
    dense_matrix,
    expectation,
    hilbert_schmidt_norm,
    spectral_bounds,
)

__all__ = [
    "OperatorSpec",
    "PureState",
    "apply",
    "basis_state",
    "build_collective",
    "build_dipolar",
    "build_dq",
    "build_site",
    "dense_matrix",
    "expectation",
    "hilbert_schmidt_norm",
    "spectral_bounds",
    "__version__",
]
