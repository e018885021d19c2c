"""Secure evaluation of matrix polynomials with (b, t, k) polynomial sharing.

Each of N workers stores an m x m/k share of every input; any t-1 of them
learn nothing about the inputs, and the master learns only the result.
"""

from .analytics import baseline_bounds, cost_model, rival_worker_counts, worker_bound
from .circuit import Circuit, compile_circuit, evaluate_plain, evaluate_secure, parse_expression
from .cluster import (
    SystemConfig,
    distribution_audit,
    extract_view,
    privacy_certificate,
    run_protocol,
)
from .errors import ConfigError, PolyshareError, ProtocolError
from .field import MERSENNE_61, PrimeField, solve_general_vandermonde
from .matrix import Matrix, partition_columns, row_slice
from .procedures import add_shares, change_basis, multiply_shares, scale_shares, transpose_shares
from .sharing import (
    ShareBundle,
    SharingParams,
    coefficient_index,
    product_support,
    reconstruct,
    sample_alphas,
    share,
)
from .transcript import RunTranscript

__all__ = [
    "Circuit",
    "ConfigError",
    "MERSENNE_61",
    "Matrix",
    "PolyshareError",
    "PrimeField",
    "ProtocolError",
    "RunTranscript",
    "ShareBundle",
    "SharingParams",
    "SystemConfig",
    "add_shares",
    "baseline_bounds",
    "change_basis",
    "coefficient_index",
    "compile_circuit",
    "cost_model",
    "distribution_audit",
    "evaluate_plain",
    "evaluate_secure",
    "extract_view",
    "multiply_shares",
    "parse_expression",
    "partition_columns",
    "privacy_certificate",
    "product_support",
    "reconstruct",
    "row_slice",
    "run_protocol",
    "sample_alphas",
    "scale_shares",
    "share",
    "solve_general_vandermonde",
    "rival_worker_counts",
    "transpose_shares",
    "worker_bound",
]
