"""Tensor-network z-transform engine.

Computes the discrete Laplace (z-) transform of a length-2^n signal on the
polar grid z = exp(-(wr*k + i*wi*l)/N) by compressing the transform into a
matrix product operator (a non-unitary damping stage followed by a Fourier
stage) acting on the signal encoded as a matrix product state over two
interleaved bit registers.  The 2^n x 2^n output grid is stored implicitly
and queried point by point, by block scan, or by sampling.
"""

from .tensor import TruncatedFactorization, qr_factor, truncated_svd
from .mps import (
    MatrixProductState,
    canonicalize,
    encode_signal_mps,
    evaluate_amplitude,
    lift_to_paired,
    sample_configuration,
)
from .gates import GateTensor, controlled_damping_angle, damping_hadamard, fused_damping_block, qft_gates
from .mpo import (
    BondSpectrumReport,
    MatrixProductOperator,
    apply_mpo,
    bond_spectrum,
    build_dt_mpo,
    build_qft_mpo,
    compose_zt,
    load_mpo,
    save_mpo,
    zip_merge,
)
from .pipeline import (
    ErrorReport,
    GridSample,
    PoleCandidate,
    SignalVector,
    TransformParams,
    direct_oracle,
    error_metrics,
    find_poles,
    gen_signal,
    grid_scan,
    transform,
)

__version__ = "0.1.0"

__all__ = [
    "TruncatedFactorization",
    "qr_factor",
    "truncated_svd",
    "MatrixProductState",
    "canonicalize",
    "encode_signal_mps",
    "evaluate_amplitude",
    "lift_to_paired",
    "sample_configuration",
    "GateTensor",
    "controlled_damping_angle",
    "damping_hadamard",
    "fused_damping_block",
    "qft_gates",
    "BondSpectrumReport",
    "MatrixProductOperator",
    "apply_mpo",
    "bond_spectrum",
    "build_dt_mpo",
    "build_qft_mpo",
    "compose_zt",
    "load_mpo",
    "save_mpo",
    "zip_merge",
    "ErrorReport",
    "GridSample",
    "PoleCandidate",
    "SignalVector",
    "TransformParams",
    "direct_oracle",
    "error_metrics",
    "find_poles",
    "gen_signal",
    "grid_scan",
    "transform",
]
