"""Local gate tensors for the damping and Fourier stages.

Sign convention: every exponent carries exp(-theta) or exp(-i*theta), so
grid values come out as exp(-(wr*k + i*wi*l)/N * j) without extra
conjugation anywhere downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SQRT2 = np.sqrt(2.0)


@dataclass
class GateTensor:
    """A small named tensor with the parameters it was built from."""

    kind: str
    params: dict = field(default_factory=dict)
    tensor: np.ndarray = None


def damping_hadamard(omega_r: float) -> GateTensor:
    """The contraction analogue of the Hadamard: (1/sqrt2)[[1,1],[1,e^{-wr/2}]]."""
    if not np.isfinite(omega_r):
        raise ValueError("omega_r must be finite")
    mat = np.array([[1.0, 1.0], [1.0, np.exp(-omega_r / 2.0)]], dtype=complex) / SQRT2
    return GateTensor(kind="damping_hadamard", params={"omega_r": omega_r}, tensor=mat)


def controlled_damping_angle(l: int, m: int, omega_r: float) -> float:
    """Damping rate wr / 2^(m-l+1) for target bit l under control bit m.

    Both orders are allowed (m < l gives an exponent above wr/2); bits are
    1-based with 1 the most significant.
    """
    if l == m:
        raise ValueError("control and target bits must differ")
    if l < 1 or m < 1:
        raise ValueError("bit indices are 1-based")
    return omega_r / 2.0 ** (m - l + 1)


def damping_diag(theta: float) -> GateTensor:
    """Single-bit damping diag(1, e^{-theta}) applied to the |1> component."""
    mat = np.diag([1.0, np.exp(-theta)]).astype(complex)
    return GateTensor(kind="damping_diag", params={"theta": theta}, tensor=mat)


def phase_diag(theta: float) -> GateTensor:
    """Single-bit phase diag(1, e^{-i theta})."""
    mat = np.diag([1.0, np.exp(-1j * theta)]).astype(complex)
    return GateTensor(kind="phase_diag", params={"theta": theta}, tensor=mat)


def copy_tensor() -> GateTensor:
    """Rank-3 tensor routing a control bit onto a virtual bond.

    Index order (out, in, bond): entry 1 iff out == in == bond.
    """
    t = np.zeros((2, 2, 2), dtype=complex)
    t[0, 0, 0] = 1.0
    t[1, 1, 1] = 1.0
    return GateTensor(kind="copy", tensor=t)


def _fused_block(r: np.ndarray, kind: str, theta: float) -> GateTensor:
    block = np.zeros((2, 2, 2, 2), dtype=complex)
    block[0, :, :, 0] = np.eye(2)
    block[1, :, :, 1] = r
    return GateTensor(kind=kind, params={"theta": theta}, tensor=block)


def fused_damping_block(theta: float) -> GateTensor:
    """Order-4 bond-diagonal block diag(I, R(theta)), R = diag(1, e^{-theta}).

    Index order (bond_left, out, in, bond_right).  Contracting a chain of
    these with a copy tensor at the control site reproduces the controlled
    damping gate |0><0| x I + |1><1| x R(theta); targets sharing one
    control share one bond.
    """
    if not np.isfinite(theta):
        raise ValueError("theta must be finite")
    return _fused_block(damping_diag(theta).tensor, "fused_damping_block", theta)


def fused_phase_block(theta: float) -> GateTensor:
    """Order-4 block diag(I, diag(1, e^{-i theta})), same layout as the damping block."""
    return _fused_block(phase_diag(theta).tensor, "fused_phase_block", theta)


def qft_gates(l: int, m: int, omega_i: float) -> GateTensor:
    """Fourier-stage gates on register 2.

    With l == m returns the on-site mixer (1/sqrt2)[[1,1],[1,e^{-i wi/2}]]
    (the standard Hadamard at wi = 2*pi); with m > l returns the fused
    controlled-phase block at theta = wi / 2^(m-l+1).  Controls from m < l
    are rejected: the Fourier stage relies on 2*pi periodicity and only
    ever reads later bits.
    """
    if not np.isfinite(omega_i):
        raise ValueError("omega_i must be finite")
    if l == m:
        mat = np.array([[1.0, 1.0], [1.0, np.exp(-1j * omega_i / 2.0)]], dtype=complex) / SQRT2
        return GateTensor(kind="hadamard", params={"omega_i": omega_i}, tensor=mat)
    if m < l:
        raise ValueError("Fourier-stage controls require m > l")
    theta = omega_i / 2.0 ** (m - l + 1)
    return fused_phase_block(theta)
