"""Matrix product states: signal encoding, paired lifting, evaluation, sampling.

Site tensors have index order (left bond, physical, right bond) with
boundary bonds of extent 1.  Basis indices are read most-significant bit
first: j = j_1 * 2^(n-1) + ... + j_n, with bit j_1 living on site 0.
Paired states interleave the two registers as (i_1, i'_1, ..., i_n, i'_n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import qr_factor, truncated_svd


@dataclass
class SignalVector:
    """A length-2^n complex sample vector."""

    samples: np.ndarray
    n: int

    @classmethod
    def from_samples(cls, samples) -> "SignalVector":
        samples = np.asarray(samples, dtype=complex).reshape(-1)
        n = int(np.log2(len(samples)))
        if len(samples) != 2**n or n < 1:
            raise ValueError(f"signal length {len(samples)} is not a power of two >= 2")
        if not np.all(np.isfinite(samples)):
            raise ValueError("signal contains NaN or Inf")
        return cls(samples=samples, n=n)


def as_samples(x) -> np.ndarray:
    """Accept a SignalVector or any array-like of samples."""
    return x.samples if isinstance(x, SignalVector) else np.asarray(x, dtype=complex).reshape(-1)


class MatrixProductState:
    """Chain of rank-3 complex tensors.

    ``center`` is the orthogonality center when known: every tensor to its
    left is left-isometric and every tensor to its right is
    right-isometric.  ``None`` means no canonical structure is claimed.
    """

    def __init__(self, tensors, site_labels=None, center=None):
        tensors = [np.asarray(t, dtype=complex) for t in tensors]
        if not tensors:
            raise ValueError("an MPS needs at least one site")
        for i, t in enumerate(tensors):
            if t.ndim != 3:
                raise ValueError(f"site {i} tensor has rank {t.ndim}, expected 3")
        if tensors[0].shape[0] != 1 or tensors[-1].shape[-1] != 1:
            raise ValueError("boundary bonds must have extent 1")
        for i in range(len(tensors) - 1):
            if tensors[i].shape[-1] != tensors[i + 1].shape[0]:
                raise ValueError(f"bond mismatch between sites {i} and {i + 1}")
        self.tensors = tensors
        self.site_labels = list(site_labels) if site_labels is not None else [f"q{i}" for i in range(len(tensors))]
        self.center = center

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    def bond_dims(self) -> list[int]:
        """Internal bond extents (length n_sites - 1)."""
        return [t.shape[-1] for t in self.tensors[:-1]]

    def max_bond(self) -> int:
        return max(self.bond_dims(), default=1)

    def copy(self) -> "MatrixProductState":
        return MatrixProductState([t.copy() for t in self.tensors], self.site_labels, self.center)

    def to_vector(self) -> np.ndarray:
        """Dense contraction; only for small chains (tests and oracles)."""
        dim = int(np.prod([t.shape[1] for t in self.tensors]))
        if dim > 1 << 22:
            raise ValueError("refusing to densify a chain this large")
        v = self.tensors[0]
        for t in self.tensors[1:]:
            v = np.tensordot(v, t, axes=([v.ndim - 1], [0]))
        return v.reshape(dim)

    def norm(self) -> float:
        env = np.ones((1, 1), dtype=complex)
        for t in self.tensors:
            env = np.tensordot(env, t, axes=([1], [0]))
            env = np.tensordot(t.conj(), env, axes=([0, 1], [0, 1]))
        return float(np.sqrt(abs(env[0, 0])))

    def scale(self, factor: complex) -> "MatrixProductState":
        """Return a copy with one tensor multiplied by ``factor``."""
        out = self.copy()
        site = self.center if self.center is not None else 0
        out.tensors[site] = out.tensors[site] * factor
        return out


def interleaved_labels(n: int) -> list[str]:
    labels = []
    for q in range(n):
        labels.append(f"q{q}")
        labels.append(f"q{q}'")
    return labels


def encode_signal_mps(x, tau: float) -> MatrixProductState:
    """TT-SVD encoding of a length-2^n signal onto n sites.

    The amplitude of basis index j equals x[j] up to the truncation
    allowed by ``tau`` at each internal bond.
    """
    x = as_samples(x)
    n = int(np.log2(len(x)))
    if len(x) != 2**n or n < 1:
        raise ValueError(f"signal length {len(x)} is not a power of two >= 2")
    if not np.all(np.isfinite(x)):
        raise ValueError("signal contains NaN or Inf")

    tensors = []
    carry = x.reshape(1, -1)
    rank = 1
    for _ in range(n - 1):
        block = carry.reshape(rank * 2, -1)
        fac = truncated_svd(block, 1, tau)
        tensors.append(fac.left_factor.reshape(rank, 2, fac.rank))
        carry = fac.singular_values[:, None] * fac.right_factor
        rank = fac.rank
    tensors.append(carry.reshape(rank, 2, 1))
    return MatrixProductState(tensors, center=n - 1)


def lift_to_paired(m: MatrixProductState, tau: float) -> MatrixProductState:
    """Lift an n-site state to 2n interleaved sites via local copy tensors.

    Site tensor A[a,i,b] splits into A[a,i,(b,c)] * delta(c,i) followed by
    delta(i',c) * delta(b,b'), so each bit acquires an adjacent exact copy
    and the bond grows by at most a factor of two before recompression.
    """
    n = m.n_sites
    tensors = []
    for t in m.tensors:
        dl, _, dr = t.shape
        first = np.zeros((dl, 2, dr * 2), dtype=complex)
        for i in range(2):
            first[:, i, i * dr:(i + 1) * dr] = t[:, i, :]
        second = np.zeros((dr * 2, 2, dr), dtype=complex)
        for i in range(2):
            second[i * dr:(i + 1) * dr, i, :] = np.eye(dr)
        tensors.append(first)
        tensors.append(second)
    lifted = MatrixProductState(tensors, site_labels=interleaved_labels(n))
    return compress(lifted, tau)


def canonicalize(m: MatrixProductState, center: int) -> MatrixProductState:
    """Gauge the state so ``center`` is the orthogonality center (0-based)."""
    if not 0 <= center < m.n_sites:
        raise IndexError(f"center {center} out of range for {m.n_sites} sites")
    tensors = [t.copy() for t in m.tensors]
    # left-isometries up to center
    for i in range(center):
        q, r = qr_factor(tensors[i], 2)
        tensors[i] = q
        tensors[i + 1] = np.tensordot(r, tensors[i + 1], axes=([1], [0]))
    # right-isometries down to center
    for i in range(m.n_sites - 1, center, -1):
        t = tensors[i]
        # factor T = R * Q with Q right-isometric, push R leftward
        q, r = qr_factor(t.reshape(t.shape[0], -1).conj().T, 1)
        tensors[i] = q.conj().T.reshape(-1, t.shape[1], t.shape[2])
        tensors[i - 1] = np.tensordot(tensors[i - 1], r.conj().T, axes=([2], [0]))
    return MatrixProductState(tensors, m.site_labels, center=center)


def compress(m: MatrixProductState, tau: float) -> MatrixProductState:
    """Truncate every bond at relative discarded weight ``tau``.

    Left-canonicalizes first so each truncation is globally valid, then
    sweeps right to left; the result has its center at site 0.
    """
    work = canonicalize(m, m.n_sites - 1)
    tensors = work.tensors
    for i in range(m.n_sites - 1, 0, -1):
        fac = truncated_svd(tensors[i], 1, tau)
        tensors[i] = fac.right_factor.reshape(fac.rank, *tensors[i].shape[1:])
        carry = fac.left_factor * fac.singular_values
        tensors[i - 1] = np.tensordot(tensors[i - 1], carry, axes=([2], [0]))
    return MatrixProductState(tensors, m.site_labels, center=0)


def evaluate_amplitude(m: MatrixProductState, bits) -> complex:
    """<bits|m> by left-to-right contraction, O(sites * D^2)."""
    bits = np.asarray(bits, dtype=np.int64)
    if len(bits) != m.n_sites:
        raise ValueError(f"got {len(bits)} bits for {m.n_sites} sites")
    v = np.ones(1, dtype=complex)
    for t, b in zip(m.tensors, bits):
        v = v @ t[:, b, :]
    return complex(v[0])


def sample_configuration(m: MatrixProductState, rng: np.random.Generator) -> list[int]:
    """Draw one basis configuration with probability |amplitude|^2 / norm^2.

    Sweeps left to right conditioning on the bits already drawn; the state
    is right-canonicalized internally so per-site marginals are exact.
    """
    work = m if m.center == 0 else canonicalize(m, 0)
    total = abs(evaluate_norm_sq_center0(work))
    if total <= 0.0 or not np.isfinite(total):
        raise ValueError("cannot sample from a zero-norm state")
    bits = []
    env = np.ones(1, dtype=complex)
    for t in work.tensors:
        branches = [env @ t[:, b, :] for b in range(t.shape[1])]
        weights = np.array([np.vdot(w, w).real for w in branches])
        weights = np.clip(weights, 0.0, None)
        if weights.sum() <= 0.0:
            raise ValueError("cannot sample from a zero-norm state")
        probs = weights / weights.sum()
        b = int(rng.choice(len(probs), p=probs))
        bits.append(b)
        env = branches[b] / np.sqrt(weights[b])
    return bits


def evaluate_norm_sq_center0(m: MatrixProductState) -> float:
    """Squared norm read off the center tensor of a center-0 state."""
    t = m.tensors[0]
    return float(np.sum(np.abs(t) ** 2)) if m.center == 0 else m.norm() ** 2
