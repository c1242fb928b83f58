"""Dense tensor factorizations underlying all MPS/MPO algorithms.

Tensors are plain ``numpy.ndarray`` objects in row-major (C) layout; a
"split" is the number of leading axes treated as matrix rows when a tensor
is reshaped for factorization.  The single truncation rule used everywhere
is the discarded-squared-weight criterion:

    sum(discarded sigma^2) / sum(all sigma^2) <= tau

with at least one singular value always retained.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TruncatedFactorization:
    """Result of a truncated SVD of a tensor split into (rows | columns).

    ``left_factor`` has shape (row extents..., rank) with orthonormal
    columns, ``right_factor`` has shape (rank, column extents...) with
    orthonormal rows, and ``discarded_weight`` is the dimensionless ratio
    of discarded to total squared singular weight.
    """

    left_factor: np.ndarray
    singular_values: np.ndarray
    right_factor: np.ndarray
    discarded_weight: float

    @property
    def rank(self) -> int:
        return len(self.singular_values)

    def reconstruct(self) -> np.ndarray:
        """Recombine the kept factors into a dense tensor."""
        rank = self.rank
        left = self.left_factor.reshape(-1, rank)
        right = self.right_factor.reshape(rank, -1)
        full = (left * self.singular_values) @ right
        shape = self.left_factor.shape[:-1] + self.right_factor.shape[1:]
        return full.reshape(shape)


def _as_matrix(t: np.ndarray, split: int) -> tuple[np.ndarray, tuple[int, ...], tuple[int, ...]]:
    t = np.asarray(t)
    if not 0 < split < t.ndim:
        raise ValueError(f"split {split} must lie strictly inside ndim {t.ndim}")
    rows = t.shape[:split]
    cols = t.shape[split:]
    return t.reshape(int(np.prod(rows)), int(np.prod(cols))), rows, cols


def qr_factor(t: np.ndarray, split: int) -> tuple[np.ndarray, np.ndarray]:
    """QR-factor a tensor split after ``split`` leading axes.

    Returns (q, r) with q of shape (row extents..., rank) having
    orthonormal columns and r of shape (rank, column extents...), such
    that their contraction reproduces ``t`` to machine precision.
    """
    mat, rows, cols = _as_matrix(t, split)
    if not np.all(np.isfinite(mat)):
        raise ValueError("tensor contains NaN or Inf")
    q, r = np.linalg.qr(mat)
    rank = q.shape[1]
    return q.reshape(rows + (rank,)), r.reshape((rank,) + cols)


def truncated_svd(t: np.ndarray, split: int, tau: float) -> TruncatedFactorization:
    """Truncated SVD keeping the minimal leading singular values.

    The kept rank is the smallest for which the discarded squared weight
    ratio stays <= ``tau``; rank 1 is always retained so bonds never
    collapse to extent zero.  Singular values are folded into neither
    factor; callers absorb them where the sweep direction requires.
    """
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"relative cutoff tau must lie in [0, 1), got {tau}")
    mat, rows, cols = _as_matrix(t, split)
    if not np.all(np.isfinite(mat)):
        raise ValueError("tensor contains NaN or Inf")
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    rank, discarded = _kept_rank(s, tau)
    return TruncatedFactorization(
        left_factor=u[:, :rank].reshape(rows + (rank,)),
        singular_values=s[:rank].copy(),
        right_factor=vh[:rank].reshape((rank,) + cols),
        discarded_weight=discarded,
    )


def _kept_rank(s: np.ndarray, tau: float) -> tuple[int, float]:
    """Smallest kept rank with discarded squared-weight ratio <= tau."""
    weights = s.astype(float) ** 2
    total = weights.sum()
    if total == 0.0:
        return 1, 0.0
    # cumulative discarded weight when keeping the first k values
    tail = np.cumsum(weights[::-1])[::-1]  # tail[k] = sum(weights[k:])
    budget = tau * total
    kept = len(s)
    for k in range(len(s) - 1, 0, -1):
        if tail[k] <= budget:
            kept = k
        else:
            break
    discarded = float(tail[kept] / total) if kept < len(s) else 0.0
    return kept, discarded
