"""Hot evaluation kernels: numba-jitted loops with a pure-numpy fallback.

The numpy path is selected automatically when numba is unavailable, or
forced with the environment flag ``ZTMPO_NO_NUMBA=1``.  Both paths are
exercised by the ``kernels`` benchmark suite.
"""

from __future__ import annotations

import os

import numpy as np

_FORCED_OFF = os.environ.get("ZTMPO_NO_NUMBA", "").strip() not in ("", "0")

try:
    if _FORCED_OFF:
        raise ImportError("numba disabled by ZTMPO_NO_NUMBA")
    from numba import njit, prange
    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):  # no-op decorator so the module always imports
        def wrap(fn):
            return fn
        return wrap

    prange = range

TWO_PI = 2.0 * np.pi


def pack_chain(tensors) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Zero-pad a tensor chain into one (L, 2, D, D) array plus bond extents."""
    L = len(tensors)
    dmax = max(max(t.shape[0], t.shape[2]) for t in tensors)
    packed = np.zeros((L, 2, dmax, dmax), dtype=np.complex128)
    dl = np.empty(L, dtype=np.int64)
    dr = np.empty(L, dtype=np.int64)
    for i, t in enumerate(tensors):
        dl[i], dr[i] = t.shape[0], t.shape[2]
        packed[i, :, :dl[i], :dr[i]] = t.transpose(1, 0, 2)
    return packed, dl, dr


@njit(cache=True, parallel=True)
def _amplitudes_jit(packed, dl, dr, bits, out):  # pragma: no cover - jitted
    npts = bits.shape[0]
    L = packed.shape[0]
    dmax = packed.shape[2]
    for p in prange(npts):
        v = np.zeros(dmax, dtype=np.complex128)
        v[0] = 1.0
        w = np.zeros(dmax, dtype=np.complex128)
        for s in range(L):
            b = bits[p, s]
            for j in range(dr[s]):
                acc = 0.0 + 0.0j
                for i in range(dl[s]):
                    acc += v[i] * packed[s, b, i, j]
                w[j] = acc
            for j in range(dr[s], dmax):
                w[j] = 0.0
            v, w = w, v
        out[p] = v[0]


def _amplitudes_numpy(tensors, bits):
    npts = bits.shape[0]
    v = np.ones((npts, 1), dtype=complex)
    for s, t in enumerate(tensors):
        nxt = np.empty((npts, t.shape[2]), dtype=complex)
        col = bits[:, s]
        for b in (0, 1):
            rows = col == b
            if rows.any():
                nxt[rows] = v[rows] @ t[:, b, :]
        v = nxt
    return v[:, 0]


def eval_amplitudes(tensors, bits: np.ndarray) -> np.ndarray:
    """Batch evaluate <bits|mps> for a (P, n_sites) bit matrix."""
    bits = np.ascontiguousarray(bits, dtype=np.int64)
    if bits.ndim != 2 or bits.shape[1] != len(tensors):
        raise ValueError("bits must be (points, n_sites)")
    if HAS_NUMBA:
        packed, dl, dr = pack_chain(tensors)
        out = np.empty(bits.shape[0], dtype=np.complex128)
        _amplitudes_jit(packed, dl, dr, bits, out)
        return out
    return _amplitudes_numpy(tensors, bits)


@njit(cache=True, parallel=True)
def _oracle_jit(x, ks, ls, wr, wi, n_total, wi_is_2pi, out):  # pragma: no cover - jitted
    npts = ks.shape[0]
    nsig = x.shape[0]
    for p in prange(npts):
        k = ks[p]
        l = ls[p]
        rad = wr * k / n_total
        ang = np.mod(wi * l / n_total, TWO_PI)
        acc = 0.0 + 0.0j
        for j in range(nsig):
            u = rad * j
            if u > 745.0:
                break  # remaining terms underflow (u grows with j for wr >= 0)
            if wi_is_2pi:
                ph = TWO_PI * ((l * j) % n_total) / n_total
            else:
                ph = np.mod(ang * j, TWO_PI)
            acc += x[j] * np.exp(-u) * (np.cos(ph) - 1j * np.sin(ph))
        out[p] = acc


def _oracle_numpy(x, ks, ls, wr, wi, n_total, wi_is_2pi):
    nsig = len(x)
    j = np.arange(nsig, dtype=np.float64)
    out = np.empty(len(ks), dtype=complex)
    for p in range(len(ks)):
        u = (wr * ks[p] / n_total) * j
        mag = np.exp(-np.minimum(u, 745.0)) * (u <= 745.0)
        if wi_is_2pi:
            ph = TWO_PI * ((ls[p] * np.arange(nsig, dtype=np.int64)) % n_total) / n_total
        else:
            ph = np.mod(np.mod(wi * ls[p] / n_total, TWO_PI) * j, TWO_PI)
        out[p] = np.sum(x * mag * np.exp(-1j * ph))
    return out


def zt_oracle(x: np.ndarray, ks: np.ndarray, ls: np.ndarray, wr: float, wi: float) -> np.ndarray:
    """Direct O(N)-per-point summation of the transform at grid points.

    The angular phase is reduced exactly through integer arithmetic when
    wi is 2*pi, which keeps the oracle trustworthy at large N.
    """
    x = np.ascontiguousarray(x, dtype=np.complex128)
    ks = np.ascontiguousarray(ks, dtype=np.int64)
    ls = np.ascontiguousarray(ls, dtype=np.int64)
    n_total = len(x)
    wi_is_2pi = bool(abs(wi - TWO_PI) < 1e-15)
    if HAS_NUMBA:
        out = np.empty(len(ks), dtype=np.complex128)
        _oracle_jit(x, ks, ls, float(wr), float(wi), n_total, wi_is_2pi, out)
        return out
    return _oracle_numpy(x, ks, ls, float(wr), float(wi), n_total, wi_is_2pi)
