"""Numba kernels for the per-segment hot paths.

These are the only loops that run once per sample (or per DP cell) over the
whole dataset, so they are compiled. Everything else in the package stays in
plain numpy. All kernels release the GIL so the CLI's thread pool can overlap
segments.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_JIT = {"cache": True, "nogil": True}


@njit(**_JIT)
def sosfilt(sos: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Run a biquad cascade forward over ``x`` (direct form II transposed).

    ``sos`` has shape (n_sections, 6) with rows (b0, b1, b2, a0, a1, a2)
    and a0 == 1.
    """
    y = x.copy()
    for s in range(sos.shape[0]):
        b0 = sos[s, 0]
        b1 = sos[s, 1]
        b2 = sos[s, 2]
        a1 = sos[s, 4]
        a2 = sos[s, 5]
        s1 = 0.0
        s2 = 0.0
        for i in range(y.shape[0]):
            xn = y[i]
            yn = b0 * xn + s1
            s1 = b1 * xn - a1 * yn + s2
            s2 = b2 * xn - a2 * yn
            y[i] = yn
    return y


@njit(**_JIT)
def dtw_cost(a: np.ndarray, b: np.ndarray) -> float:
    """Unconstrained DTW alignment cost with |.| local cost.

    Implements D(i,j) = |a_i - b_j| + min(D(i-1,j), D(i,j-1), D(i-1,j-1))
    with D(0,0) = |a_0 - b_0|, rolling two rows. The floating-point
    association is identical to the textbook recursion, so results match a
    recursive oracle exactly.
    """
    n = a.shape[0]
    m = b.shape[0]
    prev = np.empty(m)
    cur = np.empty(m)
    prev[0] = abs(a[0] - b[0])
    for j in range(1, m):
        prev[j] = abs(a[0] - b[j]) + prev[j - 1]
    for i in range(1, n):
        cur[0] = abs(a[i] - b[0]) + prev[0]
        for j in range(1, m):
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = abs(a[i] - b[j]) + best
        tmp = prev
        prev = cur
        cur = tmp
    return prev[m - 1]


@njit(**_JIT)
def lms_row_sums(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row sums of the local-maxima/minima scalograms of ``x``.

    For each scale k = 1..floor(N/2)-1 counts interior samples that dominate
    both neighbours at distance k (maxima) or are dominated by both
    (minima). Only fully in-range comparisons contribute, so the scale
    statistics are not biased by the window edges.
    """
    n = x.shape[0]
    kmax = n // 2 - 1
    up = np.zeros(kmax + 1, dtype=np.int64)
    dn = np.zeros(kmax + 1, dtype=np.int64)
    for k in range(1, kmax + 1):
        cu = 0
        cd = 0
        for i in range(k, n - k):
            lo = x[i - k]
            hi = x[i + k]
            v = x[i]
            if v > lo and v > hi:
                cu += 1
            elif v < lo and v < hi:
                cd += 1
        up[k] = cu
        dn[k] = cd
    return up, dn


@njit(**_JIT)
def lms_maxima_mask(x: np.ndarray, gamma: int) -> np.ndarray:
    """Samples that are local maxima of ``x`` at every scale k <= gamma.

    Comparisons are clipped at the window edges (a missing neighbour does
    not veto), but the two endpoint samples are never candidates because no
    scale compares them on both sides.
    """
    n = x.shape[0]
    ok = np.ones(n, dtype=np.bool_)
    ok[0] = False
    ok[n - 1] = False
    for k in range(1, gamma + 1):
        for i in range(1, n - 1):
            if not ok[i]:
                continue
            if i - k >= 0 and not (x[i] > x[i - k]):
                ok[i] = False
            elif i + k < n and not (x[i] > x[i + k]):
                ok[i] = False
    return ok


@njit(**_JIT)
def tree_apply(
    feature_index: np.ndarray,
    threshold: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    X: np.ndarray,
) -> np.ndarray:
    """Return the leaf node index reached by every row of ``X``."""
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for r in range(n):
        node = 0
        while feature_index[node] >= 0:
            if X[r, feature_index[node]] < threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = node
    return out
