"""Gradient/Hessian histograms over binned features (numba kernels).

Each feature's histogram is owned by exactly one worker, so the parallel
build is a deterministic fixed-order reduction: results do not depend on
the thread count. Sibling histograms come from parent - child subtraction.
"""
from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(parallel=True, cache=True, fastmath=False)
def _hist_kernel(binned, rows, g, h, out_g, out_h, out_c):
    F = binned.shape[1]
    for k in prange(F):
        for i in range(rows.shape[0]):
            r = rows[i]
            b = binned[r, k]
            out_g[k, b] += g[r]
            out_h[k, b] += h[r]
            out_c[k, b] += 1.0


@njit(cache=True)
def _partition_kernel(binned, rows, feature, threshold_bin, left, right):
    nl = 0
    nr = 0
    for i in range(rows.shape[0]):
        r = rows[i]
        if binned[r, feature] <= threshold_bin:
            left[nl] = r
            nl += 1
        else:
            right[nr] = r
            nr += 1
    return nl


class Histogram:
    """Per-(feature, bin) sums of g, h and row counts for one node."""

    __slots__ = ("g", "h", "c")

    def __init__(self, g, h, c):
        self.g, self.h, self.c = g, h, c

    @property
    def totals(self):
        return float(self.g[0].sum()), float(self.h[0].sum()), int(self.c[0].sum())

    def subtract(self, child: "Histogram") -> "Histogram":
        return Histogram(self.g - child.g, self.h - child.h, self.c - child.c)


def build_histogram(binned: np.ndarray, rows: np.ndarray, g: np.ndarray,
                    h: np.ndarray, n_bins_max: int) -> Histogram:
    F = binned.shape[1]
    out_g = np.zeros((F, n_bins_max))
    out_h = np.zeros((F, n_bins_max))
    out_c = np.zeros((F, n_bins_max))
    _hist_kernel(binned, np.ascontiguousarray(rows, dtype=np.int64),
                 g, h, out_g, out_h, out_c)
    return Histogram(out_g, out_h, out_c)


def partition_rows(binned: np.ndarray, rows: np.ndarray, feature: int,
                   threshold_bin: int):
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    left = np.empty_like(rows)
    right = np.empty_like(rows)
    nl = _partition_kernel(binned, rows, feature, threshold_bin, left, right)
    return left[:nl].copy(), right[:rows.shape[0] - nl].copy()
