"""Quantile feature binning for histogram-based split finding.

Bin v of feature k holds values in (cut[v-1], cut[v]], matching the
upper-inclusive histogram convention, so a split "at bin v" is the raw
test x <= cut[v]. When a feature has at most max_bins distinct values the
cuts are the midpoints between consecutive distinct values, which makes
histogram splits identical to exhaustive raw-threshold enumeration.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class BinIndex:
    cuts: list            # per feature: float64 ascending thresholds (len n_bins-1)
    n_bins: np.ndarray    # per feature

    @property
    def n_features(self) -> int:
        return len(self.cuts)

    @property
    def max_bins_used(self) -> int:
        return int(self.n_bins.max())

    def bin_column(self, values: np.ndarray, k: int) -> np.ndarray:
        return np.searchsorted(self.cuts[k], values, side="left")

    def bin_matrix(self, X: np.ndarray) -> np.ndarray:
        """Fortran-ordered (n, F) bin-id matrix (uint8 when it fits)."""
        n, F = X.shape
        dtype = np.uint8 if self.max_bins_used <= 256 else np.uint16
        out = np.empty((n, F), dtype=dtype, order="F")
        for k in range(F):
            out[:, k] = self.bin_column(X[:, k], k)
        return out

    def threshold_of(self, k: int, bin_id: int) -> float:
        """Raw-value upper edge of bin_id (the stored split threshold)."""
        return float(self.cuts[k][bin_id])


def bin_features(X: np.ndarray, max_bins: int = 255) -> BinIndex:
    """Quantile bin edges per feature over the training rows."""
    if max_bins < 2:
        raise ValueError("max_bins must be >= 2")
    X = np.asarray(X, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise ValueError("binning requires finite features (impute upstream)")
    cuts = []
    n_bins = []
    for k in range(X.shape[1]):
        col = X[:, k]
        distinct = np.unique(col)
        if distinct.size <= max_bins:
            edges = (distinct[:-1] + distinct[1:]) / 2.0
        else:
            qs = np.linspace(0.0, 1.0, max_bins + 1)[1:-1]
            edges = np.unique(np.quantile(col, qs))
        cuts.append(np.ascontiguousarray(edges, dtype=np.float64))
        n_bins.append(edges.size + 1)
    return BinIndex(cuts=cuts, n_bins=np.asarray(n_bins, dtype=np.int64))
