"""Leaf-wise tree growth: always split the current highest-gain leaf."""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .histogram import Histogram, build_histogram, partition_rows
from .splitting import find_best_split, leaf_value


@njit(cache=True)
def _walk_binned(binned, rows, feature, bin_thr, left, right, value, out):
    for i in range(rows.shape[0]):
        r = rows[i]
        node = 0
        while feature[node] >= 0:
            if binned[r, feature[node]] <= bin_thr[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]


@njit(cache=True)
def _walk_raw(X, feature, threshold, left, right, value, out):
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]


@dataclass
class Tree:
    """One regression tree: parallel node arrays, root at index 0.

    ``feature`` is -1 at leaves. Split thresholds are stored both as bin
    ids (training-time partitions) and raw values (inference needs no
    BinIndex).
    """
    feature: np.ndarray       # int32
    bin_threshold: np.ndarray  # int32
    threshold: np.ndarray     # float64 raw upper edge
    left: np.ndarray          # int32
    right: np.ndarray         # int32
    value: np.ndarray         # float64 leaf weight (unscaled by learning rate)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict_binned(self, binned: np.ndarray, rows: np.ndarray) -> np.ndarray:
        out = np.empty(rows.shape[0])
        _walk_binned(binned, np.ascontiguousarray(rows, dtype=np.int64),
                     self.feature, self.bin_threshold, self.left, self.right,
                     self.value, out)
        return out

    def predict_raw(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0])
        _walk_raw(np.ascontiguousarray(X, dtype=np.float64), self.feature,
                  self.threshold, self.left, self.right, self.value, out)
        return out

    def to_dict(self) -> dict:
        return {"feature": self.feature.tolist(),
                "threshold": self.threshold.tolist(),
                "bin_threshold": self.bin_threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "value": self.value.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(feature=np.asarray(d["feature"], dtype=np.int32),
                   bin_threshold=np.asarray(d["bin_threshold"], dtype=np.int32),
                   threshold=np.asarray(d["threshold"], dtype=np.float64),
                   left=np.asarray(d["left"], dtype=np.int32),
                   right=np.asarray(d["right"], dtype=np.int32),
                   value=np.asarray(d["value"], dtype=np.float64))


@dataclass
class _Leaf:
    node_id: int
    rows: np.ndarray
    hist: Histogram
    g: float
    h: float
    n: int
    depth: int
    lo: float
    hi: float
    split: object = None    # SplitCandidate or None


def grow_tree(binned: np.ndarray, rows: np.ndarray, g: np.ndarray, h: np.ndarray,
              bin_index, params, mono: np.ndarray,
              feature_mask: np.ndarray = None) -> Tree:
    """Grow one tree for one class from per-row gradients/Hessians."""
    n_bins_max = bin_index.max_bins_used
    lam, gamma = params.lam, params.gamma

    feature = [np.int32(-1)]
    bin_thr = [np.int32(0)]
    threshold = [0.0]
    left = [np.int32(-1)]
    right = [np.int32(-1)]
    values = [0.0]

    def new_node():
        feature.append(np.int32(-1))
        bin_thr.append(np.int32(0))
        threshold.append(0.0)
        left.append(np.int32(-1))
        right.append(np.int32(-1))
        values.append(0.0)
        return len(feature) - 1

    root_hist = build_histogram(binned, rows, g, h, n_bins_max)
    g_t, h_t, n_t = root_hist.totals
    root = _Leaf(node_id=0, rows=np.ascontiguousarray(rows, dtype=np.int64),
                 hist=root_hist, g=g_t, h=h_t, n=n_t, depth=0,
                 lo=-np.inf, hi=np.inf)

    def evaluate(leaf: _Leaf):
        if (params.max_leaves <= 1 or leaf.depth >= params.max_depth
                or leaf.n < 2 * params.min_data_in_leaf):
            leaf.split = None
            return
        leaf.split = find_best_split(
            leaf.hist, leaf.g, leaf.h, leaf.n, lam, gamma,
            params.min_data_in_leaf, mono, leaf.lo, leaf.hi, feature_mask)

    evaluate(root)
    heap = []
    counter = 0
    if root.split is not None:
        heapq.heappush(heap, (-root.split.gain, counter, root))
    leaves = {0: root}

    while heap and len(leaves) < params.max_leaves:
        _, _, leaf = heapq.heappop(heap)
        if leaf.node_id not in leaves or leaf.split is None:
            continue
        sp = leaf.split
        rows_l, rows_r = partition_rows(binned, leaf.rows, sp.feature, sp.bin_id)

        # build the smaller child's histogram; derive the sibling by subtraction
        if rows_l.shape[0] <= rows_r.shape[0]:
            hist_l = build_histogram(binned, rows_l, g, h, n_bins_max)
            hist_r = leaf.hist.subtract(hist_l)
        else:
            hist_r = build_histogram(binned, rows_r, g, h, n_bins_max)
            hist_l = leaf.hist.subtract(hist_r)

        nid_l, nid_r = new_node(), new_node()
        feature[leaf.node_id] = np.int32(sp.feature)
        bin_thr[leaf.node_id] = np.int32(sp.bin_id)
        threshold[leaf.node_id] = bin_index.threshold_of(sp.feature, sp.bin_id)
        left[leaf.node_id] = np.int32(nid_l)
        right[leaf.node_id] = np.int32(nid_r)

        child_l = _Leaf(node_id=nid_l, rows=rows_l, hist=hist_l,
                        g=sp.g_left, h=sp.h_left, n=sp.n_left,
                        depth=leaf.depth + 1, lo=sp.bound_lo_left, hi=sp.bound_hi_left)
        child_r = _Leaf(node_id=nid_r, rows=rows_r, hist=hist_r,
                        g=leaf.g - sp.g_left, h=leaf.h - sp.h_left,
                        n=leaf.n - sp.n_left,
                        depth=leaf.depth + 1, lo=sp.bound_lo_right, hi=sp.bound_hi_right)
        del leaves[leaf.node_id]
        leaf.hist = None
        for child in (child_l, child_r):
            evaluate(child)
            leaves[child.node_id] = child
            if child.split is not None:
                counter += 1
                heapq.heappush(heap, (-child.split.gain, counter, child))

    for leaf in leaves.values():
        values[leaf.node_id] = leaf_value(leaf.g, leaf.h, lam, leaf.lo, leaf.hi)

    return Tree(feature=np.asarray(feature, dtype=np.int32),
                bin_threshold=np.asarray(bin_thr, dtype=np.int32),
                threshold=np.asarray(threshold, dtype=np.float64),
                left=np.asarray(left, dtype=np.int32),
                right=np.asarray(right, dtype=np.int32),
                value=np.asarray(values, dtype=np.float64))
