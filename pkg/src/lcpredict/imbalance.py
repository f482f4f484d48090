"""Class rebalancing: SMOTE-Tomek resampling, loss weights, threshold tuning.

SMOTE interpolates between a minority row and one of its k nearest
same-class neighbors (Euclidean in z-scored feature space, interpolation
in the original space); the Tomek step then removes the majority member
of every mutual-nearest-neighbor pair with differing labels. Class
weights follow the inverse-frequency power law w_i = (N / (K n_i))^alpha.
Decision thresholds divide each class probability before the argmax, so
a lowered minority threshold boosts its recall.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateValidation, EmptyClass, InvalidSimplex,
                     TooFewMinoritySamples)

N_CLASSES = 3


def _knn_indices(X: np.ndarray, k: int, chunk: int = 2048) -> np.ndarray:
    """k nearest neighbors (self excluded) by squared Euclidean distance.

    Brute force via chunked GEMM: tree indexes degenerate at this
    dimensionality. float32 is plenty for a neighbor ordering.
    """
    Xf = np.ascontiguousarray(X, dtype=np.float32)
    n = Xf.shape[0]
    sq = (Xf * Xf).sum(axis=1)
    out = np.empty((n, k), dtype=np.int64)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        d2 = sq[lo:hi, None] + sq[None, :] - 2.0 * (Xf[lo:hi] @ Xf.T)
        d2[np.arange(lo, hi) - lo, np.arange(lo, hi)] = np.inf
        if k == 1:
            out[lo:hi, 0] = d2.argmin(axis=1)
        else:
            part = np.argpartition(d2, k, axis=1)[:, :k]
            row_d = np.take_along_axis(d2, part, axis=1)
            order = np.argsort(row_d, axis=1, kind="stable")
            out[lo:hi] = np.take_along_axis(part, order, axis=1)
    return out


@dataclass(frozen=True)
class BalanceConfig:
    smote_k: int = 5
    target_ratio: tuple = (29.0, 1.0, 1.0)   # NLC : LLC : RLC
    alpha: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.smote_k < 1:
            raise ValueError("smote_k must be >= 1")
        if any(r <= 0 for r in self.target_ratio):
            raise ValueError("ratio terms must be positive")


@dataclass(frozen=True)
class ClassWeights:
    weights: tuple     # one positive weight per class, NLC/LLC/RLC order
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(not np.isfinite(w) or w <= 0 for w in self.weights):
            raise ValueError(f"weights must be finite and positive: {self.weights}")

    def per_row(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64)[np.asarray(y)]


@dataclass(frozen=True)
class ThresholdSet:
    tau: tuple = (1.0, 1.0, 1.0)     # NLC fixed at 1.0
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        for t in self.tau:
            if not 0.0 < t <= 1.0:
                raise ValueError(f"thresholds must lie in (0, 1]: {self.tau}")
        if self.tau[0] != 1.0:
            raise ValueError("the majority-class threshold stays fixed at 1.0")


def _zscore(X: np.ndarray):
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd < 1e-12, 1.0, sd)
    return (X - mu) / sd


def smote_oversample(X_min: np.ndarray, k: int, n_new: int, seed: int,
                     X_scale: np.ndarray = None) -> np.ndarray:
    """n_new synthetic rows interpolated toward k-NN same-class neighbors.

    ``X_scale`` (defaults to z-scored X_min) defines the metric for the
    neighbor search; interpolation happens in the original space.
    """
    X_min = np.asarray(X_min, dtype=np.float64)
    n = X_min.shape[0]
    if n < k + 1:
        raise TooFewMinoritySamples(f"need >= {k + 1} minority rows, have {n}")
    if n_new <= 0:
        return np.empty((0, X_min.shape[1]))
    scaled = _zscore(X_min) if X_scale is None else np.asarray(X_scale, dtype=np.float64)
    nn = _knn_indices(scaled, k)
    rng = np.random.default_rng(seed)
    base = rng.integers(0, n, size=n_new)
    pick = rng.integers(0, k, size=n_new)
    u = rng.uniform(0.0, 1.0, size=n_new)
    partners = nn[base, pick]
    return X_min[base] + u[:, None] * (X_min[partners] - X_min[base])


def _nearest_among(queries: np.ndarray, X: np.ndarray, query_idx: np.ndarray,
                   chunk: int = 2048) -> np.ndarray:
    """Global nearest neighbor of each query row (self excluded)."""
    Xf = np.ascontiguousarray(X, dtype=np.float32)
    Q = np.ascontiguousarray(queries, dtype=np.float32)
    sq = (Xf * Xf).sum(axis=1)
    out = np.empty(Q.shape[0], dtype=np.int64)
    for lo in range(0, Q.shape[0], chunk):
        hi = min(lo + chunk, Q.shape[0])
        d2 = sq[None, :] - 2.0 * (Q[lo:hi] @ Xf.T)   # query self-terms constant
        d2[np.arange(hi - lo), query_idx[lo:hi]] = np.inf
        out[lo:hi] = d2.argmin(axis=1)
    return out


MAJORITY_CLASS = 0    # NLC


def tomek_filter(X: np.ndarray, y: np.ndarray):
    """Remove the majority-class (NLC) member of each cross-class mutual-NN
    pair; links between the two minority classes lose neither member.

    Returns (X_kept, y_kept, removed_indices). Every removable link has a
    minority member, so the search anchors on minority rows.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    n = X.shape[0]
    if n < 2:
        return X, y, np.array([], dtype=np.int64)
    scaled = _zscore(X)
    anchors = np.nonzero(y != MAJORITY_CLASS)[0]
    if anchors.size == 0:
        return X, y, np.array([], dtype=np.int64)
    nn_a = _nearest_among(scaled[anchors], scaled, anchors)
    partners = np.unique(nn_a)
    nn_p = _nearest_among(scaled[partners], scaled, partners)
    nn_of_partner = dict(zip(partners.tolist(), nn_p.tolist()))
    remove = set()
    for i, j in zip(anchors.tolist(), nn_a.tolist()):
        if y[j] != MAJORITY_CLASS or nn_of_partner[j] != i:
            continue
        remove.add(j)
    removed = np.array(sorted(remove), dtype=np.int64)
    keep = np.setdiff1d(np.arange(n), removed, assume_unique=True)
    return X[keep], y[keep], removed


def smote_tomek(X: np.ndarray, y: np.ndarray, cfg: BalanceConfig):
    """Oversample minorities to the target ratio, then Tomek-clean.

    Returns (X_bal, y_bal, info) where info records synthetic counts and
    Tomek removals for provenance.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    counts = np.bincount(y, minlength=N_CLASSES)
    if counts.min() == 0:
        raise EmptyClass(f"class counts {counts.tolist()} contain an empty class")
    ratios = np.asarray(cfg.target_ratio, dtype=np.float64)
    majority = int(np.argmax(counts))
    blocks_X, blocks_y = [X], [y]
    n_synth = {}
    for c in range(N_CLASSES):
        if c == majority:
            continue
        target = int(round(counts[majority] * ratios[c] / ratios[majority]))
        n_new = target - counts[c]
        if n_new <= 0:
            continue
        synth = smote_oversample(X[y == c], cfg.smote_k, n_new,
                                 seed=cfg.seed * N_CLASSES + c + 1)
        blocks_X.append(synth)
        blocks_y.append(np.full(len(synth), c, dtype=np.int64))
        n_synth[c] = int(n_new)
    X_over = np.concatenate(blocks_X, axis=0)
    y_over = np.concatenate(blocks_y, axis=0)
    X_bal, y_bal, removed = tomek_filter(X_over, y_over)
    info = {"counts_before": counts.tolist(),
            "counts_after": np.bincount(y_bal, minlength=N_CLASSES).tolist(),
            "synthetic": n_synth, "tomek_removed": int(removed.size)}
    return X_bal, y_bal, info


def class_weights(counts, alpha: float) -> ClassWeights:
    """Inverse-frequency weights w_i = (N / (K n_i))^alpha."""
    n = np.asarray(counts, dtype=np.float64)
    if np.any(n <= 0):
        raise EmptyClass(f"class counts {counts} contain an empty class")
    N, K = n.sum(), len(n)
    w = (N / (K * n)) ** alpha
    return ClassWeights(weights=tuple(float(v) for v in w),
                        provenance={"counts": [int(v) for v in n], "alpha": alpha})


def apply_decision_rule(probs: np.ndarray, thresholds: ThresholdSet) -> np.ndarray:
    """argmax_c p_c / tau_c; first class wins ties (NLC < LLC < RLC)."""
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    sums = probs.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-6):
        bad = int(np.argmax(np.abs(sums - 1.0)))
        raise InvalidSimplex(f"row {bad} sums to {sums[bad]:.8f}")
    scores = probs / np.asarray(thresholds.tau)
    return scores.argmax(axis=1)


def calibrate_thresholds(probs: np.ndarray, labels: np.ndarray,
                         grid_step: float = 0.05) -> ThresholdSet:
    """Grid-search minority thresholds maximizing macro F1 on validation.

    Ties prefer larger thresholds (less aggressive deviation from argmax).
    """
    from .evaluation import macro_f1_from_predictions

    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    present = np.bincount(labels, minlength=N_CLASSES)
    if np.any(present == 0):
        missing = int(np.argmin(present))
        raise DegenerateValidation(f"class {missing} absent from validation labels")
    grid = np.round(np.arange(grid_step, 1.0 + 1e-9, grid_step), 10)
    best = (-1.0, 1.0, 1.0)
    for tau_llc in grid:
        for tau_rlc in grid:
            scores = probs / np.array([1.0, tau_llc, tau_rlc])
            pred = scores.argmax(axis=1)
            f1 = macro_f1_from_predictions(pred, labels)
            key = (f1, tau_llc, tau_rlc)
            if key > best:
                best = key
    return ThresholdSet(tau=(1.0, float(best[1]), float(best[2])),
                        provenance={"macro_f1": best[0], "grid_step": grid_step})
