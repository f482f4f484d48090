"""The boosting loop: one tree per class per round under shared softmax."""
from __future__ import annotations

import numpy as np

from ..errors import EmptyClassInTraining, ManifestMismatch
from .binning import bin_features
from .grower import grow_tree
from .loss import grad_hess, softmax_probs, weighted_logloss
from .model import Ensemble
from .params import CLASS_NAMES, TrainParams

N_CLASSES = 3


def goss_sample(g_norms: np.ndarray, a: float, b: float, seed):
    """Gradient-based one-side sampling.

    Keeps the ceil(a*n) rows with the largest gradient magnitudes, then
    uniformly samples ceil(b*n) of the rest with multiplier (1-a)/b.
    Returns (row indices, per-row multipliers).
    """
    n = g_norms.shape[0]
    if a >= 1.0:
        return np.arange(n, dtype=np.int64), np.ones(n)
    n_top = int(np.ceil(a * n))
    order = np.argsort(-g_norms, kind="stable")
    top = order[:n_top]
    rest = order[n_top:]
    n_rand = min(int(np.ceil(b * n)), rest.shape[0])
    if n_rand == 0:
        return np.sort(top), np.ones(n_top)
    rng = np.random.default_rng(seed)
    sampled = rng.choice(rest, size=n_rand, replace=False)
    rows = np.concatenate([top, sampled])
    mult = np.concatenate([np.ones(n_top), np.full(n_rand, (1.0 - a) / b)])
    order2 = np.argsort(rows, kind="stable")
    return rows[order2], mult[order2]


def train(X: np.ndarray, y: np.ndarray, params: TrainParams,
          row_weights: np.ndarray = None, manifest_hash: str = "",
          provenance: dict = None) -> Ensemble:
    """Fit a multiclass monotone-constrained GBDT. Deterministic under seed."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ManifestMismatch("(n, d) matrix with matching labels", X.shape)
    if not np.all(np.isfinite(X)):
        raise ValueError("training features must be finite (impute upstream)")
    counts = np.bincount(y, minlength=N_CLASSES)
    if len(counts) > N_CLASSES or counts.min() == 0:
        raise EmptyClassInTraining(f"class counts {counts.tolist()}")
    n, n_features = X.shape
    w = np.ones(n) if row_weights is None else np.asarray(row_weights, dtype=np.float64)

    bin_index = bin_features(X, params.max_bins)
    binned = bin_index.bin_matrix(X)
    mono = {c: params.monotone.vector(CLASS_NAMES[c], n_features) for c in range(N_CLASSES)}

    base = np.log(counts / counts.sum())
    scores = np.tile(base, (n, 1))
    rng_feat = np.random.default_rng([params.seed, 0xFEA7])
    all_rows = np.arange(n, dtype=np.int64)

    trees = []
    curve = []
    for r in range(params.num_rounds):
        probs = softmax_probs(scores)
        curve.append(weighted_logloss(y, probs, w))
        g, h = grad_hess(y, probs, w)

        if params.goss is not None:
            a, b = params.goss
            rows, mult = goss_sample(np.abs(g).sum(axis=1), a, b,
                                     seed=[params.seed, 0x6055, r])
            g_used = g.copy()
            h_used = h.copy()
            g_used[rows] *= mult[:, None]
            h_used[rows] *= mult[:, None]
        else:
            rows, g_used, h_used = all_rows, g, h

        feature_mask = None
        if params.feature_fraction < 1.0:
            n_keep = max(1, int(np.ceil(params.feature_fraction * n_features)))
            keep = rng_feat.choice(n_features, size=n_keep, replace=False)
            feature_mask = np.zeros(n_features, dtype=bool)
            feature_mask[keep] = True

        per_class = []
        for c in range(N_CLASSES):
            tree = grow_tree(binned, rows,
                             np.ascontiguousarray(g_used[:, c]),
                             np.ascontiguousarray(h_used[:, c]),
                             bin_index, params, mono[c], feature_mask)
            per_class.append(tree)
            scores[:, c] += params.learning_rate * tree.predict_binned(binned, all_rows)
        trees.append(per_class)

    probs = softmax_probs(scores)
    curve.append(weighted_logloss(y, probs, w))
    return Ensemble(params=params, n_features=n_features, base_scores=base,
                    trees=trees, manifest_hash=manifest_hash,
                    train_curve=curve, provenance=provenance or {})
