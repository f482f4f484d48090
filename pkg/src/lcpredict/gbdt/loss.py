"""Multiclass softmax objective: probabilities, gradients, Hessians."""
from __future__ import annotations

import numpy as np

from ..errors import NonFiniteScore


def softmax_probs(scores: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-shift stabilization."""
    z = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise NonFiniteScore("raw scores contain non-finite values")
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def grad_hess(labels: np.ndarray, probs: np.ndarray, weights: np.ndarray = None):
    """Per-(row, class) g = w(p - y) and diagonal h = w p(1 - p).

    ``labels`` are integer class ids; the one-hot expansion happens here.
    """
    probs = np.asarray(probs, dtype=np.float64)
    n, k = probs.shape
    y = np.zeros_like(probs)
    y[np.arange(n), np.asarray(labels, dtype=np.int64)] = 1.0
    g = probs - y
    h = probs * (1.0 - probs)
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64)[:, None]
        g = g * w
        h = h * w
    return g, h


def weighted_logloss(labels: np.ndarray, probs: np.ndarray,
                     weights: np.ndarray = None, eps: float = 1e-15) -> float:
    """Weight-normalized multiclass cross-entropy."""
    probs = np.asarray(probs, dtype=np.float64)
    p_true = probs[np.arange(len(labels)), np.asarray(labels, dtype=np.int64)]
    logp = np.log(np.clip(p_true, eps, 1.0))
    if weights is None:
        return float(-logp.mean())
    w = np.asarray(weights, dtype=np.float64)
    return float(-(w * logp).sum() / w.sum())
