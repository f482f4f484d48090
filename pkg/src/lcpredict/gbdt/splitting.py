"""Split gain evaluation with monotone-constraint enforcement.

A candidate split is rejected when either child would fall under
min_data_in_leaf, when its regularized gain is not positive, or when a
monotone direction on the feature would be violated by the provisional
leaf values (-G/(H+lambda), clipped to the node's value bounds). Accepted
constrained splits tighten the children's bounds through the midpoint of
the two provisional values, which is what guarantees monotonicity of the
finished tree.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SplitCandidate:
    feature: int
    bin_id: int
    gain: float
    g_left: float
    h_left: float
    n_left: int
    value_left: float       # provisional, clipped to node bounds
    value_right: float
    bound_lo_left: float    # children's inherited value bounds
    bound_hi_left: float
    bound_lo_right: float
    bound_hi_right: float


def split_gain(g_l, h_l, g_r, h_r, lam: float, gamma: float) -> float:
    """Regularized loss reduction of a single split."""
    parent = (g_l + g_r) ** 2 / (h_l + h_r + lam)
    return 0.5 * (g_l**2 / (h_l + lam) + g_r**2 / (h_r + lam) - parent) - gamma


def leaf_value(g: float, h: float, lam: float, lo=-np.inf, hi=np.inf) -> float:
    return float(np.clip(-g / (h + lam), lo, hi))


def find_best_split(hist, node_g: float, node_h: float, node_n: int,
                    lam: float, gamma: float, min_data_in_leaf: int,
                    mono: np.ndarray, bound_lo: float, bound_hi: float,
                    feature_mask: np.ndarray = None):
    """Best admissible (feature, bin) over the histogram, or None."""
    GL = np.cumsum(hist.g, axis=1)[:, :-1]
    HL = np.cumsum(hist.h, axis=1)[:, :-1]
    CL = np.cumsum(hist.c, axis=1)[:, :-1]
    GR = node_g - GL
    HR = node_h - HL
    CR = node_n - CL

    with np.errstate(divide="ignore", invalid="ignore"):
        gains = 0.5 * (GL**2 / (HL + lam) + GR**2 / (HR + lam)
                       - node_g**2 / (node_h + lam)) - gamma
        wl = np.clip(-GL / (HL + lam), bound_lo, bound_hi)
        wr = np.clip(-GR / (HR + lam), bound_lo, bound_hi)

    ok = (CL >= min_data_in_leaf) & (CR >= min_data_in_leaf) & (gains > 0)
    if feature_mask is not None:
        ok &= feature_mask[:, None]
    dirs = mono[:, None]
    ok &= ~((dirs > 0) & (wl > wr))
    ok &= ~((dirs < 0) & (wl < wr))
    if not ok.any():
        return None

    gains = np.where(ok, gains, -np.inf)
    flat = int(np.argmax(gains))          # first max: smallest feature, then bin
    k, v = divmod(flat, gains.shape[1])
    d = int(mono[k])
    vl, vr = float(wl[k, v]), float(wr[k, v])
    lo_l, hi_l, lo_r, hi_r = bound_lo, bound_hi, bound_lo, bound_hi
    if d != 0:
        mid = 0.5 * (vl + vr)
        if d > 0:
            hi_l = min(bound_hi, mid)
            lo_r = max(bound_lo, mid)
        else:
            lo_l = max(bound_lo, mid)
            hi_r = min(bound_hi, mid)
    return SplitCandidate(
        feature=int(k), bin_id=int(v), gain=float(gains[k, v]),
        g_left=float(GL[k, v]), h_left=float(HL[k, v]), n_left=int(CL[k, v]),
        value_left=vl, value_right=vr,
        bound_lo_left=lo_l, bound_hi_left=hi_l,
        bound_lo_right=lo_r, bound_hi_right=hi_r)
