"""Cross-location evaluation: splits, grouped CV, metrics, smoothing, sweeps.

Training-side artifacts (stats, weights, model, thresholds) are fitted on
train-location data only and carry provenance tags so leakage is checkable.
Reports are deterministic; wall-clock timings live next to, never inside,
the report payload.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (EmptyPartition, LengthMismatch, MisalignedSequences,
                     TooFewGroups)
from .events import LABEL_TO_INT, build_samples, detect_events_for_recording
from .features import extract_matrix, fit_neighbor_stats, load_manifest
from .gbdt import MonotoneSpec, TrainParams, train
from .imbalance import (BalanceConfig, ClassWeights, ThresholdSet,
                        apply_decision_rule, calibrate_thresholds, class_weights,
                        smote_tomek)
from .trajectory import SamplingConfig

log = logging.getLogger(__name__)

N_CLASSES = 3


@dataclass(frozen=True)
class SplitSpec:
    train_locations: frozenset
    test_locations: frozenset
    cv_folds: int = 5
    fold_seed: int = 0

    def __post_init__(self):
        overlap = self.train_locations & self.test_locations
        if overlap:
            raise ValueError(f"train and test locations overlap: {sorted(overlap)}")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")

    @classmethod
    def of(cls, train, test, cv_folds: int = 5, fold_seed: int = 0) -> "SplitSpec":
        return cls(train_locations=frozenset(train), test_locations=frozenset(test),
                   cv_folds=cv_folds, fold_seed=fold_seed)


@dataclass
class EvalReport:
    confusion: np.ndarray          # (3, 3), rows = true, cols = predicted
    accuracy: float
    precision: tuple
    recall: tuple
    f1: tuple
    macro_f1: float
    n_samples: int
    params_hash: str = ""
    data_hash: str = ""
    runtime_stats: dict = field(default_factory=dict)   # never serialized

    def to_dict(self) -> dict:
        return {
            "confusion": self.confusion.tolist(),
            "accuracy": self.accuracy,
            "precision": list(self.precision),
            "recall": list(self.recall),
            "f1": list(self.f1),
            "macro_f1": self.macro_f1,
            "n_samples": self.n_samples,
            "params_hash": self.params_hash,
            "data_hash": self.data_hash,
        }


def split_by_location(samples, spec: SplitSpec):
    """Partition samples by location membership; orphans are dropped."""
    train, test, dropped = [], [], 0
    for s in samples:
        if s.location_id in spec.train_locations:
            train.append(s)
        elif s.location_id in spec.test_locations:
            test.append(s)
        else:
            dropped += 1
    if dropped:
        log.warning("split_by_location: dropped %d samples outside both partitions", dropped)
    if not train or not test:
        raise EmptyPartition(f"train={len(train)}, test={len(test)} after location split")
    return train, test


def kfold_cv(samples, folds: int, seed: int) -> np.ndarray:
    """Per-sample fold ids; all samples of one track share a fold."""
    if folds < 2:
        raise ValueError("folds must be >= 2")
    keys = sorted({(s.recording_id, s.track_id) for s in samples})
    if len(keys) < folds:
        raise TooFewGroups(f"{len(keys)} track groups < {folds} folds")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(keys))
    sizes = {}
    for s in samples:
        sizes[(s.recording_id, s.track_id)] = sizes.get((s.recording_id, s.track_id), 0) + 1
    fold_of = {}
    load = np.zeros(folds, dtype=np.int64)
    for i in sorted(order.tolist(), key=lambda i: -sizes[keys[i]]):
        f = int(np.argmin(load))
        fold_of[keys[i]] = f
        load[f] += sizes[keys[i]]
    return np.asarray([fold_of[(s.recording_id, s.track_id)] for s in samples],
                      dtype=np.int64)


def compute_metrics(predictions, labels) -> EvalReport:
    """Confusion-derived metrics; per-class F1 = 0 when P + R = 0."""
    pred = np.asarray(predictions, dtype=np.int64)
    y = np.asarray(labels, dtype=np.int64)
    if pred.shape[0] != y.shape[0]:
        raise LengthMismatch(f"{pred.shape[0]} predictions vs {y.shape[0]} labels")
    conf = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(conf, (y, pred), 1)
    tp = np.diag(conf).astype(np.float64)
    fp = conf.sum(axis=0) - tp
    fn = conf.sum(axis=1) - tp
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(tp + fp > 0, tp / (tp + fp), 0.0)
        recall = np.where(tp + fn > 0, tp / (tp + fn), 0.0)
        f1 = np.where(precision + recall > 0,
                      2 * precision * recall / (precision + recall), 0.0)
    return EvalReport(
        confusion=conf, accuracy=float(tp.sum() / max(len(y), 1)),
        precision=tuple(precision), recall=tuple(recall), f1=tuple(f1),
        macro_f1=float(f1.mean()), n_samples=int(len(y)))


def macro_f1_from_predictions(predictions, labels) -> float:
    return compute_metrics(predictions, labels).macro_f1


def smooth_probabilities(probs: np.ndarray, window: int = 5) -> np.ndarray:
    """Centered moving average along the sequence axis, edges truncated."""
    probs = np.asarray(probs, dtype=np.float64)
    if window <= 1 or probs.shape[0] <= 1:
        return probs.copy()
    kernel = np.ones(window)
    den = np.convolve(np.ones(probs.shape[0]), kernel, mode="same")
    out = np.empty_like(probs)
    for c in range(probs.shape[1]):
        out[:, c] = np.convolve(probs[:, c], kernel, mode="same") / den
    return out / out.sum(axis=1, keepdims=True)


def smooth_and_validate(probs: np.ndarray, safe_gap_counts: dict,
                        availability: dict, thresholds: ThresholdSet,
                        window: int = 5) -> np.ndarray:
    """Smooth a per-frame probability sequence, decide, then suppress
    physically contradicted minority decisions to NLC (never flip direction).

    ``safe_gap_counts`` and ``availability`` map 'left'/'right' to per-frame
    arrays for the corresponding side.
    """
    probs = np.asarray(probs, dtype=np.float64)
    n = probs.shape[0]
    for side in ("left", "right"):
        if len(safe_gap_counts[side]) != n or len(availability[side]) != n:
            raise MisalignedSequences(
                f"{side} feature sequences do not match {n} probability rows")
    smoothed = smooth_probabilities(probs, window)
    decided = apply_decision_rule(smoothed, thresholds)
    out = decided.copy()
    for cls, side in ((LABEL_TO_INT["LLC"], "left"), (LABEL_TO_INT["RLC"], "right")):
        mask = (decided == cls) \
            & (np.asarray(safe_gap_counts[side]) == 0) \
            & (np.asarray(availability[side]) < 0)
        out[mask] = LABEL_TO_INT["NLC"]
    return out


# --- experiment cells -------------------------------------------------------

@dataclass
class CellResult:
    W: float
    T: float
    report_argmax: EvalReport
    report_calibrated: EvalReport
    report_smoothed: EvalReport
    thresholds: ThresholdSet
    model: object
    stats: object
    info: dict


def _median_on_grid(values):
    """Lower median: deterministic and always one of the calibrated values."""
    s = sorted(values)
    return s[(len(s) - 1) // 2]


def cross_validated_thresholds(X, y, groups, spec: SplitSpec,
                               balance_cfg: BalanceConfig, params: TrainParams) -> ThresholdSet:
    """Fit on k-1 folds, calibrate on the held-out fold, aggregate by median.

    Fold assignment runs on real samples (synthetic rows carry no track
    group), so each fold regenerates its synthetic rows from its own
    training rows and validates on held-out real rows only.
    """
    folds = kfold_cv(groups, spec.cv_folds, spec.fold_seed)
    taus = []
    for f in range(spec.cv_folds):
        tr, va = folds != f, folds == f
        if np.bincount(y[va], minlength=N_CLASSES).min() == 0:
            log.warning("fold %d lacks a class in validation; skipped", f)
            continue
        X_tr, y_tr = X[tr], y[tr]
        X_bal, y_bal, _ = smote_tomek(X_tr, y_tr, balance_cfg)
        weights = class_weights(np.bincount(y_bal, minlength=N_CLASSES), balance_cfg.alpha)
        model = train(X_bal, y_bal, params, row_weights=weights.per_row(y_bal))
        probs = model.predict_probs(X[va])
        taus.append(calibrate_thresholds(probs, y[va]).tau)
    if not taus:
        return ThresholdSet()
    tau = tuple(_median_on_grid([t[c] for t in taus]) for c in range(N_CLASSES))
    return ThresholdSet(tau=(1.0, tau[1], tau[2]),
                        provenance={"folds": len(taus), "per_fold": list(map(list, taus))})


def run_cell(recordings, events_by_recording, W: float, T: float, stride: int,
             profile: str, spec: SplitSpec, balance_cfg: BalanceConfig,
             params: TrainParams, manifest=None, calibrate: bool = True,
             smooth_window: int = 5, balance: bool = True) -> CellResult:
    """One full train/evaluate run at a fixed (W, T).

    ``smooth_window`` is in frames; anchor sequences are ``stride`` frames
    apart, so the effective anchor-level window is smooth_window/stride.
    """
    manifest = manifest or load_manifest(profile)
    f_s = recordings[0].f_s
    cfg = SamplingConfig(f_s=f_s, history_window=W, horizon=T, stride=stride)
    samples = []
    for rec in recordings:
        samples.extend(build_samples(rec, events_by_recording[rec.recording_id], cfg))
    train_samples, test_samples = split_by_location(samples, spec)

    train_recs = [r for r in recordings if r.location_id in spec.train_locations]
    train_events = {r.recording_id: events_by_recording[r.recording_id] for r in train_recs}
    stats = fit_neighbor_stats(train_recs, train_events, train_samples)

    X_tr, y_tr, _ = extract_matrix(train_samples, recordings, stats, manifest,
                                   events_by_recording)
    X_te, y_te, index_te = extract_matrix(test_samples, recordings, stats, manifest,
                                          events_by_recording)

    if balance:
        X_bal, y_bal, bal_info = smote_tomek(X_tr, y_tr, balance_cfg)
    else:
        X_bal, y_bal, bal_info = X_tr, y_tr, {"balanced": False}
    weights = class_weights(np.bincount(y_bal, minlength=N_CLASSES), balance_cfg.alpha)
    model = train(X_bal, y_bal, params, row_weights=weights.per_row(y_bal),
                  manifest_hash=manifest.content_hash(),
                  provenance={"train_locations": sorted(spec.train_locations)})

    thresholds = ThresholdSet()
    if calibrate:
        can_fold = len({(s.recording_id, s.track_id) for s in train_samples}) >= spec.cv_folds
        if can_fold and np.bincount(y_tr, minlength=N_CLASSES).min() > 0:
            thresholds = cross_validated_thresholds(X_tr, y_tr, train_samples, spec,
                                                    balance_cfg, params)
        else:
            log.warning("threshold calibration skipped: too few groups or classes")

    probs_te = model.predict_probs(X_te)
    pred_argmax = probs_te.argmax(axis=1)
    pred_cal = apply_decision_rule(probs_te, thresholds)
    anchor_window = max(1, int(round(smooth_window / stride)))
    pred_smooth = _smoothed_predictions(probs_te, X_te, index_te, manifest,
                                        thresholds, anchor_window)

    report_argmax = compute_metrics(pred_argmax, y_te)
    report_cal = compute_metrics(pred_cal, y_te)
    report_smooth = compute_metrics(pred_smooth, y_te)
    return CellResult(W=W, T=T, report_argmax=report_argmax,
                      report_calibrated=report_cal, report_smoothed=report_smooth,
                      thresholds=thresholds, model=model, stats=stats,
                      info={"n_train": len(train_samples), "n_test": len(test_samples),
                            "balance": bal_info})


def _smoothed_predictions(probs, X, index, manifest, thresholds, window):
    """Per-track temporal smoothing + safe-gap suppression over anchor order."""
    cols = {name: manifest.index_of(name) for name in
            ("safe_gap_count_left", "safe_gap_count_right",
             "lane_adv_left_min", "lane_adv_right_min")}
    out = np.empty(probs.shape[0], dtype=np.int64)
    by_track = {}
    for i, (rid, _loc, tid, anchor) in enumerate(index):
        by_track.setdefault((rid, tid), []).append((anchor, i))
    for rows in by_track.values():
        rows.sort()
        idx = np.asarray([i for _, i in rows])
        out[idx] = smooth_and_validate(
            probs[idx],
            {"left": X[idx, cols["safe_gap_count_left"]],
             "right": X[idx, cols["safe_gap_count_right"]]},
            {"left": X[idx, cols["lane_adv_left_min"]],
             "right": X[idx, cols["lane_adv_right_min"]]},
            thresholds, window)
    return out


def run_sweep(recordings, W_set, T_set, stride: int, profile: str,
              spec: SplitSpec, balance_cfg: BalanceConfig, params: TrainParams,
              detect_params=None, **cell_kwargs):
    """Full (W, T) grid; returns (cells, best_W_per_T, plot-ready rows)."""
    from .events import DetectParams

    detect_params = detect_params or DetectParams()
    events_by_recording = {r.recording_id: detect_events_for_recording(r, detect_params)
                           for r in recordings}
    cells = []
    for T in T_set:
        for W in W_set:
            cells.append(run_cell(recordings, events_by_recording, W, T, stride,
                                  profile, spec, balance_cfg, params, **cell_kwargs))
    best = {}
    for cell in cells:
        cur = best.get(cell.T)
        if cur is None or cell.report_calibrated.macro_f1 > cur.report_calibrated.macro_f1:
            best[cell.T] = cell
    rows = [sweep_row(c) for c in cells]
    return cells, {T: c.W for T, c in best.items()}, rows


def sweep_row(cell: CellResult) -> dict:
    r = cell.report_calibrated
    row = {"W": cell.W, "T": cell.T,
           "accuracy": r.accuracy, "macro_f1": r.macro_f1,
           "nlc_f1": r.f1[0], "llc_f1": r.f1[1], "rlc_f1": r.f1[2],
           "accuracy_argmax": cell.report_argmax.accuracy,
           "macro_f1_argmax": cell.report_argmax.macro_f1,
           "macro_f1_smoothed": cell.report_smoothed.macro_f1,
           "n_train": cell.info["n_train"], "n_test": cell.info["n_test"]}
    return row
