"""Trained ensemble: per-class trees per round, persistence, inference."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ManifestMismatch
from .grower import Tree
from .loss import softmax_probs
from .params import CLASS_NAMES, MonotoneSpec, TrainParams

FORMAT_TAG = "lcpredict-gbdt-1"


@dataclass
class Ensemble:
    params: TrainParams
    n_features: int
    base_scores: np.ndarray        # (n_classes,)
    trees: list                    # [round][class] -> Tree
    manifest_hash: str = ""
    train_curve: list = field(default_factory=list)   # per-round weighted logloss
    provenance: dict = field(default_factory=dict)

    @property
    def n_classes(self) -> int:
        return len(self.base_scores)

    @property
    def n_rounds(self) -> int:
        return len(self.trees)

    def _check(self, X: np.ndarray):
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ManifestMismatch(self.n_features, X.shape[1] if X.ndim == 2 else X.shape)

    def raw_scores(self, X: np.ndarray) -> np.ndarray:
        """z_c = base_c + lr * sum of per-class tree outputs."""
        X = np.asarray(X, dtype=np.float64)
        self._check(X)
        z = np.tile(self.base_scores, (X.shape[0], 1))
        lr = self.params.learning_rate
        for per_class in self.trees:
            for c, tree in enumerate(per_class):
                z[:, c] += lr * tree.predict_raw(X)
        return z

    def predict_probs(self, X: np.ndarray) -> np.ndarray:
        return softmax_probs(self.raw_scores(X))

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_TAG,
            "params": self.params.to_dict(),
            "n_features": self.n_features,
            "classes": list(CLASS_NAMES[:self.n_classes]),
            "base_scores": self.base_scores.tolist(),
            "monotone": self.params.monotone.to_dict(self.n_features),
            "manifest_hash": self.manifest_hash,
            "train_curve": self.train_curve,
            "provenance": self.provenance,
            "trees": [[t.to_dict() for t in per_class] for per_class in self.trees],
        }

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), sort_keys=True,
                                   separators=(",", ":")))
        return path

    @classmethod
    def from_dict(cls, data: dict) -> "Ensemble":
        if data.get("format") != FORMAT_TAG:
            raise ValueError(f"unsupported model format {data.get('format')!r}")
        mono = MonotoneSpec.from_dict(data.get("monotone", {}))
        params = TrainParams.from_dict(data["params"], monotone=mono)
        return cls(
            params=params,
            n_features=int(data["n_features"]),
            base_scores=np.asarray(data["base_scores"], dtype=np.float64),
            trees=[[Tree.from_dict(t) for t in per_class] for per_class in data["trees"]],
            manifest_hash=data.get("manifest_hash", ""),
            train_curve=list(data.get("train_curve", [])),
            provenance=dict(data.get("provenance", {})))

    @classmethod
    def load(cls, path) -> "Ensemble":
        return cls.from_dict(json.loads(Path(path).read_text()))


def predict_probs(ensemble: Ensemble, X: np.ndarray) -> np.ndarray:
    return ensemble.predict_probs(X)
