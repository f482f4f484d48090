"""Training parameters and per-(class, feature) monotone directions."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

CLASS_NAMES = ("NLC", "LLC", "RLC")


@dataclass(frozen=True)
class MonotoneSpec:
    """Resolved direction vectors: class name -> int8 array over features.

    +1 forces the class raw score to be non-decreasing in the feature,
    -1 non-increasing, 0 unconstrained.
    """
    directions: dict

    def vector(self, cls: str, n_features: int) -> np.ndarray:
        vec = self.directions.get(cls)
        if vec is None:
            return np.zeros(n_features, dtype=np.int8)
        vec = np.asarray(vec, dtype=np.int8)
        if vec.shape[0] != n_features:
            raise ValueError(f"monotone vector for {cls} has length {vec.shape[0]}, "
                             f"expected {n_features}")
        return vec

    def constrained_pairs(self, manifest=None):
        """[(class, feature index, direction)] for every non-zero entry."""
        out = []
        for cls, vec in self.directions.items():
            for i, d in enumerate(np.asarray(vec)):
                if d != 0:
                    name = manifest.names[i] if manifest is not None else i
                    out.append((cls, i, int(d), name))
        return out

    @classmethod
    def none(cls) -> "MonotoneSpec":
        return cls(directions={})

    @classmethod
    def from_pairs(cls, pairs: dict, manifest) -> "MonotoneSpec":
        """pairs: {(class_name, feature_name): direction}."""
        n = len(manifest)
        vecs = {c: np.zeros(n, dtype=np.int8) for c in CLASS_NAMES}
        for (c, name), d in pairs.items():
            vecs[c][manifest.index_of(name)] = d
        return cls(directions={c: v for c, v in vecs.items() if np.any(v)})

    @classmethod
    def from_manifest(cls, manifest) -> "MonotoneSpec":
        """The physics defaults shipped with the feature manifest."""
        vecs = {}
        for c in CLASS_NAMES:
            v = np.asarray(manifest.monotone_vector(c), dtype=np.int8)
            if np.any(v):
                vecs[c] = v
        return cls(directions=vecs)

    def to_dict(self, n_features: int) -> dict:
        return {c: self.vector(c, n_features).tolist() for c in self.directions}

    @classmethod
    def from_dict(cls, data: dict) -> "MonotoneSpec":
        return cls(directions={c: np.asarray(v, dtype=np.int8) for c, v in data.items()})


@dataclass(frozen=True)
class TrainParams:
    num_rounds: int = 100
    learning_rate: float = 0.1
    lam: float = 1.0            # L2 on leaf weights
    gamma: float = 0.0          # per-leaf split penalty
    max_leaves: int = 31
    max_depth: int = 12
    min_data_in_leaf: int = 20
    max_bins: int = 255
    feature_fraction: float = 1.0
    goss: tuple = None          # (a, b) fractions, or None to disable
    monotone: MonotoneSpec = field(default_factory=MonotoneSpec.none)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.lam < 0 or self.gamma < 0:
            raise ValueError("lam and gamma must be >= 0")
        if self.max_leaves < 2 and self.num_rounds > 0 and self.max_leaves != 1:
            raise ValueError("max_leaves must be >= 2 (or 1 for stump-free trees)")
        if not 0.0 < self.feature_fraction <= 1.0:
            raise ValueError("feature_fraction must be in (0, 1]")
        if self.max_bins < 2:
            raise ValueError("max_bins must be >= 2")
        if self.goss is not None:
            a, b = self.goss
            if not (0.0 < a <= 1.0 and 0.0 <= b and a + b <= 1.0):
                raise ValueError(f"GOSS fractions must satisfy 0<a<=1, b>=0, a+b<=1: {self.goss}")

    def with_monotone(self, spec: MonotoneSpec) -> "TrainParams":
        return replace(self, monotone=spec)

    def to_dict(self) -> dict:
        return {
            "num_rounds": self.num_rounds, "learning_rate": self.learning_rate,
            "lam": self.lam, "gamma": self.gamma, "max_leaves": self.max_leaves,
            "max_depth": self.max_depth, "min_data_in_leaf": self.min_data_in_leaf,
            "max_bins": self.max_bins, "feature_fraction": self.feature_fraction,
            "goss": list(self.goss) if self.goss else None, "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict, monotone: MonotoneSpec = None) -> "TrainParams":
        data = dict(data)
        goss = data.pop("goss", None)
        return cls(monotone=monotone or MonotoneSpec.none(),
                   goss=tuple(goss) if goss else None, **data)
