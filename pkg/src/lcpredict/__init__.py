"""Lane-change intention prediction from drone-recorded highway trajectories.

Pipeline stages: ingest (or synthesize) recordings, label lane-change
events, extract physics-guided features, rebalance, train a monotone-
constrained multiclass GBDT, and evaluate across held-out locations.
"""

__version__ = "0.1.0"

import os as _os

# the default TBB layer on this image is too old and warns; OpenMP is fine
_os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

from . import (errors, events, evaluation, features, gbdt, imbalance,
               ingestion, synthgen, trajectory)

__all__ = ["errors", "events", "evaluation", "features", "gbdt", "imbalance",
           "ingestion", "synthgen", "trajectory", "__version__"]
