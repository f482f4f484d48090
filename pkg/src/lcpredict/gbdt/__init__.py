from .binning import BinIndex, bin_features
from .grower import Tree, grow_tree
from .histogram import Histogram, build_histogram, partition_rows
from .loss import grad_hess, softmax_probs, weighted_logloss
from .model import Ensemble, predict_probs
from .params import CLASS_NAMES, MonotoneSpec, TrainParams
from .splitting import SplitCandidate, find_best_split, leaf_value, split_gain
from .training import goss_sample, train

__all__ = [n for n in dir() if not n.startswith("_")]
