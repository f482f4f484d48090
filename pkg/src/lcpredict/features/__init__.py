from .extract import (FeatureExtractor, approach_rate, assemble_features,
                      behavior_features, closing_gap_time, extract_matrix,
                      lane_advantage, lane_position_features,
                      neighbor_interaction_features, normalized_distance,
                      ramp_features, rolling_stats, safe_gap_count,
                      safe_gap_indicator, safety_minima, time_to_gap)
from .fio import load_features, save_features, save_features_csv
from .manifest import FeatureManifest, build_manifest, load_manifest
from .stats import (CGT_CAP, CGT_EPS, GAP_CAP, NeighborStats, SAFETY_CAP,
                    SlotStats, V_FLOOR, WindowStats, compute_neighbor_stats,
                    fit_neighbor_stats)

__all__ = [n for n in dir() if not n.startswith("_")]
