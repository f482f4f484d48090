"""Physics-guided feature computation over a sample's history window.

Every operation reads frames up to and including the anchor, never past
it. Absent inputs are imputed (gap cap for empty slots, safety cap plus a
presence flag for DHW/THW/TTC) so assembled vectors are always finite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import (DegenerateStats, EmptySeries, ManifestMismatch,
                      NoRampGeometry, UnknownLane)
from ..trajectory import LaneGeometry, SLOT_NAMES, Track
from .manifest import FeatureManifest
from .stats import (CGT_CAP, CGT_EPS, GAP_CAP, NeighborStats, SAFETY_CAP,
                    V_FLOOR, WindowStats)


def rolling_stats(series) -> WindowStats:
    """Mean/std/min/max of a scalar series (the trailing-window slice)."""
    arr = np.asarray(series, dtype=np.float64)
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        raise EmptySeries("rolling_stats over an empty window")
    return WindowStats(mean=float(arr.mean()), std=float(arr.std()),
                       min=float(arr.min()), max=float(arr.max()))


def normalized_distance(d: float, stats: NeighborStats, slot: str):
    """Eq.-style scale-free gap measures: z = (d-mu)/sigma, s = d/mu."""
    st = stats.gap[slot]
    if st.std == 0 or st.mean == 0:
        raise DegenerateStats(f"slot {slot}: mu={st.mean}, sigma={st.std}")
    return (d - st.mean) / st.std, d / st.mean


def safe_gap_indicator(d, stats: NeighborStats, slot: str, occupied: bool = True) -> int:
    """1 iff the gap strictly exceeds mu + 2*sigma; an empty slot is safe."""
    if not occupied:
        return 1
    st = stats.gap[slot]
    return 1 if d > st.mean + 2.0 * st.std else 0


def safe_gap_count(gaps: dict, occupied: dict, stats: NeighborStats,
                   slots=SLOT_NAMES) -> int:
    return sum(safe_gap_indicator(gaps[s], stats, s, occupied[s]) for s in slots)


def lane_advantage(gaps: dict, side: str):
    """(delta_lead, delta_rear, min) comparing an adjacent lane to ego lane."""
    d_lead = gaps[f"{side}_lead"] - gaps["ego_lead"]
    d_rear = gaps[f"{side}_rear"] - gaps["ego_rear"]
    return d_lead, d_rear, min(d_lead, d_rear)


def time_to_gap(d: float, v_ego: float, stats: NeighborStats, slot: str,
                v_floor: float = V_FLOOR):
    """Residual following time d/v and its training-set z-score."""
    t = d / max(v_ego, v_floor)
    st = stats.ttg[slot]
    z = (t - st.mean) / st.std if st.std > 0 else 0.0
    return t, z


def closing_gap_time(d: float, dv: float, eps: float = CGT_EPS,
                     cap: float = CGT_CAP) -> float:
    """Time for the current speed difference to close the gap, capped."""
    return min(d / (abs(dv) + eps), cap)


def approach_rate(dv: float, role: str) -> float:
    """Closing speed toward the neighbor, 0 when opening.

    For a lead slot the gap closes when dv = v_n - v_e < 0; for a rear slot
    when the follower is faster (dv > 0).
    """
    closing = -dv if role == "lead" else dv
    return max(closing, 0.0)


def neighbor_interaction_features(track: Track, pos: int, gap_cap: float = GAP_CAP):
    """Per-slot gap/dv/da/approach with imputation, plus occupancy ratio."""
    gaps, dvs, das, rates, occupied = {}, {}, {}, {}, {}
    n_occ = 0
    for slot in SLOT_NAMES:
        occ = not np.isnan(track.neighbor_ids[slot][pos])
        occupied[slot] = occ
        if occ:
            n_occ += 1
            gaps[slot] = float(track.neighbor_gaps[slot][pos])
            dvs[slot] = float(track.neighbor_dvs[slot][pos])
            das[slot] = float(track.neighbor_das[slot][pos])
        else:
            gaps[slot], dvs[slot], das[slot] = gap_cap, 0.0, 0.0
        role = "lead" if slot.endswith("lead") else "rear"
        rates[slot] = approach_rate(dvs[slot], role)
    return {"gaps": gaps, "dvs": dvs, "das": das, "approach": rates,
            "occupied": occupied, "occupancy_ratio": n_occ / len(SLOT_NAMES)}


def lane_position_features(track: Track, geometry: LaneGeometry, anchor: int,
                           window_frames: int, roll_frames: int):
    """Offsets, boundary distances, their first differences, window stats."""
    pos = track.position_of(anchor)
    lane_raw = track.columns["lane_id"][pos]
    if np.isnan(lane_raw):
        raise UnknownLane(f"track {track.track_id} frame {anchor} has no lane id")
    lane = geometry.lane_by_id(track.driving_direction, int(lane_raw))
    if lane is None:
        raise UnknownLane(f"lane {int(lane_raw)} not in geometry")
    y = track.columns["y"]
    offset = float(y[pos] - lane.center)
    dist_left = float(lane.left_bound - y[pos])
    dist_right = float(y[pos] - lane.right_bound)
    if pos > 0:
        dy = float(y[pos] - y[pos - 1])
    else:
        dy = 0.0
    lo = max(0, pos - window_frames + 1)
    window_y = y[lo:pos + 1]
    roll_lo = max(lo, pos - roll_frames + 1)
    offset_mean = float(np.mean(y[roll_lo:pos + 1] - lane.center))
    cum_disp = float(np.sum(np.abs(np.diff(window_y)))) if window_y.size > 1 else 0.0
    return {
        "lateral_offset": offset,
        "dist_left_boundary": dist_left, "dist_right_boundary": dist_right,
        "lateral_offset_diff": dy,
        "dist_left_boundary_diff": -dy, "dist_right_boundary_diff": dy,
        "lateral_offset_mean_1s": offset_mean,
        "cum_lateral_displacement": cum_disp,
    }


def safety_minima(track: Track, anchor: int, window_frames: int,
                  cap: float = SAFETY_CAP):
    """Per-metric minimum over present values in the history window."""
    pos = track.position_of(anchor)
    lo = max(0, pos - window_frames + 1)
    out = {}
    for name in ("dhw", "thw", "ttc"):
        vals = track.columns[name][lo:pos + 1]
        vals = vals[np.isfinite(vals)]
        if vals.size:
            out[f"{name}_min_w"] = float(vals.min())
            out[f"{name}_present"] = 1.0
        else:
            out[f"{name}_min_w"] = cap
            out[f"{name}_present"] = 0.0
    return out


def behavior_features(track: Track, events, anchor: int, speed_limit=None,
                      accel_floor: float = 0.1):
    """Vehicle class, past-change frequency, speed and acceleration ratios."""
    pos = track.position_of(anchor)
    elapsed_min = (pos + 1) / track.f_s / 60.0
    n_prior = sum(1 for e in events if e.end_frame <= anchor)
    vx = track.columns["vx"]
    v = float(np.hypot(vx[pos], track.columns["vy"][pos]))
    ratio = v / speed_limit if speed_limit else 1.0
    a_long = track.columns["ax"][:pos + 1]
    p95 = max(float(np.percentile(np.abs(a_long), 95)), accel_floor)
    return {
        "is_car": 1.0 if track.vehicle_class == "car" else 0.0,
        "is_truck": 1.0 if track.vehicle_class == "truck" else 0.0,
        "lane_change_frequency": n_prior / elapsed_min,
        "speed_ratio": ratio,
        "accel_ratio": float(a_long[pos]) / p95,
    }


def ramp_features(track: Track, geometry: LaneGeometry, anchor: int,
                  v_floor: float = V_FLOOR, unreachable: float = CGT_CAP):
    """Signed distance / ETA to the nearest ramp entry and exit, reach flags."""
    if not geometry.ramps:
        raise NoRampGeometry("geometry carries no ramp descriptors")
    pos = track.position_of(anchor)
    x = float(track.columns["x"][pos])
    v = max(float(np.hypot(track.columns["vx"][pos], track.columns["vy"][pos])), v_floor)
    out = {}
    etas = []
    for kind in ("entry", "exit"):
        stations = [r.station for r in geometry.ramps if r.kind == kind]
        if stations:
            dist = min((s - x for s in stations), key=abs)
        else:
            dist = unreachable * v  # no such ramp: report it far ahead
        eta = dist / v if dist >= 0 else unreachable
        eta = min(eta, unreachable)
        out[f"dist_ramp_{kind}"] = dist
        out[f"ramp_eta_{kind}"] = eta
        etas.append(eta)
    nearest = min(etas)
    for h in (5, 15, 30):
        out[f"ramp_reach_{h}s"] = 1.0 if nearest <= h else 0.0
    return out


@dataclass
class FeatureExtractor:
    """Assembles manifest-ordered vectors for labeled samples.

    Holds the fitted NeighborStats and per-track event lists; per-track
    derived series are cached across samples of the same track.
    """
    manifest: FeatureManifest
    stats: NeighborStats
    v_floor: float = V_FLOOR

    def __post_init__(self):
        self._series_cache = {}
        self._index = {n: i for i, n in enumerate(self.manifest.names)}

    def _series(self, track: Track):
        key = (track.recording_id, track.track_id)
        if key not in self._series_cache:
            vx, vy = track.columns["vx"], track.columns["vy"]
            ax, ay = track.columns["ax"], track.columns["ay"]
            speed = np.hypot(vx, vy)
            self._series_cache[key] = {
                "speed": speed,
                "accel": np.hypot(ax, ay),
                "curvature": track.columns["yaw_rate"] / np.maximum(speed, self.v_floor),
            }
        return self._series_cache[key]

    def assemble(self, sample, track: Track, geometry: LaneGeometry, events) -> np.ndarray:
        manifest = self.manifest
        f_s = track.f_s
        pos = track.position_of(sample.anchor_frame)
        window_frames = int(round(sample.history_window * f_s))
        roll_frames = min(int(round(1.0 * f_s)), window_frames)
        lo = max(0, pos - window_frames + 1)
        roll_lo = max(lo, pos - roll_frames + 1)

        values = {}
        col = track.columns
        for name in ("x", "y", "vx", "vy", "ax", "ay", "lat_velocity",
                     "heading", "yaw_rate"):
            values[name] = float(col[name][pos])
        if "lane_id" in self._index:
            lane_raw = col["lane_id"][pos]
            values["lane_id"] = float(lane_raw) if np.isfinite(lane_raw) else -1.0

        series = self._series(track)
        values["speed"] = float(series["speed"][pos])
        values["curvature"] = float(series["curvature"][pos])
        for name in ("speed", "accel", "heading"):
            src = series[name] if name != "heading" else col["heading"]
            st = rolling_stats(src[roll_lo:pos + 1])
            for stat in ("mean", "std", "min", "max"):
                key = f"{name}_{stat}_1s"
                if key in self._index:
                    values[key] = getattr(st, stat)

        values.update(lane_position_features(track, geometry, sample.anchor_frame,
                                             window_frames, roll_frames))

        inter = neighbor_interaction_features(track, pos)
        gaps, occupied = inter["gaps"], inter["occupied"]
        for slot in SLOT_NAMES:
            values[f"gap_{slot}"] = gaps[slot]
            values[f"dv_{slot}"] = inter["dvs"][slot]
            values[f"approach_rate_{slot}"] = inter["approach"][slot]
            z, s = normalized_distance(gaps[slot], self.stats, slot)
            values[f"gap_z_{slot}"] = z
            values[f"gap_ratio_{slot}"] = s
            _, ttg_z = time_to_gap(gaps[slot], values["speed"], self.stats, slot,
                                   self.v_floor)
            values[f"ttg_z_{slot}"] = ttg_z
            values[f"cgt_{slot}"] = closing_gap_time(gaps[slot], inter["dvs"][slot])
        values["da_ego_lead"] = inter["das"]["ego_lead"]
        values["da_ego_rear"] = inter["das"]["ego_rear"]
        values["occupancy_ratio"] = inter["occupancy_ratio"]
        values["safe_gap_count"] = float(safe_gap_count(gaps, occupied, self.stats))
        values["safe_gap_count_left"] = float(safe_gap_count(
            gaps, occupied, self.stats, ("left_lead", "left_rear")))
        values["safe_gap_count_right"] = float(safe_gap_count(
            gaps, occupied, self.stats, ("right_lead", "right_rear")))
        for side in ("left", "right"):
            d_lead, d_rear, avail = lane_advantage(gaps, side)
            values[f"lane_adv_{side}_lead"] = d_lead
            values[f"lane_adv_{side}_rear"] = d_rear
            values[f"lane_adv_{side}_min"] = avail

        values.update(safety_minima(track, sample.anchor_frame, window_frames))
        for name in ("dhw", "thw", "ttc"):
            raw = col[name][pos]
            values[name] = float(raw) if np.isfinite(raw) else SAFETY_CAP

        values.update(behavior_features(track, events, sample.anchor_frame,
                                        track.speed_limit))
        if "dist_ramp_entry" in self._index:
            values.update(ramp_features(track, geometry, sample.anchor_frame, self.v_floor))

        vec = np.empty(len(manifest), dtype=np.float64)
        filled = 0
        for name, i in self._index.items():
            if name in values:
                vec[i] = values[name]
                filled += 1
        if filled != len(manifest):
            raise ManifestMismatch(len(manifest), filled)
        if not np.all(np.isfinite(vec)):
            bad = [manifest.names[i] for i in np.nonzero(~np.isfinite(vec))[0]]
            raise ValueError(f"non-finite features {bad} for track {track.track_id} "
                             f"anchor {sample.anchor_frame}")
        return vec


def assemble_features(sample, track, geometry, stats, manifest, events=()) -> np.ndarray:
    """One-off vector assembly (bulk callers should hold a FeatureExtractor)."""
    return FeatureExtractor(manifest=manifest, stats=stats).assemble(
        sample, track, geometry, events)


def extract_matrix(samples, recordings, stats, manifest,
                   events_by_recording=None):
    """(X float64, y int8, index rows) for a list of samples."""
    from ..events import LABEL_TO_INT

    rec_by_id = {r.recording_id: r for r in recordings}
    extractor = FeatureExtractor(manifest=manifest, stats=stats)
    X = np.empty((len(samples), len(manifest)), dtype=np.float64)
    y = np.empty(len(samples), dtype=np.int8)
    index = []
    for i, sample in enumerate(samples):
        rec = rec_by_id[sample.recording_id]
        track = rec.track_by_id(sample.track_id)
        events = ()
        if events_by_recording is not None:
            events = events_by_recording.get(sample.recording_id, {}).get(sample.track_id, ())
        X[i] = extractor.assemble(sample, track, rec.lane_geometry, events)
        y[i] = LABEL_TO_INT[sample.label]
        index.append((sample.recording_id, sample.location_id, sample.track_id,
                      sample.anchor_frame))
    return X, y, index
