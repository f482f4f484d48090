"""Lane-change event detection and supervised sample labeling.

A change starts at the first frame where the center has moved more than
0.2 m off the departed lane's centerline toward the target side and the
signed lateral velocity then keeps that sign for at least 0.5 s. It ends
at the first frame where the center sits inside the adjacent lane and no
reversal (cumulative opposite lateral displacement > 0.1 m) occurs for
the following second.

Direction is assigned per scenario type: lane-id comparison for straight
segments, short-window mean lateral velocity for ramp scenarios.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyWindow, GeometryCoverageError, SameLane
from .ingestion import Recording
from .trajectory import LaneGeometry, SamplingConfig, Track

NLC, LLC, RLC = "NLC", "LLC", "RLC"
LABELS = (NLC, LLC, RLC)
LABEL_TO_INT = {NLC: 0, LLC: 1, RLC: 2}


@dataclass(frozen=True)
class LaneChangeEvent:
    track_id: int
    start_frame: int
    end_frame: int
    direction: str         # LLC or RLC
    scenario: str          # "straight" or "ramp"
    from_lane: int = None
    to_lane: int = None

    def __post_init__(self):
        if self.start_frame >= self.end_frame:
            raise ValueError("event start_frame must precede end_frame")
        if self.direction not in (LLC, RLC):
            raise ValueError(f"bad direction {self.direction!r}")


@dataclass(frozen=True)
class LabeledSample:
    recording_id: int
    track_id: int
    anchor_frame: int      # last frame of the history window
    label: str             # NLC / LLC / RLC
    history_window: float  # W, seconds
    horizon: float         # T, seconds
    location_id: int = None


@dataclass(frozen=True)
class DetectParams:
    """Detection thresholds. Values mirror the maneuver definition; the

    smoothing window is a measurement-noise concession: position checks run
    on a centered moving average so sub-decimeter jitter does not defeat the
    cumulative-reversal test. 0/1 disables smoothing.
    """
    crossing_threshold: float = 0.2      # m off the departed centerline
    drift_seconds: float = 0.5           # one-signed lateral velocity after start
    drift_sign_tolerance: float = 0.02   # m/s; opposite-sign deeper than this is a violation
    drift_violation_frames: int = 1      # at most this many violating frames
    settle_seconds: float = 1.0          # quiet period after entering the target lane
    reversal_limit: float = 0.1          # m cumulative opposite displacement in settle window
    max_maneuver_seconds: float = 10.0   # crossing-to-entry scan bound
    smooth_frames: int = 7               # centered moving-average window for y
    scenario: str = "straight"           # direction rule selector
    highd_left_rule: str = "id_increase_left"  # or "id_increase_right" (inverts)


def _smooth(y: np.ndarray, k: int) -> np.ndarray:
    if k <= 1:
        return y
    kernel = np.ones(k)
    num = np.convolve(y, kernel, mode="same")
    den = np.convolve(np.ones_like(y), kernel, mode="same")
    return num / den


def direction_highd(lane_before: int, lane_after: int,
                    rule: str = "id_increase_left") -> str:
    """Direction from lane-id comparison (straight-segment scenario)."""
    if lane_before == lane_after:
        raise SameLane(f"lane did not change ({lane_before})")
    smaller_before = lane_before < lane_after
    if rule == "id_increase_left":
        return LLC if smaller_before else RLC
    if rule == "id_increase_right":
        return RLC if smaller_before else LLC
    raise ValueError(f"unknown highd_left_rule {rule!r}")


def direction_exid(track: Track, start_frame: int, f_s: float = None) -> str:
    """Direction from mean lateral velocity over [t_start, t_start + 0.1 s)."""
    f_s = f_s or track.f_s
    pos = track.position_of(start_frame)
    n = max(1, int(np.ceil(0.1 * f_s - 1e-9)))
    window = track.columns["lat_velocity"][pos:pos + n]
    window = window[~np.isnan(window)]
    if window.size == 0:
        raise EmptyWindow(f"no frames in [t_start, t_start+0.1s) at frame {start_frame}")
    return LLC if window.mean() > 0 else RLC


def detect_events(track: Track, geometry: LaneGeometry,
                  params: DetectParams = DetectParams()) -> list:
    """All lane-change events of one validated track, in frame order."""
    assert track.validated, "detect_events requires a validated track"
    f_s = track.f_s
    y = _smooth(track.columns["y"], params.smooth_frames)
    lat_v = track.columns["lat_velocity"]
    n = len(track)
    lanes = geometry.lanes_for(track.driving_direction)
    lane_lo = min(l.right_bound for l in lanes)
    lane_hi = max(l.left_bound for l in lanes)

    raw_y = track.columns["y"]
    outside = (raw_y < lane_lo - 0.5) | (raw_y > lane_hi + 0.5)
    if outside.any():
        bad = int(track.frame_index[np.argmax(outside)])
        raise GeometryCoverageError(
            f"track {track.track_id} frame {bad} lies outside the known lanes")

    drift_frames = int(round(params.drift_seconds * f_s))
    settle_frames = int(round(params.settle_seconds * f_s))

    home = geometry.lane_at(track.driving_direction, y[0])
    if home is None:
        home = min(lanes, key=lambda l: abs(y[0] - l.center))
    events = []
    i = 0
    while i < n:
        off = y[i] - home.center
        if abs(off) <= params.crossing_threshold:
            i += 1
            continue
        direction = 1.0 if off > 0 else -1.0
        side = "left" if direction > 0 else "right"
        target = geometry.adjacent_lane(track.driving_direction, home.lane_id, side)
        if target is None:
            i += 1
            continue
        # sustained one-signed drift for drift_seconds after the crossing
        seg = lat_v[i:i + drift_frames]
        if seg.size < drift_frames:
            break  # track ends before the drift can be confirmed
        violations = int(np.sum(direction * seg < -params.drift_sign_tolerance))
        if violations > params.drift_violation_frames:
            i += 1
            continue
        # end: first frame inside the target lane followed by a quiet second
        end = None
        j = i
        scan_limit = min(n, i + int(round(params.max_maneuver_seconds * f_s)))
        while j < scan_limit:
            if target.right_bound < y[j] < target.left_bound:
                win = y[j:j + settle_frames + 1]
                if win.size < settle_frames + 1:
                    break  # cannot confirm the quiet second
                steps = np.diff(win)
                reversal = float(np.sum(np.maximum(0.0, -direction * steps)))
                if reversal <= params.reversal_limit:
                    end = j
                    break
            j += 1
        if end is None:
            i += 1
            continue
        start_frame = int(track.frame_index[i])
        end_frame = int(track.frame_index[end])
        if params.scenario == "ramp":
            dir_label = direction_exid(track, start_frame, f_s)
        else:
            dir_label = direction_highd(home.lane_id, target.lane_id, params.highd_left_rule)
        events.append(LaneChangeEvent(
            track_id=track.track_id, start_frame=start_frame, end_frame=end_frame,
            direction=dir_label, scenario=params.scenario,
            from_lane=home.lane_id, to_lane=target.lane_id))
        home = target
        i = end + 1
    return events


def detect_events_for_recording(recording: Recording,
                                params: DetectParams = DetectParams()) -> dict:
    """track_id -> event list for every track of a recording."""
    return {t.track_id: detect_events(t, recording.lane_geometry, params)
            for t in recording.tracks}


def build_samples(recording: Recording, events_by_track: dict,
                  cfg: SamplingConfig) -> list:
    """Anchor every ``stride`` frames where window and horizon fit.

    A sample is labeled with the direction of the event whose start falls in
    (anchor, anchor + T*f_s], else NLC. Tracks with an LLC and an RLC start
    within one horizon length of each other are dropped entirely.
    """
    w = cfg.window_frames
    h = cfg.horizon_frames
    samples = []
    for track in recording.tracks:
        events = sorted(events_by_track.get(track.track_id, ()), key=lambda e: e.start_frame)
        mixed = any(
            a.direction != b.direction and abs(a.start_frame - b.start_frame) <= h
            for a in events for b in events)
        if mixed:
            continue
        first_anchor = track.first_frame + w - 1
        last_anchor = track.last_frame - h
        starts = np.array([e.start_frame for e in events], dtype=np.int64)
        dirs = [e.direction for e in events]
        for anchor in range(first_anchor, last_anchor + 1, cfg.stride):
            label = NLC
            hit = np.nonzero((starts > anchor) & (starts <= anchor + h))[0]
            if hit.size:
                label = dirs[int(hit[0])]
            samples.append(LabeledSample(
                recording_id=recording.recording_id, track_id=track.track_id,
                anchor_frame=anchor, label=label,
                history_window=cfg.history_window, horizon=cfg.horizon,
                location_id=recording.location_id))
    return samples


def save_samples(samples, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["recording_id", "track_id", "anchor_frame", "label", "W", "T"])
        for s in samples:
            wr.writerow([s.recording_id, s.track_id, s.anchor_frame, s.label,
                         f"{s.history_window:g}", f"{s.horizon:g}"])


def load_samples(path, location_by_recording: dict = None) -> list:
    import csv

    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rid = int(row["recording_id"])
            out.append(LabeledSample(
                recording_id=rid, track_id=int(row["track_id"]),
                anchor_frame=int(row["anchor_frame"]), label=row["label"],
                history_window=float(row["W"]), horizon=float(row["T"]),
                location_id=(location_by_recording or {}).get(rid)))
    return out
