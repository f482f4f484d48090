"""Core trajectory domain types: recordings, tracks, frames, lanes, neighbors.

Internal coordinate convention (all datasets are normalized to this at
ingestion): x is longitudinal and increases in the direction of travel,
y is lateral and positive toward the driver's left. Absent values (no
leader, unknown lane, ...) are NaN in float arrays, never 0 or -1.

Tracks store per-frame quantities as column arrays; ``Frame`` and
``NeighborSet`` are per-frame views materialized on demand.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import EmptyTrack, ExcessiveGaps, NonMonotoneFrames

SLOT_NAMES = ("ego_lead", "ego_rear", "left_lead", "left_rear", "right_lead", "right_rear")

DIR1, DIR2 = "dir1", "dir2"
VEHICLE_CLASSES = ("car", "truck", "other")

# Class-typical lengths (m) used when a dataset provides none; gaps are
# bumper-to-bumper so some length assumption is always needed.
VEHICLE_LENGTH = {"car": 4.5, "truck": 12.0, "other": 6.0}

# Float columns carried per frame, in normalized file order.
FLOAT_COLUMNS = ("t", "x", "y", "vx", "vy", "ax", "ay", "lat_velocity",
                 "lane_id", "heading", "yaw_rate", "dhw", "thw", "ttc")


@dataclass(frozen=True)
class NeighborRef:
    """One neighbor slot at one frame. ``track_id`` is None when empty."""
    track_id: Optional[int]
    gap: float       # bumper-to-bumper longitudinal gap, m (NaN when empty)
    dv: float        # v_neighbor - v_ego, m/s
    da: float        # a_neighbor - a_ego, m/s^2

    @property
    def occupied(self) -> bool:
        return self.track_id is not None


@dataclass(frozen=True)
class NeighborSet:
    ego_lead: NeighborRef
    ego_rear: NeighborRef
    left_lead: NeighborRef
    left_rear: NeighborRef
    right_lead: NeighborRef
    right_rear: NeighborRef

    def slot(self, name: str) -> NeighborRef:
        return getattr(self, name)


@dataclass(frozen=True)
class Frame:
    """Per-frame view of a track. ``t = frame_index / f_s`` by construction."""
    frame_index: int
    t: float
    x: float
    y: float
    vx: float
    vy: float
    ax: float
    ay: float
    lat_velocity: float
    lane_id: Optional[int]
    lateral_offset: float
    heading: float
    yaw_rate: float
    dhw: Optional[float]
    thw: Optional[float]
    ttc: Optional[float]
    neighbors: NeighborSet

    @property
    def speed(self) -> float:
        return float(np.hypot(self.vx, self.vy))


@dataclass(frozen=True)
class Lane:
    lane_id: int
    center: float        # lateral coordinate of centerline, m
    left_bound: float    # lateral coordinate of left boundary (> center)
    right_bound: float   # lateral coordinate of right boundary (< center)

    @property
    def width(self) -> float:
        return self.left_bound - self.right_bound

    def contains(self, y: float) -> bool:
        return self.right_bound <= y <= self.left_bound


@dataclass(frozen=True)
class RampDescriptor:
    kind: str            # "entry" or "exit"
    station: float       # longitudinal x of the gore point, m


@dataclass(frozen=True)
class LaneGeometry:
    """Ordered lane descriptors per driving direction, plus optional ramps."""
    lanes: dict            # direction -> tuple[Lane, ...] ordered by center (right to left)
    ramps: tuple = ()      # tuple[RampDescriptor, ...]

    def lanes_for(self, direction: str) -> tuple:
        return self.lanes[direction]

    def lane_by_id(self, direction: str, lane_id: int) -> Optional[Lane]:
        for lane in self.lanes[direction]:
            if lane.lane_id == lane_id:
                return lane
        return None

    def lane_at(self, direction: str, y: float) -> Optional[Lane]:
        """Lane whose boundaries contain y; ties resolved to the nearer center."""
        best = None
        for lane in self.lanes[direction]:
            if lane.contains(y):
                if best is None or abs(y - lane.center) < abs(y - best.center):
                    best = lane
        return best

    def adjacent_lane(self, direction: str, lane_id: int, side: str) -> Optional[Lane]:
        """Neighbor lane on 'left' (greater center y) or 'right' of lane_id."""
        ordered = sorted(self.lanes[direction], key=lambda l: l.center)
        for i, lane in enumerate(ordered):
            if lane.lane_id == lane_id:
                j = i + 1 if side == "left" else i - 1
                if 0 <= j < len(ordered):
                    return ordered[j]
                return None
        return None


@dataclass(frozen=True)
class SamplingConfig:
    f_s: float = 25.0        # Hz
    history_window: float = 1.0   # W, seconds
    horizon: float = 1.0          # T, seconds
    stride: int = 5               # frames between anchors

    def __post_init__(self):
        if self.f_s <= 0:
            raise ValueError(f"f_s must be > 0, got {self.f_s}")
        if self.history_window <= 0 or self.horizon <= 0:
            raise ValueError("history_window and horizon must be > 0")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")

    @property
    def window_frames(self) -> int:
        return int(round(self.history_window * self.f_s))

    @property
    def horizon_frames(self) -> int:
        return int(round(self.horizon * self.f_s))


@dataclass
class Track:
    """One vehicle's frame sequence, column-array backed.

    Float columns use NaN for absent values. Neighbor slots are stored as
    ``neighbor_ids[slot]`` (float64, NaN = empty) plus gap/dv/da arrays.
    Instances are treated as immutable once validated.
    """
    track_id: int
    recording_id: int
    location_id: int
    driving_direction: str
    vehicle_class: str
    f_s: float
    frame_index: np.ndarray            # int64, strictly increasing
    columns: dict                      # name -> float64 array
    neighbor_ids: dict                 # slot -> float64 array (NaN = empty)
    neighbor_gaps: dict                # slot -> float64 array
    neighbor_dvs: dict
    neighbor_das: dict
    lateral_offset: np.ndarray = None  # filled once geometry is known
    speed_limit: Optional[float] = None
    validated: bool = False
    interpolated_frames: tuple = ()

    def __len__(self) -> int:
        return len(self.frame_index)

    @property
    def first_frame(self) -> int:
        return int(self.frame_index[0])

    @property
    def last_frame(self) -> int:
        return int(self.frame_index[-1])

    def position_of(self, frame: int) -> int:
        """Array index for an absolute frame number (validated tracks are gap-free)."""
        pos = frame - self.first_frame
        if not self.validated:
            pos = int(np.searchsorted(self.frame_index, frame))
            if pos >= len(self.frame_index) or self.frame_index[pos] != frame:
                raise KeyError(f"frame {frame} not in track {self.track_id}")
            return pos
        if pos < 0 or pos >= len(self):
            raise KeyError(f"frame {frame} outside track {self.track_id}")
        return int(pos)

    def neighbor_at(self, slot: str, pos: int) -> NeighborRef:
        raw_id = self.neighbor_ids[slot][pos]
        if np.isnan(raw_id):
            return NeighborRef(None, float("nan"), float("nan"), float("nan"))
        return NeighborRef(int(raw_id), float(self.neighbor_gaps[slot][pos]),
                           float(self.neighbor_dvs[slot][pos]), float(self.neighbor_das[slot][pos]))

    def frame_at(self, frame: int) -> Frame:
        pos = self.position_of(frame)
        col = self.columns
        lane_raw = col["lane_id"][pos]
        opt = lambda v: None if np.isnan(v) else float(v)
        off = float(self.lateral_offset[pos]) if self.lateral_offset is not None else float("nan")
        return Frame(
            frame_index=int(self.frame_index[pos]), t=float(col["t"][pos]),
            x=float(col["x"][pos]), y=float(col["y"][pos]),
            vx=float(col["vx"][pos]), vy=float(col["vy"][pos]),
            ax=float(col["ax"][pos]), ay=float(col["ay"][pos]),
            lat_velocity=float(col["lat_velocity"][pos]),
            lane_id=None if np.isnan(lane_raw) else int(lane_raw),
            lateral_offset=off,
            heading=float(col["heading"][pos]), yaw_rate=float(col["yaw_rate"][pos]),
            dhw=opt(col["dhw"][pos]), thw=opt(col["thw"][pos]), ttc=opt(col["ttc"][pos]),
            neighbors=NeighborSet(**{s: self.neighbor_at(s, pos) for s in SLOT_NAMES}),
        )


def validate_track(track: Track, f_s: Optional[float] = None) -> Track:
    """Return a validated copy: gap-free monotone frames, t = frame/f_s.

    Gaps of 1-2 frames are filled by linear interpolation (NaN endpoints
    propagate; integer-like columns take the earlier frame's value) and the
    filled frame numbers are recorded in ``interpolated_frames``. Gaps wider
    than 2 frames raise ExcessiveGaps.
    """
    if f_s is None:
        f_s = track.f_s
    idx = np.asarray(track.frame_index, dtype=np.int64)
    if idx.size == 0:
        raise EmptyTrack(f"track {track.track_id} has no frames")
    diffs = np.diff(idx)
    if np.any(diffs <= 0):
        raise NonMonotoneFrames(f"track {track.track_id} frame indices are not strictly increasing")

    wide = np.nonzero(diffs > 3)[0]
    if wide.size:
        spans = [(int(idx[i]) + 1, int(idx[i + 1]) - 1) for i in wide]
        raise ExcessiveGaps(spans)

    full = np.arange(idx[0], idx[-1] + 1, dtype=np.int64)
    if full.size == idx.size:
        new = replace(track)
        filled: tuple = ()
    else:
        present = np.zeros(full.size, dtype=bool)
        present[idx - idx[0]] = True
        filled = tuple(int(f) for f in full[~present])

        def interp_float(arr):
            out = np.empty(full.size)
            out[present] = arr
            prev = np.searchsorted(idx, full[~present]) - 1
            nxt = prev + 1
            frac = (full[~present] - idx[prev]) / (idx[nxt] - idx[prev])
            out[~present] = arr[prev] + frac * (arr[nxt] - arr[prev])
            return out

        def ffill(arr):
            out = np.empty(full.size, dtype=arr.dtype)
            out[present] = arr
            prev = np.searchsorted(idx, full[~present]) - 1
            out[~present] = arr[prev]
            return out

        columns = {}
        for name, arr in track.columns.items():
            columns[name] = ffill(arr) if name == "lane_id" else interp_float(arr)
        neighbor_ids = {s: ffill(a) for s, a in track.neighbor_ids.items()}
        neighbor_gaps = {s: interp_float(a) for s, a in track.neighbor_gaps.items()}
        neighbor_dvs = {s: interp_float(a) for s, a in track.neighbor_dvs.items()}
        neighbor_das = {s: interp_float(a) for s, a in track.neighbor_das.items()}
        # A forward-filled id with no interpolable gap data would fabricate a
        # neighbor; blank ids where the interpolated gap came out NaN.
        for s in SLOT_NAMES:
            bad = ~present & np.isnan(neighbor_gaps[s])
            neighbor_ids[s] = np.where(bad, np.nan, neighbor_ids[s])
        off = interp_float(track.lateral_offset) if track.lateral_offset is not None else None
        new = replace(track, frame_index=full, columns=columns, neighbor_ids=neighbor_ids,
                      neighbor_gaps=neighbor_gaps, neighbor_dvs=neighbor_dvs,
                      neighbor_das=neighbor_das, lateral_offset=off)

    new.columns = dict(new.columns)
    new.columns["t"] = new.frame_index / float(f_s)
    new.f_s = float(f_s)
    new.validated = True
    new.interpolated_frames = filled
    return new
