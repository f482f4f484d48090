"""Load highD-style and exiD-style recording files into the trajectory model.

Dataset schemas are described by data-file column mappings (profiles), not
code, so a schema change is an edit to ``profiles/*.json``. Everything is
normalized on the way in: SI units, road-aligned coordinates (x forward,
y positive-left), dataset sentinels replaced by absent values.

The normalized on-disk format is one CSV per recording with the fixed
header below plus a JSON sidecar carrying recording/track metadata and
lane geometry. Empty cells denote absent values.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from .errors import (FewerThanTwoBoundaries, InconsistentMeta, MissingColumn,
                     OverlappingLanes, RowParseError, UnitError)
from .trajectory import (DIR1, DIR2, FLOAT_COLUMNS, Lane, LaneGeometry,
                         RampDescriptor, SLOT_NAMES, Track, VEHICLE_LENGTH,
                         validate_track)

NORMALIZED_HEADER = (
    ["recording_id", "location_id", "track_id", "frame"]
    + list(FLOAT_COLUMNS)
    + [f"{slot}_{part}" for slot in SLOT_NAMES for part in ("id", "gap", "dv", "da")]
)


@dataclass(frozen=True)
class Recording:
    recording_id: int
    location_id: int
    f_s: float
    lane_geometry: LaneGeometry
    tracks: tuple   # tuple[Track, ...]

    def track_by_id(self, track_id: int) -> Track:
        for t in self.tracks:
            if t.track_id == track_id:
                return t
        raise KeyError(track_id)


@dataclass(frozen=True)
class ColumnMapping:
    """Normalized-field -> source-column mapping with conversions and sentinels.

    ``conversions`` are affine (value * scale + offset). ``sentinels`` maps a
    normalized field to the source value that means "absent". Sign conventions
    per driving direction handle image-coordinate datasets.
    """
    dataset_profile: str
    fields: dict                      # normalized field -> source column (or None if derived)
    neighbor_id_columns: dict         # slot -> source column
    conversions: dict = field(default_factory=dict)   # field -> (scale, offset)
    sentinels: dict = field(default_factory=dict)     # field -> sentinel value
    direction_column: str = "drivingDirection"
    direction_signs: dict = field(default_factory=dict)  # "1"/"2" -> {x,y,vx,vy,ax,ay}
    meta_fields: dict = field(default_factory=dict)   # recording meta mapping
    tracks_meta_fields: dict = field(default_factory=dict)
    class_map: dict = field(default_factory=dict)     # raw class -> car/truck/other

    REQUIRED = ("frame", "track_id", "x", "y", "vx", "vy", "ax", "ay", "lane_id")

    def __post_init__(self):
        missing = [f for f in self.REQUIRED if f not in self.fields]
        if missing:
            raise UnitError(f"mapping for profile {self.dataset_profile!r} lacks "
                            f"required fields: {missing}")


def load_profile(name: str) -> ColumnMapping:
    """Load a bundled mapping profile ('highd' or 'exid') or a JSON path."""
    if name in ("highd", "exid"):
        raw = resources.files("lcpredict.profiles").joinpath(f"{name}.json").read_text()
    else:
        raw = Path(name).read_text()
    data = json.loads(raw)
    return ColumnMapping(
        dataset_profile=data["dataset_profile"],
        fields=data["fields"],
        neighbor_id_columns=data["neighbor_id_columns"],
        conversions={k: tuple(v) for k, v in data.get("conversions", {}).items()},
        sentinels=data.get("sentinels", {}),
        direction_column=data.get("direction_column", "drivingDirection"),
        direction_signs=data.get("direction_signs", {}),
        meta_fields=data.get("meta_fields", {}),
        tracks_meta_fields=data.get("tracks_meta_fields", {}),
        class_map=data.get("class_map", {}),
    )


def _get_column(df: pd.DataFrame, col: str, path) -> np.ndarray:
    if col not in df.columns:
        raise MissingColumn(col)
    out = pd.to_numeric(df[col], errors="coerce").to_numpy(dtype=np.float64)
    raw_na = df[col].isna().to_numpy()
    bad = np.isnan(out) & ~raw_na
    if bad.any():
        line = int(np.nonzero(bad)[0][0]) + 2  # header is line 1
        raise RowParseError(line, f"non-numeric value in column {col!r} of {path}")
    return out


def build_lane_geometry(meta: dict, profile: str) -> LaneGeometry:
    """Construct LaneGeometry from boundary lists in recording metadata.

    ``meta`` must carry per-direction boundary lateral positions (already in
    normalized coordinates, increasing leftward). Lane ids follow the highD
    counting idiom: id 1 is reserved for the area beyond the first direction,
    upper-direction lanes are 2..n+1, then one id is skipped for the median.
    Centerline = midpoint of adjacent boundaries.
    """
    lanes = {}
    next_id = 2
    for direction in (DIR1, DIR2):
        key = f"boundaries_{direction}"
        if key not in meta:
            continue
        bounds = [float(b) for b in meta[key]]
        if len(bounds) < 2:
            raise FewerThanTwoBoundaries(f"{direction}: need >= 2 boundaries, got {len(bounds)}")
        if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
            raise OverlappingLanes(f"{direction}: boundaries not strictly increasing: {bounds}")
        ids = meta.get(f"lane_ids_{direction}")
        if ids is None:
            ids = list(range(next_id, next_id + len(bounds) - 1))
            next_id = ids[-1] + 2  # skip one id across the median
        lane_list = tuple(
            Lane(lane_id=int(i), center=(lo + hi) / 2, left_bound=hi, right_bound=lo)
            for i, lo, hi in zip(ids, bounds, bounds[1:]))
        lanes[direction] = lane_list
    if not lanes:
        raise FewerThanTwoBoundaries("metadata lists no lane boundaries")
    ramps = tuple(RampDescriptor(kind=r["kind"], station=float(r["station"]))
                  for r in meta.get("ramps", ()))
    return LaneGeometry(lanes=lanes, ramps=ramps)


def _affine(values: np.ndarray, conv) -> np.ndarray:
    scale, offset = conv
    return values * scale + offset


def load_recording(meta_path, tracks_meta_path, tracks_path,
                   mapping: ColumnMapping) -> Recording:
    """Load one raw recording (three CSVs) into a normalized Recording."""
    meta_path, tracks_meta_path, tracks_path = Path(meta_path), Path(tracks_meta_path), Path(tracks_path)
    meta_df = pd.read_csv(meta_path)
    if len(meta_df) != 1:
        raise InconsistentMeta(f"{meta_path} must contain exactly one row, has {len(meta_df)}")
    meta_row = meta_df.iloc[0]

    mf = mapping.meta_fields
    f_s = float(meta_row[mf.get("f_s", "frameRate")])
    if f_s <= 0 or not math.isfinite(f_s):
        raise InconsistentMeta(f"bad sampling frequency {f_s}")
    recording_id = int(meta_row[mf.get("recording_id", "id")])
    location_id = int(meta_row[mf.get("location_id", "locationId")])
    speed_limit = None
    if mf.get("speed_limit") and mf["speed_limit"] in meta_row:
        raw_limit = float(meta_row[mf["speed_limit"]])
        if raw_limit > 0:
            conv = mapping.conversions.get("speed_limit", (1.0, 0.0))
            speed_limit = _affine(np.array([raw_limit]), conv)[0]

    geometry = _geometry_from_meta(meta_row, mapping)

    tmeta = pd.read_csv(tracks_meta_path)
    tm = mapping.tracks_meta_fields
    for needed in (tm.get("track_id", "id"), mapping.direction_column):
        if needed not in tmeta.columns:
            raise MissingColumn(needed)
    tmeta = tmeta.set_index(tm.get("track_id", "id"))

    df = pd.read_csv(tracks_path)
    for col in list(mapping.fields.values()) + list(mapping.neighbor_id_columns.values()):
        if col is not None and col not in df.columns:
            raise MissingColumn(col)

    track_col = mapping.fields["track_id"]
    tracks = []
    for tid, group in df.groupby(track_col, sort=True):
        tid = int(tid)
        if tid not in tmeta.index:
            raise InconsistentMeta(f"track {tid} present in tracks file but not in tracks meta")
        trow = tmeta.loc[tid]
        direction_raw = str(int(trow[mapping.direction_column]))
        direction = DIR1 if direction_raw == "1" else DIR2
        signs = mapping.direction_signs.get(direction_raw, {})

        def col_of(fieldname, default=None):
            src = mapping.fields.get(fieldname)
            if src is None:
                return default
            vals = _get_column(group, src, tracks_path)
            if fieldname in mapping.sentinels:
                vals = np.where(vals == mapping.sentinels[fieldname], np.nan, vals)
            if fieldname in mapping.conversions:
                vals = _affine(vals, mapping.conversions[fieldname])
            return vals * signs.get(fieldname, 1.0)

        n = len(group)
        frame_idx = col_of("frame").astype(np.int64)
        columns = {}
        for name in ("x", "y", "vx", "vy", "ax", "ay"):
            columns[name] = col_of(name)
        lat = col_of("lat_velocity")
        columns["lat_velocity"] = lat if lat is not None else columns["vy"].copy()
        columns["lane_id"] = col_of("lane_id")
        heading = col_of("heading")
        if heading is None:
            heading = np.arctan2(columns["vy"], columns["vx"])
        columns["heading"] = heading
        yaw = col_of("yaw_rate")
        if yaw is None:
            yaw = np.gradient(np.unwrap(heading)) * f_s
        columns["yaw_rate"] = yaw
        for name in ("dhw", "thw", "ttc"):
            vals = col_of(name)
            if vals is None:
                vals = np.full(n, np.nan)
            vals = np.where(vals <= 0, np.nan, vals)  # non-positive headways mean "no leader"
            columns[name] = vals
        columns["t"] = frame_idx / f_s

        cls_raw = str(trow[tm.get("vehicle_class", "class")]) if tm.get("vehicle_class", "class") in trow else "other"
        vclass = mapping.class_map.get(cls_raw.lower(), "other")

        n_ids = {}
        for slot in SLOT_NAMES:
            src = mapping.neighbor_id_columns.get(slot)
            if src is None:
                n_ids[slot] = np.full(n, np.nan)
            else:
                vals = _get_column(group, src, tracks_path)
                n_ids[slot] = np.where(vals == 0, np.nan, vals)  # 0 = no neighbor in highD/exiD
        tracks.append(_TrackDraft(
            track_id=tid, direction=direction, vehicle_class=vclass,
            frame_index=frame_idx, columns=columns, neighbor_ids=n_ids))

    built = _resolve_neighbors(tracks, recording_id, location_id, f_s, speed_limit, geometry)
    return Recording(recording_id=recording_id, location_id=location_id,
                     f_s=f_s, lane_geometry=geometry, tracks=tuple(built))


@dataclass
class _TrackDraft:
    track_id: int
    direction: str
    vehicle_class: str
    frame_index: np.ndarray
    columns: dict
    neighbor_ids: dict


def _resolve_neighbors(drafts, recording_id, location_id, f_s, speed_limit, geometry):
    """Fill gap/dv/da for referenced neighbors from their own trajectories.

    Gaps are bumper-to-bumper along x (center distance minus half-lengths,
    with a class-typical length when the dataset lacks one); dv/da use
    longitudinal velocity/acceleration differences.
    """
    by_id = {d.track_id: d for d in drafts}
    frame_pos = {d.track_id: {int(f): i for i, f in enumerate(d.frame_index)} for d in drafts}

    tracks = []
    for d in drafts:
        n = len(d.frame_index)
        gaps = {s: np.full(n, np.nan) for s in SLOT_NAMES}
        dvs = {s: np.full(n, np.nan) for s in SLOT_NAMES}
        das = {s: np.full(n, np.nan) for s in SLOT_NAMES}
        half_ego = VEHICLE_LENGTH[d.vehicle_class] / 2
        for slot in SLOT_NAMES:
            ids = d.neighbor_ids[slot]
            for i in np.nonzero(~np.isnan(ids))[0]:
                nid = int(ids[i])
                other = by_id.get(nid)
                if other is None:
                    ids[i] = np.nan  # dangling reference: treat as absent
                    continue
                pos = frame_pos[nid].get(int(d.frame_index[i]))
                if pos is None:
                    ids[i] = np.nan
                    continue
                half_other = VEHICLE_LENGTH[other.vehicle_class] / 2
                gap = abs(other.columns["x"][pos] - d.columns["x"][i]) - half_ego - half_other
                gaps[slot][i] = max(gap, 0.0)
                dvs[slot][i] = other.columns["vx"][pos] - d.columns["vx"][i]
                das[slot][i] = other.columns["ax"][pos] - d.columns["ax"][i]
        track = Track(
            track_id=d.track_id, recording_id=recording_id, location_id=location_id,
            driving_direction=d.direction, vehicle_class=d.vehicle_class, f_s=f_s,
            frame_index=d.frame_index, columns=d.columns,
            neighbor_ids=d.neighbor_ids, neighbor_gaps=gaps,
            neighbor_dvs=dvs, neighbor_das=das, speed_limit=speed_limit)
        track = validate_track(track, f_s)
        track.lateral_offset = compute_lateral_offset(track, geometry)
        tracks.append(track)
    return tracks


def compute_lateral_offset(track: Track, geometry: LaneGeometry) -> np.ndarray:
    """Signed distance from the centerline of the frame's lane (NaN if unknown)."""
    lane_col = track.columns["lane_id"]
    offset = np.full(len(track), np.nan)
    centers = {l.lane_id: l.center for l in geometry.lanes_for(track.driving_direction)}
    for lid, c in centers.items():
        mask = lane_col == lid
        offset[mask] = track.columns["y"][mask] - c
    return offset


def _geometry_from_meta(meta_row, mapping: ColumnMapping) -> LaneGeometry:
    """Translate raw marking columns (highD-style semicolon lists) to geometry."""
    mf = mapping.meta_fields
    meta = {}
    for direction, key in ((DIR1, "upper_markings"), (DIR2, "lower_markings")):
        col = mf.get(key)
        if col and col in meta_row and isinstance(meta_row[col], str):
            raw = [float(v) for v in str(meta_row[col]).split(";") if v != ""]
            signs = mapping.direction_signs.get("1" if direction == DIR1 else "2", {})
            vals = sorted(v * signs.get("y", 1.0) for v in raw)
            meta[f"boundaries_{direction}"] = vals
    ramp_col = mf.get("ramps")
    if ramp_col and ramp_col in meta_row and isinstance(meta_row[ramp_col], str) and meta_row[ramp_col]:
        ramps = []
        for part in str(meta_row[ramp_col]).split(";"):
            kind, station = part.split(":")
            ramps.append({"kind": kind, "station": float(station)})
        meta["ramps"] = ramps
    return build_lane_geometry(meta, mapping.dataset_profile)


# --- normalized on-disk format ---

def save_normalized(recording: Recording, out_dir) -> Path:
    """Write ``<id>_tracks.csv`` + ``<id>_meta.json``; returns the CSV path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for tr in recording.tracks:
        n = len(tr)
        block = {
            "recording_id": np.full(n, recording.recording_id, dtype=np.int64),
            "location_id": np.full(n, recording.location_id, dtype=np.int64),
            "track_id": np.full(n, tr.track_id, dtype=np.int64),
            "frame": tr.frame_index,
        }
        for name in FLOAT_COLUMNS:
            block[name] = tr.columns[name]
        for slot in SLOT_NAMES:
            block[f"{slot}_id"] = tr.neighbor_ids[slot]
            block[f"{slot}_gap"] = tr.neighbor_gaps[slot]
            block[f"{slot}_dv"] = tr.neighbor_dvs[slot]
            block[f"{slot}_da"] = tr.neighbor_das[slot]
        rows.append(pd.DataFrame(block))
    df = pd.concat(rows, ignore_index=True)[NORMALIZED_HEADER]
    csv_path = out_dir / f"{recording.recording_id:02d}_tracks.csv"
    df.to_csv(csv_path, index=False, float_format="%.17g")

    geo = recording.lane_geometry
    meta = {
        "recording_id": recording.recording_id,
        "location_id": recording.location_id,
        "f_s": recording.f_s,
        "lanes": {direction: [{"lane_id": l.lane_id, "center": l.center,
                               "left_bound": l.left_bound, "right_bound": l.right_bound}
                              for l in lanes]
                  for direction, lanes in geo.lanes.items()},
        "ramps": [{"kind": r.kind, "station": r.station} for r in geo.ramps],
        "tracks": {str(tr.track_id): {
            "driving_direction": tr.driving_direction,
            "vehicle_class": tr.vehicle_class,
            "speed_limit": tr.speed_limit,
            "interpolated_frames": list(tr.interpolated_frames),
        } for tr in recording.tracks},
    }
    (out_dir / f"{recording.recording_id:02d}_meta.json").write_text(
        json.dumps(meta, indent=1, sort_keys=True))
    return csv_path


def load_normalized(csv_path) -> Recording:
    """Inverse of save_normalized (bit-exact ints, <=1e-9 floats)."""
    csv_path = Path(csv_path)
    meta_path = csv_path.with_name(csv_path.name.replace("_tracks.csv", "_meta.json"))
    meta = json.loads(meta_path.read_text())
    geometry = LaneGeometry(
        lanes={direction: tuple(Lane(**l) for l in lanes)
               for direction, lanes in meta["lanes"].items()},
        ramps=tuple(RampDescriptor(**r) for r in meta["ramps"]))

    df = pd.read_csv(csv_path)
    missing = [c for c in NORMALIZED_HEADER if c not in df.columns]
    if missing:
        raise MissingColumn(missing[0])
    f_s = float(meta["f_s"])
    tracks = []
    for tid, group in df.groupby("track_id", sort=True):
        tid = int(tid)
        tmeta = meta["tracks"][str(tid)]
        columns = {name: group[name].to_numpy(dtype=np.float64) for name in FLOAT_COLUMNS}
        track = Track(
            track_id=tid, recording_id=int(meta["recording_id"]),
            location_id=int(meta["location_id"]),
            driving_direction=tmeta["driving_direction"],
            vehicle_class=tmeta["vehicle_class"], f_s=f_s,
            frame_index=group["frame"].to_numpy(dtype=np.int64),
            columns=columns,
            neighbor_ids={s: group[f"{s}_id"].to_numpy(dtype=np.float64) for s in SLOT_NAMES},
            neighbor_gaps={s: group[f"{s}_gap"].to_numpy(dtype=np.float64) for s in SLOT_NAMES},
            neighbor_dvs={s: group[f"{s}_dv"].to_numpy(dtype=np.float64) for s in SLOT_NAMES},
            neighbor_das={s: group[f"{s}_da"].to_numpy(dtype=np.float64) for s in SLOT_NAMES},
            speed_limit=tmeta["speed_limit"])
        track = validate_track(track, f_s)
        track.lateral_offset = compute_lateral_offset(track, geometry)
        tracks.append(track)
    return Recording(recording_id=int(meta["recording_id"]),
                     location_id=int(meta["location_id"]), f_s=f_s,
                     lane_geometry=geometry, tracks=tuple(tracks))


def load_normalized_dir(data_dir) -> list:
    """All recordings under a directory, ordered by recording id."""
    paths = sorted(Path(data_dir).glob("*_tracks.csv"))
    return [load_normalized(p) for p in paths]
