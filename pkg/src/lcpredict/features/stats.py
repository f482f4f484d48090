"""Training-split statistics backing the normalized-distance features.

Gap means/stds per neighbor slot are measured at lane-change start frames
(population std, so the safe-gap threshold mu + 2*sigma is deterministic).
Time-to-gap means/stds are measured at training sample anchors, which is
the population the z-scores are later evaluated on. Both carry provenance
so leakage checks can assert what they were fitted on.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import InsufficientData
from ..trajectory import SLOT_NAMES

GAP_CAP = 300.0       # m, imputed gap for an empty slot
SAFETY_CAP = 300.0    # s or m, imputed DHW/THW/TTC when absent all window
CGT_CAP = 300.0       # s
CGT_EPS = 1e-6
V_FLOOR = 0.5         # m/s floor for divisions by ego speed


@dataclass(frozen=True)
class SlotStats:
    mean: float
    std: float           # population std
    count: int


@dataclass(frozen=True)
class NeighborStats:
    gap: dict                  # slot -> SlotStats (at event-start frames)
    ttg: dict                  # slot -> SlotStats (at training anchors)
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "gap": {s: {"mean": v.mean, "std": v.std, "count": v.count}
                    for s, v in self.gap.items()},
            "ttg": {s: {"mean": v.mean, "std": v.std, "count": v.count}
                    for s, v in self.ttg.items()},
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NeighborStats":
        to_slots = lambda d: {s: SlotStats(v["mean"], v["std"], int(v["count"]))
                              for s, v in d.items()}
        return cls(gap=to_slots(data["gap"]), ttg=to_slots(data["ttg"]),
                   provenance=data.get("provenance", {}))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True))

    @classmethod
    def load(cls, path) -> "NeighborStats":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class WindowStats:
    mean: float
    std: float
    min: float
    max: float


def compute_neighbor_stats(gaps_by_slot: dict) -> dict:
    """slot -> SlotStats from per-slot occupied-gap observations.

    Requires at least two observations per slot (population std of one
    point is meaningless for thresholding).
    """
    out = {}
    for slot in SLOT_NAMES:
        obs = np.asarray(gaps_by_slot.get(slot, ()), dtype=np.float64)
        obs = obs[np.isfinite(obs)]
        if obs.size < 2:
            raise InsufficientData(slot)
        out[slot] = SlotStats(mean=float(obs.mean()), std=float(obs.std()), count=int(obs.size))
    return out


def fit_neighbor_stats(recordings, events_by_recording, samples,
                       v_floor: float = V_FLOOR) -> NeighborStats:
    """Fit gap stats at event starts and time-to-gap stats at sample anchors.

    ``recordings``/``samples`` must already be restricted to the training
    split; the provenance records which locations contributed.
    """
    gap_obs = {s: [] for s in SLOT_NAMES}
    n_events = 0
    rec_by_id = {r.recording_id: r for r in recordings}
    for rid, events_by_track in events_by_recording.items():
        rec = rec_by_id[rid]
        for tid, events in events_by_track.items():
            track = rec.track_by_id(tid)
            for ev in events:
                pos = track.position_of(ev.start_frame)
                n_events += 1
                for slot in SLOT_NAMES:
                    g = track.neighbor_gaps[slot][pos]
                    if np.isfinite(g) and not np.isnan(track.neighbor_ids[slot][pos]):
                        gap_obs[slot].append(float(g))
    gap_stats = compute_neighbor_stats(gap_obs)

    ttg_obs = {s: [] for s in SLOT_NAMES}
    for sample in samples:
        rec = rec_by_id[sample.recording_id]
        track = rec.track_by_id(sample.track_id)
        pos = track.position_of(sample.anchor_frame)
        v = max(float(np.hypot(track.columns["vx"][pos], track.columns["vy"][pos])), v_floor)
        for slot in SLOT_NAMES:
            g = track.neighbor_gaps[slot][pos]
            d = float(g) if (np.isfinite(g) and not np.isnan(track.neighbor_ids[slot][pos])) else GAP_CAP
            ttg_obs[slot].append(d / v)
    ttg_stats = {}
    for slot in SLOT_NAMES:
        obs = np.asarray(ttg_obs[slot])
        if obs.size < 2:
            raise InsufficientData(slot)
        ttg_stats[slot] = SlotStats(mean=float(obs.mean()), std=float(obs.std()), count=int(obs.size))

    locations = sorted({r.location_id for r in recordings})
    return NeighborStats(gap=gap_stats, ttg=ttg_stats,
                         provenance={"locations": locations, "n_event_frames": n_events,
                                     "n_anchor_frames": len(samples)})
