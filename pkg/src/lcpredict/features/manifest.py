"""Versioned feature manifests: the authoritative, ordered enumeration.

The dataset profiles fix the exact composition: 99 features for highd
(27 raw + 72 derived) and 104 for exid (28 raw + 76 derived). Each entry
carries a monotone hint per class; the defaults transcribe the traffic-
safety directions (gap availability up, risk metrics down, lateral motion
toward the target lane up) and are user-overridable at train time.

The shipped ``manifests/*.json`` files are what the pipeline loads;
``build_manifest`` regenerates them and the test suite asserts both agree.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..errors import ManifestMismatch
from ..trajectory import SLOT_NAMES

EXPECTED_LENGTH = {"highd": 99, "exid": 104}

NO_MONO = {"NLC": 0, "LLC": 0, "RLC": 0}


@dataclass(frozen=True)
class FeatureDescriptor:
    name: str
    unit: str
    category: int           # 1..5, or 6 for exid ramp semantics
    monotone: dict          # class -> {-1, 0, +1}


@dataclass(frozen=True)
class FeatureManifest:
    profile: str
    version: str
    features: tuple         # tuple[FeatureDescriptor, ...]

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate feature names in manifest: {dupes}")
        expected = EXPECTED_LENGTH.get(self.profile)
        if expected is not None and len(names) != expected:
            raise ManifestMismatch(expected, len(names))

    def __len__(self):
        return len(self.features)

    @property
    def names(self):
        return tuple(f.name for f in self.features)

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def content_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()

    def monotone_vector(self, cls: str):
        return [f.monotone.get(cls, 0) for f in self.features]

    def to_dict(self) -> dict:
        return {
            "profile": self.profile,
            "version": self.version,
            "features": [{"name": f.name, "unit": f.unit, "category": f.category,
                          "monotone": f.monotone} for f in self.features],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureManifest":
        feats = tuple(FeatureDescriptor(name=f["name"], unit=f["unit"],
                                        category=int(f["category"]),
                                        monotone={k: int(v) for k, v in f["monotone"].items()})
                      for f in data["features"])
        return cls(profile=data["profile"], version=data["version"], features=feats)


def _d(name, unit, category, monotone=None):
    return FeatureDescriptor(name, unit, category, monotone or dict(NO_MONO))


def _mono(llc=0, rlc=0):
    return {"NLC": 0, "LLC": llc, "RLC": rlc}


def build_manifest(profile: str) -> FeatureManifest:
    if profile not in ("highd", "exid"):
        raise ValueError(f"unknown manifest profile {profile!r}")
    f = []

    # raw per-anchor-frame variables
    f += [_d("x", "m", 1), _d("y", "m", 1), _d("vx", "m/s", 1), _d("vy", "m/s", 1),
          _d("ax", "m/s^2", 1), _d("ay", "m/s^2", 1),
          _d("lat_velocity", "m/s", 1, _mono(llc=+1, rlc=-1)),
          _d("heading", "rad", 1), _d("yaw_rate", "rad/s", 1),
          _d("lateral_offset", "m", 2),
          _d("dhw", "m", 4), _d("thw", "s", 4), _d("ttc", "s", 4)]
    f += [_d(f"gap_{s}", "m", 3) for s in SLOT_NAMES]
    f += [_d(f"dv_{s}", "m/s", 3) for s in SLOT_NAMES]
    f += [_d("da_ego_lead", "m/s^2", 3), _d("da_ego_rear", "m/s^2", 3)]
    if profile == "exid":
        f += [_d("lane_id", "", 2)]

    # category 1: kinematics and 1 s rolling statistics
    f += [_d("speed", "m/s", 1), _d("curvature", "1/m", 1)]
    for series in ("speed", "accel"):
        f += [_d(f"{series}_{stat}_1s", "m/s" if series == "speed" else "m/s^2", 1)
              for stat in ("mean", "std", "min", "max")]
    if profile == "highd":
        f += [_d(f"heading_{stat}_1s", "rad", 1) for stat in ("mean", "std", "min", "max")]
    else:
        # on curved ramp geometry absolute heading statistics track the road,
        # not the driver; only the variability is kept
        f += [_d("heading_std_1s", "rad", 1)]

    # category 2: lane position semantics
    f += [_d("dist_left_boundary", "m", 2), _d("dist_right_boundary", "m", 2),
          _d("lateral_offset_diff", "m", 2),
          _d("dist_left_boundary_diff", "m", 2), _d("dist_right_boundary_diff", "m", 2),
          _d("lateral_offset_mean_1s", "m", 2),
          _d("cum_lateral_displacement", "m", 2)]

    # category 3: neighbor interactions and gap-availability constructs
    f += [_d(f"approach_rate_{s}", "m/s", 3) for s in SLOT_NAMES]
    f += [_d("occupancy_ratio", "", 3)]
    f += [_d(f"gap_z_{s}", "", 3) for s in SLOT_NAMES]
    f += [_d(f"gap_ratio_{s}", "", 3) for s in SLOT_NAMES]
    f += [_d("safe_gap_count", "", 3),
          _d("safe_gap_count_left", "", 3, _mono(llc=+1)),
          _d("safe_gap_count_right", "", 3, _mono(rlc=+1))]
    f += [_d("lane_adv_left_lead", "m", 3), _d("lane_adv_left_rear", "m", 3),
          _d("lane_adv_left_min", "m", 3, _mono(llc=+1)),
          _d("lane_adv_right_lead", "m", 3), _d("lane_adv_right_rear", "m", 3),
          _d("lane_adv_right_min", "m", 3, _mono(rlc=+1))]
    f += [_d(f"ttg_z_{s}", "", 3) for s in SLOT_NAMES]
    f += [_d("cgt_ego_lead", "s", 3), _d("cgt_ego_rear", "s", 3),
          _d("cgt_left_lead", "s", 3, _mono(llc=-1)),
          _d("cgt_left_rear", "s", 3, _mono(llc=-1)),
          _d("cgt_right_lead", "s", 3, _mono(rlc=-1)),
          _d("cgt_right_rear", "s", 3, _mono(rlc=-1))]

    # category 4: longitudinal safety minima over the history window
    f += [_d("dhw_min_w", "m", 4),
          _d("thw_min_w", "s", 4, _mono(llc=-1, rlc=-1)),
          _d("ttc_min_w", "s", 4, _mono(llc=-1, rlc=-1)),
          _d("dhw_present", "", 4), _d("thw_present", "", 4), _d("ttc_present", "", 4)]

    # category 5: driving behavior semantics
    f += [_d("is_car", "", 5), _d("is_truck", "", 5),
          _d("lane_change_frequency", "1/min", 5),
          _d("speed_ratio", "", 5), _d("accel_ratio", "", 5)]

    if profile == "exid":
        f += [_d("dist_ramp_entry", "m", 6), _d("dist_ramp_exit", "m", 6),
              _d("ramp_eta_entry", "s", 6), _d("ramp_eta_exit", "s", 6),
              _d("ramp_reach_5s", "", 6), _d("ramp_reach_15s", "", 6),
              _d("ramp_reach_30s", "", 6)]

    return FeatureManifest(profile=profile, version=f"{profile}-v1", features=tuple(f))


def load_manifest(name: str) -> FeatureManifest:
    """Load a bundled manifest ('highd'/'exid') or a manifest JSON path."""
    if name in ("highd", "exid"):
        raw = resources.files("lcpredict.manifests").joinpath(f"{name}_v1.json").read_text()
    else:
        raw = Path(name).read_text()
    return FeatureManifest.from_dict(json.loads(raw))


def write_bundled_manifests(out_dir) -> None:
    out_dir = Path(out_dir)
    for profile in ("highd", "exid"):
        m = build_manifest(profile)
        path = out_dir / f"{profile}_v1.json"
        path.write_text(json.dumps(m.to_dict(), indent=1, sort_keys=True))


if __name__ == "__main__":  # regenerate the shipped data files
    write_bundled_manifests(Path(__file__).resolve().parent.parent / "manifests")
