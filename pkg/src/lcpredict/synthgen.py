"""Deterministic synthetic highway scenario generator.

Produces normalized Recordings with scripted lane changes, neighbor traffic,
and optional ramps, together with the analytic ground-truth event list, so
every downstream stage can be tested without licensed data.

Lateral transitions follow a smoothstep profile s(u) = 3u^2 - 2u^3 (or a
linear ramp for worst-case tests); positions integrate the scripted
velocities exactly before noise is added. Lane ids are numbered 1..n from
the rightmost lane, increasing leftward, so the id-comparison direction
rule (before < after => left) is geometrically consistent on generated data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleScript
from .ingestion import Recording
from .trajectory import (DIR1, Lane, LaneGeometry, RampDescriptor, SLOT_NAMES,
                         Track, VEHICLE_LENGTH, validate_track)

SIGHT_RANGE = 250.0     # m; neighbors beyond this are not referenced
MIN_SPACING = 2.0       # m bumper-to-bumper; closer than this is a scripted collision


@dataclass(frozen=True)
class LaneChangeScript:
    start_time: float        # s, beginning of the lateral transition
    direction: str           # "left" or "right"
    duration: float = 2.0    # s, transition length
    shape: str = "smoothstep"  # or "linear"
    pre_cue_seconds: float = 0.0     # preparatory drift toward the target lane
    pre_cue_amplitude: float = 0.0   # m, kept below the 0.2 m event threshold


@dataclass(frozen=True)
class VehicleScript:
    vehicle_id: int
    lane: int                  # initial lane id (1 = rightmost)
    x0: float                  # initial longitudinal position, m
    speed: float               # constant longitudinal speed, m/s
    accel: float = 0.0         # constant longitudinal acceleration, m/s^2
    vehicle_class: str = "car"
    changes: tuple = ()        # tuple[LaneChangeScript, ...]
    lateral_bias: float = 0.0  # constant offset from lane center, m
    brake: tuple = None        # (t_start, target_speed, decel_rate) or None


@dataclass(frozen=True)
class ScenarioSpec:
    n_lanes: int
    lane_width: float
    duration: float            # s
    f_s: float
    vehicles: tuple            # tuple[VehicleScript, ...]
    recording_id: int = 0
    location_id: int = 0
    ramps: tuple = ()          # tuple[RampDescriptor, ...]
    noise_pos: float = 0.0     # m, additive white Gaussian on x and y
    noise_vel: float = 0.0     # m/s, on vx and vy
    speed_limit: float = None

    def __post_init__(self):
        if self.noise_pos < 0 or self.noise_vel < 0:
            raise ValueError("noise levels must be >= 0")
        for v in self.vehicles:
            for ch in v.changes:
                if ch.start_time + ch.duration > self.duration:
                    raise ValueError(
                        f"vehicle {v.vehicle_id}: change at t={ch.start_time} does not fit duration")


@dataclass(frozen=True)
class TruthEvent:
    track_id: int
    start_frame: int     # analytic first frame with offset > 0.2 m from old center
    end_frame: int       # analytic first frame inside the target lane
    direction: str       # "LLC" or "RLC"
    from_lane: int
    to_lane: int


def _shape_value(shape: str, u: np.ndarray):
    u = np.clip(u, 0.0, 1.0)
    if shape == "smoothstep":
        return 3.0 * u**2 - 2.0 * u**3
    if shape == "linear":
        return u
    raise ValueError(f"unknown transition shape {shape!r}")


def _shape_rate(shape: str, u: np.ndarray):
    u = np.asarray(u)
    inside = (u > 0.0) & (u < 1.0)
    if shape == "smoothstep":
        r = 6.0 * u - 6.0 * u**2
    elif shape == "linear":
        r = np.ones_like(u)
    else:
        raise ValueError(f"unknown transition shape {shape!r}")
    return np.where(inside, r, 0.0)


def _lane_center(lane: int, width: float) -> float:
    return (lane - 0.5) * width


def _braking_profile(v: VehicleScript, t: np.ndarray):
    """Exact piecewise x/vx/ax for cruise -> constant decel -> cruise."""
    t_b, v_target, decel = v.brake
    tau = max((v.speed - v_target) / decel, 0.0)
    vx = np.where(t < t_b, v.speed,
                  np.maximum(v.speed - decel * (t - t_b), v_target))
    ax = np.where((t >= t_b) & (t < t_b + tau), -decel, 0.0)
    x_brake_end = v.x0 + v.speed * t_b + v.speed * tau - 0.5 * decel * tau**2
    x = np.where(
        t < t_b, v.x0 + v.speed * t,
        np.where(t < t_b + tau,
                 v.x0 + v.speed * t - 0.5 * decel * (t - t_b) ** 2,
                 x_brake_end + v_target * (t - t_b - tau)))
    return x, vx, ax


def _lateral_profile(v: VehicleScript, t: np.ndarray, width: float):
    """Analytic y(t), vy(t), ay(t). Changes are applied in time order; an
    optional pre-cue drifts toward the target before the main transition."""
    y = np.full_like(t, _lane_center(v.lane, width) + v.lateral_bias)
    vy = np.zeros_like(t)
    ay = np.zeros_like(t)
    lane = v.lane
    for ch in sorted(v.changes, key=lambda c: c.start_time):
        target = lane + 1 if ch.direction == "left" else lane - 1
        sign = 1.0 if ch.direction == "left" else -1.0
        c0 = _lane_center(lane, width) + v.lateral_bias
        c1 = _lane_center(target, width) + v.lateral_bias
        cue = sign * ch.pre_cue_amplitude
        if ch.pre_cue_seconds > 0 and ch.pre_cue_amplitude > 0:
            uc = (t - (ch.start_time - ch.pre_cue_seconds)) / ch.pre_cue_seconds
            seg_c = (t >= ch.start_time - ch.pre_cue_seconds) & (t < ch.start_time)
            y[seg_c] = c0 + cue * _shape_value("smoothstep", uc[seg_c])
            vy[seg_c] = cue * _shape_rate("smoothstep", uc[seg_c]) / ch.pre_cue_seconds
            ay[seg_c] = 0.0
        else:
            cue = 0.0
        u = (t - ch.start_time) / ch.duration
        s = _shape_value(ch.shape, u)
        rate = _shape_rate(ch.shape, u)
        seg = t >= ch.start_time
        y[seg] = (c0 + cue) + (c1 - c0 - cue) * s[seg]
        vy[seg] = (c1 - c0 - cue) * rate[seg] / ch.duration
        if ch.shape == "smoothstep":
            inside = seg & (u > 0) & (u < 1)
            ay[inside] = (c1 - c0 - cue) * (6.0 - 12.0 * u[inside]) / ch.duration**2
        lane = target
    return y, vy, ay


def _truth_events(v: VehicleScript, y_clean: np.ndarray, width: float,
                  f_s: float, crossing: float = 0.2) -> list:
    """Analytic crossing frames per scripted change, from the noiseless profile."""
    out = []
    lane = v.lane
    n = y_clean.shape[0]
    for ch in sorted(v.changes, key=lambda c: c.start_time):
        target = lane + 1 if ch.direction == "left" else lane - 1
        c0 = _lane_center(lane, width)
        lo_f = int(math.floor((ch.start_time - ch.pre_cue_seconds) * f_s))
        hi_f = min(n - 1, int(math.ceil((ch.start_time + ch.duration) * f_s)) + 1)
        start = end = None
        tgt_lo, tgt_hi = (target - 1) * width, target * width
        for f in range(max(lo_f, 0), hi_f + 1):
            if start is None and abs(y_clean[f] - c0) > crossing:
                start = f
            if start is not None and tgt_lo < y_clean[f] < tgt_hi:
                end = f
                break
        if start is None or end is None:
            raise InfeasibleScript(
                f"vehicle {v.vehicle_id}: scripted change at t={ch.start_time} "
                f"never crosses the detection thresholds")
        out.append(TruthEvent(track_id=v.vehicle_id, start_frame=start, end_frame=end,
                              direction="LLC" if ch.direction == "left" else "RLC",
                              from_lane=lane, to_lane=target))
        lane = target
    return out


def build_lane_geometry(spec: ScenarioSpec) -> LaneGeometry:
    lanes = tuple(
        Lane(lane_id=i, center=_lane_center(i, spec.lane_width),
             left_bound=i * spec.lane_width, right_bound=(i - 1) * spec.lane_width)
        for i in range(1, spec.n_lanes + 1))
    return LaneGeometry(lanes={DIR1: lanes}, ramps=tuple(spec.ramps))


def generate_recording(spec: ScenarioSpec, seed: int):
    """Generate (Recording, list[TruthEvent]) deterministically from (spec, seed)."""
    rng = np.random.default_rng(seed)
    f_s = spec.f_s
    n_frames = int(round(spec.duration * f_s))
    t = np.arange(n_frames) / f_s
    geometry = build_lane_geometry(spec)

    ids = [v.vehicle_id for v in spec.vehicles]
    if len(set(ids)) != len(ids):
        raise InfeasibleScript("duplicate vehicle ids in scenario")

    # exact kinematics, then noise
    xs, ys, vxs, vys, axs, ays = {}, {}, {}, {}, {}, {}
    truth = []
    for v in spec.vehicles:
        if v.brake is not None:
            xs[v.vehicle_id], vxs[v.vehicle_id], axs[v.vehicle_id] = \
                _braking_profile(v, t)
        else:
            xs[v.vehicle_id] = v.x0 + v.speed * t + 0.5 * v.accel * t**2
            vxs[v.vehicle_id] = np.full(n_frames, v.speed) + v.accel * t
            axs[v.vehicle_id] = np.full(n_frames, v.accel)
        y, vy, ay = _lateral_profile(v, t, spec.lane_width)
        ys[v.vehicle_id], vys[v.vehicle_id], ays[v.vehicle_id] = y, vy, ay
        lane = v.lane
        for ch in sorted(v.changes, key=lambda c: c.start_time):
            lane += 1 if ch.direction == "left" else -1
            if lane < 1 or lane > spec.n_lanes:
                raise InfeasibleScript(
                    f"vehicle {v.vehicle_id} scripted off the roadway (lane {lane})")
        truth.extend(_truth_events(v, y, spec.lane_width, f_s))

    if spec.noise_pos > 0 or spec.noise_vel > 0:
        for v in spec.vehicles:
            i = v.vehicle_id
            xs[i] = xs[i] + rng.normal(0.0, spec.noise_pos, n_frames) if spec.noise_pos else xs[i]
            ys[i] = ys[i] + rng.normal(0.0, spec.noise_pos, n_frames) if spec.noise_pos else ys[i]
            vxs[i] = vxs[i] + rng.normal(0.0, spec.noise_vel, n_frames) if spec.noise_vel else vxs[i]
            vys[i] = vys[i] + rng.normal(0.0, spec.noise_vel, n_frames) if spec.noise_vel else vys[i]

    lane_ids = {}
    by_lane_sets = [dict() for _ in range(n_frames)]  # frame -> lane -> [(x, vid)]
    for v in spec.vehicles:
        lane_arr = np.full(n_frames, np.nan)
        for lane in geometry.lanes_for(DIR1):
            inside = (ys[v.vehicle_id] >= lane.right_bound) & (ys[v.vehicle_id] <= lane.left_bound)
            lane_arr[inside] = lane.lane_id
        lane_ids[v.vehicle_id] = lane_arr

    # collision check and per-frame lane membership
    for v in spec.vehicles:
        for f in range(n_frames):
            ln = lane_ids[v.vehicle_id][f]
            if not np.isnan(ln):
                by_lane_sets[f].setdefault(int(ln), []).append((xs[v.vehicle_id][f], v.vehicle_id))

    half_len = {v.vehicle_id: VEHICLE_LENGTH[v.vehicle_class] / 2 for v in spec.vehicles}
    class_of = {v.vehicle_id: v.vehicle_class for v in spec.vehicles}
    for f in range(0, n_frames, max(1, int(f_s // 5))):
        for lane, members in by_lane_sets[f].items():
            members = sorted(members)
            for (xa, va), (xb, vb) in zip(members, members[1:]):
                if (xb - half_len[vb]) - (xa + half_len[va]) < MIN_SPACING:
                    raise InfeasibleScript(
                        f"vehicles {va} and {vb} overlap in lane {lane} near t={f / f_s:.2f}s")

    def neighbor_scan(vid, f):
        """(slot -> (nid, gap, dv, da)) computed geometrically at frame f."""
        out = {}
        x_e = xs[vid][f]
        my_lane = lane_ids[vid][f]
        if np.isnan(my_lane):
            return {s: None for s in SLOT_NAMES}
        my_lane = int(my_lane)
        for slot in SLOT_NAMES:
            side, role = {
                "ego_lead": (0, "lead"), "ego_rear": (0, "rear"),
                "left_lead": (1, "lead"), "left_rear": (1, "rear"),
                "right_lead": (-1, "lead"), "right_rear": (-1, "rear")}[slot]
            lane = my_lane + side
            cands = [(x, nid) for x, nid in by_lane_sets[f].get(lane, ()) if nid != vid]
            if role == "lead":
                cands = [(x, nid) for x, nid in cands if x > x_e]
                pick = min(cands) if cands else None
            else:
                cands = [(x, nid) for x, nid in cands if x <= x_e]
                pick = max(cands) if cands else None
            if pick is None:
                out[slot] = None
                continue
            xn, nid = pick
            gap = abs(xn - x_e) - half_len[nid] - half_len[vid]
            if gap > SIGHT_RANGE:
                out[slot] = None
                continue
            out[slot] = (nid, max(gap, 0.0),
                         vxs[nid][f] - vxs[vid][f], axs[nid][f] - axs[vid][f])
        return out

    tracks = []
    for v in spec.vehicles:
        vid = v.vehicle_id
        n_ids = {s: np.full(n_frames, np.nan) for s in SLOT_NAMES}
        n_gap = {s: np.full(n_frames, np.nan) for s in SLOT_NAMES}
        n_dv = {s: np.full(n_frames, np.nan) for s in SLOT_NAMES}
        n_da = {s: np.full(n_frames, np.nan) for s in SLOT_NAMES}
        for f in range(n_frames):
            found = neighbor_scan(vid, f)
            for s, val in found.items():
                if val is None:
                    continue
                n_ids[s][f], n_gap[s][f], n_dv[s][f], n_da[s][f] = val

        dhw = n_gap["ego_lead"].copy()
        with np.errstate(divide="ignore", invalid="ignore"):
            thw = np.where(vxs[vid] > 0.1, dhw / vxs[vid], np.nan)
            closing = -n_dv["ego_lead"]  # >0 when ego closes on the leader
            ttc = np.where(closing > 0.01, dhw / closing, np.nan)
        heading = np.arctan2(vys[vid], vxs[vid])
        yaw_rate = np.gradient(np.unwrap(heading)) * f_s

        columns = {
            "t": t.copy(), "x": xs[vid], "y": ys[vid], "vx": vxs[vid], "vy": vys[vid],
            "ax": axs[vid], "ay": ays[vid], "lat_velocity": vys[vid].copy(),
            "lane_id": lane_ids[vid], "heading": heading, "yaw_rate": yaw_rate,
            "dhw": dhw, "thw": thw, "ttc": ttc,
        }
        lane_centers = {l.lane_id: l.center for l in geometry.lanes_for(DIR1)}
        offset = np.full(n_frames, np.nan)
        for lid, c in lane_centers.items():
            offset[lane_ids[vid] == lid] = ys[vid][lane_ids[vid] == lid] - c
        track = Track(
            track_id=vid, recording_id=spec.recording_id, location_id=spec.location_id,
            driving_direction=DIR1, vehicle_class=class_of[vid], f_s=f_s,
            frame_index=np.arange(n_frames, dtype=np.int64), columns=columns,
            neighbor_ids=n_ids, neighbor_gaps=n_gap, neighbor_dvs=n_dv, neighbor_das=n_da,
            lateral_offset=offset, speed_limit=spec.speed_limit)
        tracks.append(validate_track(track, f_s))

    rec = Recording(recording_id=spec.recording_id, location_id=spec.location_id,
                    f_s=f_s, lane_geometry=geometry, tracks=tuple(tracks))
    return rec, truth


@dataclass(frozen=True)
class RandomScenarioParams:
    """Knobs for the corridor-based random scenario builder.

    Each lane-changing vehicle gets its own longitudinal corridor with a
    supporting cast: a slower leader it closes on (the kinematic cause),
    a follower, occupants in the non-target lane, and far, same-speed
    vehicles in the target lane, so availability features separate the
    direction. A short sub-threshold lateral pre-cue precedes each change.
    """
    n_lanes: int = 3
    lane_width: float = 3.7
    duration: float = 40.0
    f_s: float = 25.0
    n_changers: int = 6
    n_cruisers: int = 4
    n_brakers: int = 6           # close on a slow leader but brake, never change
    n_mixed: int = 0             # weaving tracks (both directions close together)
    noise_pos: float = 0.0
    noise_vel: float = 0.0
    corridor_spacing: float = 1000.0
    speed_range: tuple = (28.0, 34.0)
    closing_speed_range: tuple = (3.0, 6.0)
    trigger_gap_range: tuple = (15.0, 25.0)
    transition_seconds: float = 2.0
    pre_cue_seconds: float = 1.2
    # cue peak + smoothed position noise must stay well below the 0.2 m
    # event threshold: the crossing must land on the steep part of the
    # transition or noise shifts the detected start by several frames
    pre_cue_amplitude: float = 0.08
    speed_limit: float = 33.33


def random_scenario(params: RandomScenarioParams, recording_id: int,
                    location_id: int, seed: int) -> ScenarioSpec:
    """Deterministic multi-vehicle scenario with separable maneuvers."""
    rng = np.random.default_rng([seed, recording_id])
    p = params
    vehicles = []
    vid = 1

    def add(script):
        nonlocal vid
        vehicles.append(script)
        vid += 1

    corridor = 0

    def base_x():
        return corridor * p.corridor_spacing

    tau_b = 2.0  # leader slow-down duration; closing begins around its midpoint

    def closing_leader_gap(dv, g_end, t_end):
        """Stable gap and leader slow-down time such that the gap reaches
        g_end exactly at t_end after a randomized-length closing episode.

        Episodes are short enough that anchors two-plus seconds out often
        precede any observable signal, which is what makes the long-horizon
        task intrinsically harder."""
        tau_close = rng.uniform(1.8, 3.4)
        g_stable = g_end + dv * (tau_close - tau_b / 2)
        return g_stable, t_end - tau_close

    for _ in range(p.n_changers):
        x0 = base_x()
        corridor += 1
        v = rng.uniform(*p.speed_range)
        dv = rng.uniform(*p.closing_speed_range)
        g_trigger = rng.uniform(*p.trigger_gap_range)
        t0 = rng.uniform(12.0, p.duration - 8.0)
        lane = int(rng.integers(1, p.n_lanes + 1))
        if lane == 1:
            direction = "left"
        elif lane == p.n_lanes:
            direction = "right"
        else:
            direction = "left" if rng.uniform() < 0.5 else "right"
        target = lane + 1 if direction == "left" else lane - 1
        other = lane - 1 if direction == "left" else lane + 1
        g_stable, t_slow = closing_leader_gap(dv, g_trigger, t0)

        add(VehicleScript(
            vehicle_id=vid, lane=lane, x0=x0, speed=v,
            changes=(LaneChangeScript(
                start_time=t0, direction=direction,
                duration=p.transition_seconds,
                pre_cue_seconds=p.pre_cue_seconds,
                pre_cue_amplitude=p.pre_cue_amplitude),)))
        # leader follows at the same speed, then slows and stays slow;
        # nothing distinguishes changer from braker corridors before that
        add(VehicleScript(vehicle_id=vid, lane=lane,
                          x0=x0 + g_stable + VEHICLE_LENGTH["car"], speed=v,
                          brake=(t_slow, v - dv, dv / tau_b)))
        # follower reacts to the leader's slow-down shortly after it ends
        add(VehicleScript(vehicle_id=vid, lane=lane,
                          x0=x0 - rng.uniform(20.0, 40.0), speed=v,
                          brake=(t_slow + tau_b, v - dv, dv / tau_b)))
        # the non-target side is occupied ahead and behind (when the lane exists)
        if 1 <= other <= p.n_lanes:
            add(VehicleScript(vehicle_id=vid, lane=other,
                              x0=x0 + rng.uniform(10.0, 35.0), speed=v))
            add(VehicleScript(vehicle_id=vid, lane=other,
                              x0=x0 - rng.uniform(10.0, 35.0), speed=v))
        # the target lane is free nearby but visibly occupied far away
        add(VehicleScript(vehicle_id=vid, lane=target,
                          x0=x0 + rng.uniform(120.0, 200.0), speed=v))
        add(VehicleScript(vehicle_id=vid, lane=target,
                          x0=x0 - rng.uniform(120.0, 200.0), speed=v))

    for k in range(p.n_brakers):
        # same corridor shape as a changer (leader slows, gap closes, one
        # side free) but the driver brakes to follow. Half brake as late as
        # changers trigger, so gap size alone cannot tell the classes apart
        # beyond the pre-cue horizon.
        x0 = base_x()
        corridor += 1
        v = rng.uniform(*p.speed_range)
        dv = rng.uniform(*p.closing_speed_range)
        if k % 2 == 0:
            g_brake = rng.uniform(30.0, 45.0)
        else:
            g_brake = rng.uniform(18.0, 32.0)
        g_final = rng.uniform(8.0, 14.0)
        t_b = rng.uniform(12.0, p.duration - 10.0)
        lane = int(rng.integers(1, p.n_lanes + 1))
        free = "left" if (lane == 1 or (lane < p.n_lanes and rng.uniform() < 0.5)) else "right"
        other = lane - 1 if free == "left" else lane + 1
        g_stable, t_slow = closing_leader_gap(dv, g_brake, t_b)
        tau = 2.0 * (g_brake - g_final) / dv
        free_lane = lane + 1 if free == "left" else lane - 1
        add(VehicleScript(vehicle_id=vid, lane=lane, x0=x0, speed=v,
                          brake=(t_b, v - dv, dv / tau)))
        add(VehicleScript(vehicle_id=vid, lane=lane,
                          x0=x0 + g_stable + VEHICLE_LENGTH["car"], speed=v,
                          brake=(t_slow, v - dv, dv / tau_b)))
        add(VehicleScript(vehicle_id=vid, lane=lane,
                          x0=x0 - rng.uniform(20.0, 40.0), speed=v,
                          brake=(t_slow + tau_b, v - dv, dv / tau_b)))
        if 1 <= other <= p.n_lanes:
            add(VehicleScript(vehicle_id=vid, lane=other,
                              x0=x0 + rng.uniform(10.0, 35.0), speed=v))
            add(VehicleScript(vehicle_id=vid, lane=other,
                              x0=x0 - rng.uniform(10.0, 35.0), speed=v))
        # mirror the changer corridors' far traffic in the free lane
        add(VehicleScript(vehicle_id=vid, lane=free_lane,
                          x0=x0 + rng.uniform(120.0, 200.0), speed=v))
        add(VehicleScript(vehicle_id=vid, lane=free_lane,
                          x0=x0 - rng.uniform(120.0, 200.0), speed=v))

    for _ in range(p.n_cruisers):
        x0 = base_x()
        corridor += 1
        v = rng.uniform(*p.speed_range)
        lane = int(rng.integers(1, p.n_lanes + 1))
        add(VehicleScript(vehicle_id=vid, lane=lane, x0=x0, speed=v,
                          lateral_bias=rng.uniform(-0.1, 0.1)))
        add(VehicleScript(vehicle_id=vid, lane=lane,
                          x0=x0 + rng.uniform(25.0, 50.0), speed=v))

    for _ in range(p.n_mixed):
        # a quick weave: complete one change, settle one second, change back
        x0 = base_x()
        corridor += 1
        v = rng.uniform(*p.speed_range)
        lane = max(2, p.n_lanes - 1)
        dur = 1.6
        t0 = rng.uniform(10.0, p.duration - 12.0)
        # the second change starts after the first has entered the target lane
        # (0.5*dur) and stayed quiet for one second, plus smoothing margin
        t1 = t0 + 0.5 * dur + 1.0 + 0.35
        add(VehicleScript(
            vehicle_id=vid, lane=lane, x0=x0, speed=v,
            changes=(LaneChangeScript(start_time=t0, direction="left", duration=dur),
                     LaneChangeScript(start_time=t1, direction="right", duration=dur))))

    return ScenarioSpec(
        n_lanes=p.n_lanes, lane_width=p.lane_width, duration=p.duration,
        f_s=p.f_s, vehicles=tuple(vehicles), recording_id=recording_id,
        location_id=location_id, noise_pos=p.noise_pos, noise_vel=p.noise_vel,
        speed_limit=p.speed_limit)
