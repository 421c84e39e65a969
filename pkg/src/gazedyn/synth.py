"""Synthetic session generator standing in for recorded gameplay.

Builds a gaze stream, shot log and character tracks whose downstream
extraction hits chosen targets exactly: how many learn records, how many
good-to-bad transitions, how many records flagged bad and what their
durations sum to, plus a number of chance shots that no fixation covers.

Geometry of the stream: each intended fixation is a tight pixel cluster
sampled at the tracker rate (small jitter keeps consecutive steps under
the distance threshold), separated from its neighbours by a large spatial
jump. Chance-shot zones are wandering singleton samples spaced wider than
the time threshold, so they chain with nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidConfig
from .records import (
    CharacterTrackSample,
    GazeSample,
    ShotEvent,
    write_gaze,
    write_shots,
    write_tracks,
)

SCREEN_W = 1920.0
SCREEN_H = 1080.0
MIN_SACCADE_PX = 30.0
DEAD_ZONE_SPACING_S = 0.15  # wider than the chaining time threshold
TRACK_STEP_S = 0.5


@dataclass(frozen=True)
class SessionSpec:
    """Targets for one generated session."""

    records: int = 36
    transitions: int = 5
    ending: int = 6
    ending_period: float = 18.9239
    chance_shots: int = 4
    sample_rate_hz: float = 30.0
    seed: int = 0

    def __post_init__(self):
        if self.records < 0 or self.chance_shots < 0:
            raise InvalidConfig("counts must be non-negative")
        if not 0 <= self.ending <= self.records:
            raise InvalidConfig("ending must lie in [0, records]")
        if self.transitions < 0 or self.transitions > self.ending:
            raise InvalidConfig("transitions must lie in [0, ending]")
        if self.transitions > self.records - self.ending:
            raise InvalidConfig(
                "each transition needs a preceding good record: "
                "transitions must not exceed records - ending")
        if self.ending > 0 and self.ending_period <= 0:
            raise InvalidConfig("ending_period must be positive")
        if self.sample_rate_hz <= 10.0:
            raise InvalidConfig(
                "sample_rate_hz must exceed 10 so consecutive samples "
                "stay under the 0.1 s chaining threshold")


@dataclass
class Session:
    gaze: list[GazeSample]
    shots: list[ShotEvent]
    tracks: dict[int, list[CharacterTrackSample]]


def goodness_sequence(records: int, transitions: int, ending: int,
                      rng: np.random.Generator) -> list[int]:
    """A 0/1 sequence with exact length, ones count and 0->1 flip count."""
    zeros = records - ending
    if transitions == 0:
        return [1] * ending + [0] * zeros
    seq = [1] * (ending - transitions)
    slack = rng.multinomial(zeros - transitions,
                            [1.0 / (transitions + 1)] * (transitions + 1))
    for b in range(transitions):
        seq.extend([0] * (1 + int(slack[b])))
        seq.append(1)
    seq.extend([0] * int(slack[-1]))
    return seq


def _fixation_spacings(duration: float, dt: float) -> list[float]:
    full = int(duration / dt)
    rem = duration - full * dt
    spacings = [dt] * full
    if rem > 1e-9 or not spacings:
        spacings.append(rem if rem > 1e-9 else duration)
    return spacings


def _next_center(prev: np.ndarray | None,
                 rng: np.random.Generator) -> np.ndarray:
    while True:
        center = rng.uniform((60.0, 60.0), (SCREEN_W - 60.0, SCREEN_H - 60.0))
        if prev is None or float(np.hypot(*(center - prev))) >= MIN_SACCADE_PX:
            return center


def _track_curves(rng: np.random.Generator):
    d_base = float(rng.uniform(4.0, 30.0))
    d_amp = float(rng.uniform(0.3, min(3.0, d_base - 1.0)))
    d_phase = float(rng.uniform(0.0, 2.0 * math.pi))
    s_base = float(rng.uniform(0.8, 6.0))
    s_amp = float(rng.uniform(0.1, s_base - 0.5))
    s_phase = float(rng.uniform(0.0, 2.0 * math.pi))

    def distance(t: float) -> float:
        return d_base + d_amp * math.sin(0.15 * t + d_phase)

    def speed(t: float) -> float:
        return s_base + s_amp * math.cos(0.2 * t + s_phase)

    return distance, speed


def generate_session(spec: SessionSpec) -> Session:
    """Deterministic session for one seed; same spec, same output."""
    rng = np.random.default_rng(spec.seed)
    dt = 1.0 / spec.sample_rate_hz
    seq = goodness_sequence(spec.records, spec.transitions, spec.ending, rng)

    durations = np.empty(spec.records)
    if spec.ending > 0:
        parts = rng.dirichlet(np.full(spec.ending, 2.0)) * spec.ending_period
    else:
        parts = np.empty(0)
    plain = rng.uniform(0.3, 1.5, size=spec.records - spec.ending)
    ei = pi = 0
    for j, flag in enumerate(seq):
        if flag == 1:
            durations[j] = parts[ei]
            ei += 1
        else:
            durations[j] = plain[pi]
            pi += 1

    # which inter-fixation gaps host a chance-shot dead zone (the slot after
    # fixation j; slot `records` means after the last one)
    n_slots = spec.records + 1
    zone_slots = sorted(
        rng.choice(n_slots, size=spec.chance_shots,
                   replace=spec.chance_shots > n_slots).tolist()
        if spec.chance_shots else [])
    zones_per_slot = {s: zone_slots.count(s) for s in set(zone_slots)}

    gaze: list[GazeSample] = []
    shot_rows: list[tuple] = []  # (t, character_id, goodness) in time order
    center = None
    cursor = 2.0

    def emit_dead_zone(count: int):
        nonlocal cursor, center
        for _ in range(count):
            for _ in range(3):
                cursor += DEAD_ZONE_SPACING_S
                center = _next_center(center, rng)
                gaze.append(GazeSample(t=cursor, x=float(center[0]),
                                       y=float(center[1])))
            # chance shot at the middle singleton of the zone
            mid_t = gaze[-2].t
            character = (len(shot_rows) % max(spec.records, 1)) + 1
            shot_rows.append((mid_t, character, int(rng.integers(0, 2)),
                              True))
            cursor += DEAD_ZONE_SPACING_S

    if 0 in zones_per_slot:
        emit_dead_zone(zones_per_slot[0])
    for j in range(spec.records):
        center = _next_center(center, rng)
        spacings = _fixation_spacings(float(durations[j]), dt)
        t_start = cursor
        jitter = rng.uniform(-1.0, 1.0, size=(len(spacings) + 1, 2))
        gaze.append(GazeSample(t=cursor, x=float(center[0] + jitter[0, 0]),
                               y=float(center[1] + jitter[0, 1])))
        for si, gap in enumerate(spacings):
            cursor += gap
            gaze.append(GazeSample(t=cursor,
                                   x=float(center[0] + jitter[si + 1, 0]),
                                   y=float(center[1] + jitter[si + 1, 1])))
        shot_rows.append((t_start + float(durations[j]) / 2.0, j + 1,
                          seq[j], False))
        cursor += dt
        if (j + 1) in zones_per_slot:
            emit_dead_zone(zones_per_slot[j + 1])

    session_end = cursor + 1.0

    tracks: dict[int, list[CharacterTrackSample]] = {}
    curves = {}
    n_characters = max(spec.records, 1)
    times = [TRACK_STEP_S * i
             for i in range(int(session_end / TRACK_STEP_S) + 2)]
    for c in range(1, n_characters + 1):
        distance, speed = _track_curves(rng)
        curves[c] = (distance, speed)
        flag = seq[c - 1] if c - 1 < len(seq) else 0
        tracks[c] = [CharacterTrackSample(
            t=t, character_id=c, distance_to_player=distance(t),
            speed_rel_player=speed(t), goodness=flag) for t in times]

    shots: list[ShotEvent] = []
    shot_rows.sort(key=lambda r: r[0])
    for t, character, flag, _is_chance in shot_rows:
        distance, _speed = curves[character]
        shots.append(ShotEvent(
            t=t, character_id=character, goodness=flag,
            shot_pos=tuple(float(v) for v in rng.uniform(-60.0, 60.0, 3)),
            player_pos=tuple(float(v) for v in rng.uniform(-60.0, 60.0, 3)),
            distance=distance(t),
        ))
    return Session(gaze=gaze, shots=shots, tracks=tracks)


def write_session(session: Session, out_dir,
                  ) -> tuple[Path, Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gaze_path = out / "gaze.csv"
    shots_path = out / "shots.csv"
    tracks_path = out / "tracks.csv"
    write_gaze(session.gaze, gaze_path)
    write_shots(session.shots, shots_path)
    write_tracks(session.tracks, tracks_path)
    return gaze_path, shots_path, tracks_path
