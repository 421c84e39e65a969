"""Three-stage feature extraction: fixations, shot matching, learn matrix.

Stage one chains consecutive gaze samples into fixations whenever both the
spatial step and the time step stay under their thresholds. Stage two maps
each shot onto the fixation whose span covers it; shots covered by no
fixation are chance shots and are dropped. Stage three assembles the learn
matrix: per matched shot, how many fixations the player had spent on that
character, for how long, and the character's distance and speed at the
moment of the shot.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AmbiguousMatch,
    EmptyInput,
    InvalidGoodness,
    MalformedRow,
    MissingTrack,
)
from .records import (
    CharacterTrackSample,
    GazeSample,
    ShotEvent,
    format_float,
)

DIST_THRESHOLD_PX = 5.0
TIME_THRESHOLD_S = 0.1


@dataclass(frozen=True)
class FixationRecord:
    """One detected fixation; gap_to_next is None for the last one."""

    index: int  # 1-based
    t_start: float
    t_end: float
    duration: float
    mean_x: float
    mean_y: float
    gap_to_next: Optional[float]


@dataclass(frozen=True)
class ShotFixationRecord:
    """A shot together with the fixation whose span covers it."""

    fixation_index: int
    shot_time: float
    t_start: float
    t_end: float
    duration: float
    goodness: int
    character_id: int


@dataclass(frozen=True)
class LearnRecord:
    """One row of the learn matrix: the per-shot decision features."""

    fixation_count: int
    gaze_duration: float
    distance: float
    speed: float
    goodness: int


def euclidean_distance(a: GazeSample, b: GazeSample) -> float:
    """Pixel distance between two gaze samples."""
    return math.hypot(b.x - a.x, b.y - a.y)


def detect_fixations(samples: Sequence[GazeSample],
                     dist_threshold: float = DIST_THRESHOLD_PX,
                     time_threshold: float = TIME_THRESHOLD_S,
                     ) -> list[FixationRecord]:
    """Chain time-sorted samples into fixations.

    Consecutive samples stay in one chain while the pixel distance between
    them is strictly under dist_threshold and the time difference strictly
    under time_threshold. Chains of at least two samples become fixations;
    a single sample has no duration and is discarded.
    """
    if dist_threshold <= 0 or time_threshold <= 0:
        raise ValueError("thresholds must be positive")
    chains = []
    start = 0
    for i in range(1, len(samples) + 1):
        linked = (
            i < len(samples)
            and euclidean_distance(samples[i - 1], samples[i]) < dist_threshold
            and samples[i].t - samples[i - 1].t < time_threshold
        )
        if not linked:
            if i - start >= 2:
                chains.append((start, i - 1))
            start = i

    fixations = []
    for idx, (a, b) in enumerate(chains):
        xs = np.array([s.x for s in samples[a:b + 1]])
        ys = np.array([s.y for s in samples[a:b + 1]])
        t_start = samples[a].t
        t_end = samples[b].t
        gap = None
        if idx + 1 < len(chains):
            gap = samples[chains[idx + 1][0]].t - t_end
        fixations.append(FixationRecord(
            index=idx + 1,
            t_start=t_start,
            t_end=t_end,
            duration=t_end - t_start,
            mean_x=float(xs.mean()),
            mean_y=float(ys.mean()),
            gap_to_next=gap,
        ))
    return fixations


def match_shots(fixations: Sequence[FixationRecord],
                shots: Sequence[ShotEvent]) -> list[ShotFixationRecord]:
    """Pair each shot with the fixation covering its time, if any.

    Shots inside no fixation span are chance shots and produce nothing.
    Two fixations covering the same shot cannot happen for a fixation set
    produced by detection (spans are disjoint); seeing it means the input
    is corrupt and raises AmbiguousMatch.
    """
    records = []
    for shot in shots:
        covering = [f for f in fixations
                    if f.t_start <= shot.t <= f.t_end]
        if len(covering) > 1:
            raise AmbiguousMatch(
                f"shot at t={shot.t} lies inside fixations "
                f"{[f.index for f in covering]}")
        if covering:
            f = covering[0]
            records.append(ShotFixationRecord(
                fixation_index=f.index,
                shot_time=shot.t,
                t_start=f.t_start,
                t_end=f.t_end,
                duration=f.duration,
                goodness=shot.goodness,
                character_id=shot.character_id,
            ))
    return records


def _interp_track(track: Sequence[CharacterTrackSample], character_id: int,
                  t: float) -> tuple[float, float]:
    times = [s.t for s in track]
    if not times or t < times[0] or t > times[-1]:
        raise MissingTrack(
            f"track for character {character_id} does not cover t={t}")
    j = bisect_left(times, t)
    if j < len(times) and times[j] == t:
        return track[j].distance_to_player, track[j].speed_rel_player
    lo, hi = track[j - 1], track[j]
    w = (t - lo.t) / (hi.t - lo.t)
    return (lo.distance_to_player + w * (hi.distance_to_player
                                         - lo.distance_to_player),
            lo.speed_rel_player + w * (hi.speed_rel_player
                                       - lo.speed_rel_player))


def build_learn(shot_fixations: Sequence[ShotFixationRecord],
                fixations: Sequence[FixationRecord],
                tracks: dict[int, Sequence[CharacterTrackSample]],
                ) -> list[LearnRecord]:
    """Assemble the learn matrix from matched shots.

    A fixation is attributed to the character of the shot fired during it;
    a fixation with no shot inside belongs to the character of the next
    shot after it starts, and to nobody if the session ends first. Each
    matched shot then reports the cumulative count and total duration of
    its character's fixations up to and including that moment, plus the
    character's distance and speed at the shot, interpolated linearly from
    its track. No extrapolation: a shot outside track coverage, or on a
    character without a track, raises MissingTrack.
    """
    ordered = sorted(shot_fixations, key=lambda r: r.shot_time)
    shot_times = [s.shot_time for s in ordered]
    inside: dict[int, list[ShotFixationRecord]] = {}
    for s in ordered:
        inside.setdefault(s.fixation_index, []).append(s)

    # Credit events (time, character, duration): one per character that
    # fired inside the fixation, at that character's first shot in it; a
    # shot-free fixation goes to whoever fires next after it starts.
    credit_list: list[tuple[float, int, float]] = []
    for f in fixations:
        holders = inside.get(f.index)
        if holders:
            first_by_char: dict[int, float] = {}
            for s in holders:
                first_by_char.setdefault(s.character_id, s.shot_time)
            for character, when in first_by_char.items():
                credit_list.append((when, character, f.duration))
        else:
            j = bisect_left(shot_times, f.t_start)
            if j < len(ordered):
                credit_list.append((ordered[j].shot_time,
                                    ordered[j].character_id, f.duration))
    credit_list.sort(key=lambda e: e[0])

    records = []
    counts: dict[int, int] = {}
    totals: dict[int, float] = {}
    ci = 0
    for shot in ordered:
        while ci < len(credit_list) and credit_list[ci][0] <= shot.shot_time:
            _, character, duration = credit_list[ci]
            counts[character] = counts.get(character, 0) + 1
            totals[character] = totals.get(character, 0.0) + duration
            ci += 1
        if shot.character_id not in tracks:
            raise MissingTrack(
                f"no track data for character {shot.character_id}")
        distance, speed = _interp_track(tracks[shot.character_id],
                                        shot.character_id, shot.shot_time)
        records.append(LearnRecord(
            fixation_count=counts.get(shot.character_id, 0),
            gaze_duration=totals.get(shot.character_id, 0.0),
            distance=distance,
            speed=speed,
            goodness=shot.goodness,
        ))
    return records


# --- artifact CSV schemas --------------------------------------------------

FIX_HEADER = "index,t_start,t_end,duration,mean_x,mean_y,gap_to_next"
UNITYFILE_HEADER = ("fixation_index,shot_time,t_start,t_end,duration,"
                    "goodness,character_id")
LEARN_HEADER = "fixation_count,gaze_duration,distance,speed,goodness"


def write_fixations(fixations: Sequence[FixationRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(FIX_HEADER + "\n")
        for r in fixations:
            gap = "" if r.gap_to_next is None else format_float(r.gap_to_next)
            f.write(f"{r.index},{format_float(r.t_start)},"
                    f"{format_float(r.t_end)},{format_float(r.duration)},"
                    f"{format_float(r.mean_x)},{format_float(r.mean_y)},"
                    f"{gap}\n")


def read_fixations(path) -> list[FixationRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != FIX_HEADER:
        raise MalformedRow(f"{path}: expected header '{FIX_HEADER}'")
    fixations = []
    for i, line in enumerate(lines[1:]):
        fields = line.split(",")
        if len(fields) != 7:
            raise MalformedRow(f"{path} line {i + 2}: expected 7 fields")
        try:
            gap = None if fields[6] == "" else float(fields[6])
            fixations.append(FixationRecord(
                index=int(fields[0]), t_start=float(fields[1]),
                t_end=float(fields[2]), duration=float(fields[3]),
                mean_x=float(fields[4]), mean_y=float(fields[5]),
                gap_to_next=gap))
        except ValueError as exc:
            raise MalformedRow(f"{path} line {i + 2}: {exc}") from None
    return fixations


def write_shot_fixations(records: Sequence[ShotFixationRecord],
                         path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(UNITYFILE_HEADER + "\n")
        for r in records:
            f.write(f"{r.fixation_index},{format_float(r.shot_time)},"
                    f"{format_float(r.t_start)},{format_float(r.t_end)},"
                    f"{format_float(r.duration)},{r.goodness},"
                    f"{r.character_id}\n")


def read_shot_fixations(path) -> list[ShotFixationRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != UNITYFILE_HEADER:
        raise MalformedRow(f"{path}: expected header '{UNITYFILE_HEADER}'")
    records = []
    for i, line in enumerate(lines[1:]):
        fields = line.split(",")
        if len(fields) != 7:
            raise MalformedRow(f"{path} line {i + 2}: expected 7 fields")
        try:
            records.append(ShotFixationRecord(
                fixation_index=int(fields[0]), shot_time=float(fields[1]),
                t_start=float(fields[2]), t_end=float(fields[3]),
                duration=float(fields[4]), goodness=int(fields[5]),
                character_id=int(fields[6])))
        except ValueError as exc:
            raise MalformedRow(f"{path} line {i + 2}: {exc}") from None
    return records


def write_learn(records: Sequence[LearnRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(LEARN_HEADER + "\n")
        for r in records:
            f.write(f"{r.fixation_count},{format_float(r.gaze_duration)},"
                    f"{format_float(r.distance)},{format_float(r.speed)},"
                    f"{r.goodness}\n")


def read_learn(path) -> list[LearnRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != LEARN_HEADER:
        raise MalformedRow(f"{path}: expected header '{LEARN_HEADER}'")
    if len(lines) < 2:
        raise EmptyInput(f"{path}: learn matrix has no rows")
    records = []
    for i, line in enumerate(lines[1:]):
        fields = line.split(",")
        if len(fields) != 5:
            raise MalformedRow(f"{path} line {i + 2}: expected 5 fields")
        try:
            goodness = int(fields[4])
            if goodness not in (0, 1):
                raise InvalidGoodness(
                    f"{path} line {i + 2}: goodness must be 0 or 1")
            records.append(LearnRecord(
                fixation_count=int(fields[0]), gaze_duration=float(fields[1]),
                distance=float(fields[2]), speed=float(fields[3]),
                goodness=goodness))
        except ValueError as exc:
            raise MalformedRow(f"{path} line {i + 2}: {exc}") from None
    return records
