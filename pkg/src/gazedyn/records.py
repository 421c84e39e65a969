"""Raw session data model and CSV parsing for the three input logs.

All files are UTF-8 comma-separated values with one header row, ``.``
decimal points and seconds for every time column. Floats are serialized
in shortest exact round-trip form (repr), so writing what was loaded from
a canonical file reproduces it byte for byte.

Loaders validate, they never repair: out-of-order or duplicate timestamps
raise instead of being sorted or merged away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import (
    EmptyFile,
    InputIOError,
    InvalidGoodness,
    MalformedRow,
    NonMonotonicTime,
)


def format_float(value: float) -> str:
    """Shortest decimal that parses back to exactly the same float."""
    return repr(float(value))


@dataclass(frozen=True)
class GazeSample:
    """One eye-tracker reading: seconds since session start, screen pixels."""

    t: float
    x: float
    y: float


@dataclass(frozen=True)
class ShotEvent:
    """One recorded shot: when, at whom, and where both parties stood."""

    t: float
    character_id: int
    goodness: int  # 1 = bad, 0 = good
    shot_pos: tuple[float, float, float]
    player_pos: tuple[float, float, float]
    distance: float


@dataclass(frozen=True)
class CharacterTrackSample:
    """One character-state reading relative to the player."""

    t: float
    character_id: int
    distance_to_player: float
    speed_rel_player: float
    goodness: int


GAZE_HEADER = "t,x,y"
SHOTS_HEADER = ("t,character_id,goodness,shot_x,shot_y,shot_z,"
                "player_x,player_y,player_z,distance")
TRACKS_HEADER = "t,character_id,distance,speed,goodness"


def _read_lines(path, header: str) -> list[str]:
    path = Path(path)
    if not path.exists():
        raise InputIOError(f"input file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise MalformedRow(f"{path}: missing header row (file is empty)")
    if lines[0] != header:
        raise MalformedRow(f"{path}: expected header '{header}', "
                           f"got '{lines[0]}'")
    return lines[1:]


def _parse_float(path, lineno: int, name: str, text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MalformedRow(
            f"{path} line {lineno}: non-numeric {name} '{text}'") from None
    if not math.isfinite(value):
        raise MalformedRow(f"{path} line {lineno}: {name} is not finite")
    return value


def _parse_int(path, lineno: int, name: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise MalformedRow(
            f"{path} line {lineno}: non-integer {name} '{text}'") from None


def _parse_goodness(path, lineno: int, text: str) -> int:
    value = _parse_int(path, lineno, "goodness", text)
    if value not in (0, 1):
        raise InvalidGoodness(
            f"{path} line {lineno}: goodness must be 0 or 1, got {value}")
    return value


def load_gaze(path) -> list[GazeSample]:
    """Parse a gaze log; strictly increasing non-negative times required."""
    rows = _read_lines(path, GAZE_HEADER)
    if not rows:
        raise EmptyFile(f"{path}: gaze log has no samples")
    samples = []
    prev_t = -math.inf
    for i, line in enumerate(rows):
        lineno = i + 2
        fields = line.split(",")
        if len(fields) != 3:
            raise MalformedRow(
                f"{path} line {lineno}: expected 3 fields, got {len(fields)}")
        t = _parse_float(path, lineno, "t", fields[0])
        if t < 0:
            raise MalformedRow(f"{path} line {lineno}: negative time {t}")
        if t <= prev_t:
            raise NonMonotonicTime(
                f"{path} line {lineno}: time {t} does not increase past "
                f"{prev_t}")
        prev_t = t
        samples.append(GazeSample(
            t=t,
            x=_parse_float(path, lineno, "x", fields[1]),
            y=_parse_float(path, lineno, "y", fields[2]),
        ))
    return samples


def load_shots(path) -> list[ShotEvent]:
    """Parse a shot log; an empty log means the player never fired."""
    rows = _read_lines(path, SHOTS_HEADER)
    shots = []
    prev_t = -math.inf
    for i, line in enumerate(rows):
        lineno = i + 2
        fields = line.split(",")
        if len(fields) != 10:
            raise MalformedRow(
                f"{path} line {lineno}: expected 10 fields, got {len(fields)}")
        t = _parse_float(path, lineno, "t", fields[0])
        if t <= prev_t:
            raise NonMonotonicTime(
                f"{path} line {lineno}: time {t} does not increase past "
                f"{prev_t}")
        prev_t = t
        distance = _parse_float(path, lineno, "distance", fields[9])
        if distance < 0:
            raise MalformedRow(
                f"{path} line {lineno}: negative distance {distance}")
        shots.append(ShotEvent(
            t=t,
            character_id=_parse_int(path, lineno, "character_id", fields[1]),
            goodness=_parse_goodness(path, lineno, fields[2]),
            shot_pos=tuple(_parse_float(path, lineno, n, v) for n, v in
                           zip(("shot_x", "shot_y", "shot_z"), fields[3:6])),
            player_pos=tuple(_parse_float(path, lineno, n, v) for n, v in
                             zip(("player_x", "player_y", "player_z"),
                                 fields[6:9])),
            distance=distance,
        ))
    return shots


def load_tracks(path) -> dict[int, list[CharacterTrackSample]]:
    """Parse character tracks, grouped by id, time-sorted within a group."""
    rows = _read_lines(path, TRACKS_HEADER)
    tracks: dict[int, list[CharacterTrackSample]] = {}
    for i, line in enumerate(rows):
        lineno = i + 2
        fields = line.split(",")
        if len(fields) != 5:
            raise MalformedRow(
                f"{path} line {lineno}: expected 5 fields, got {len(fields)}")
        sample = CharacterTrackSample(
            t=_parse_float(path, lineno, "t", fields[0]),
            character_id=_parse_int(path, lineno, "character_id", fields[1]),
            distance_to_player=_parse_float(path, lineno, "distance",
                                            fields[2]),
            speed_rel_player=_parse_float(path, lineno, "speed", fields[3]),
            goodness=_parse_goodness(path, lineno, fields[4]),
        )
        group = tracks.setdefault(sample.character_id, [])
        if group and sample.t <= group[-1].t:
            raise NonMonotonicTime(
                f"{path} line {lineno}: time {sample.t} does not increase "
                f"within character {sample.character_id}")
        group.append(sample)
    return tracks


def write_gaze(samples: Sequence[GazeSample], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(GAZE_HEADER + "\n")
        for s in samples:
            f.write(f"{format_float(s.t)},{format_float(s.x)},"
                    f"{format_float(s.y)}\n")


def write_shots(shots: Sequence[ShotEvent], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(SHOTS_HEADER + "\n")
        for s in shots:
            fields = [format_float(s.t), str(s.character_id), str(s.goodness),
                      *(format_float(v) for v in s.shot_pos),
                      *(format_float(v) for v in s.player_pos),
                      format_float(s.distance)]
            f.write(",".join(fields) + "\n")


def write_tracks(tracks: dict[int, Sequence[CharacterTrackSample]],
                 path) -> None:
    """Write groups in ascending id order, interleaving nothing."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(TRACKS_HEADER + "\n")
        for character_id in sorted(tracks):
            for s in tracks[character_id]:
                f.write(f"{format_float(s.t)},{s.character_id},"
                        f"{format_float(s.distance_to_player)},"
                        f"{format_float(s.speed_rel_player)},"
                        f"{s.goodness}\n")
