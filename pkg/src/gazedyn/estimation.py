"""Closed-form rate estimates from the learn matrix.

All four quantities are simple counts and ratios over the fused shot
records: the fixation and separation rates share the total period of the
records flagged bad, the decay rate counts good-to-bad flips between
adjacent records, and the damping constant is a pair of reference-to-data
extrema ratios that collapses to exactly 2 when self-referenced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .errors import (
    DegenerateData,
    EmptyInput,
    InvalidConfig,
    MalformedRow,
    NoEndingFixations,
    ZeroPeriod,
)
from .fixations import LearnRecord
from .records import format_float


@dataclass(frozen=True)
class OdeParams:
    """The four rates driving the coupled state equations.

    fixation_rate: new fixations per unit time (source term for N).
    separation_rate: fixation endings per unit time (damping term for N).
    decay_rate: good-to-bad transition fraction (rate constant for G).
    damping: damping strength constant (rate constant for V).
    """

    fixation_rate: float
    separation_rate: float
    decay_rate: float
    damping: float

    def __post_init__(self):
        for name in ("fixation_rate", "separation_rate", "decay_rate", "damping"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidConfig(f"{name} must be finite")
        if self.fixation_rate < 0 or self.separation_rate < 0:
            raise InvalidConfig("rates must be non-negative")
        if not 0.0 <= self.decay_rate <= 1.0:
            raise InvalidConfig("decay_rate must lie in [0, 1]")
        if self.damping <= 0:
            raise InvalidConfig("damping must be positive")


def _ending_period(records: Sequence[LearnRecord]) -> float:
    return sum(r.gaze_duration for r in records if r.goodness == 1)


def estimate_mu(records: Sequence[LearnRecord]) -> float:
    """Separation rate: ending fixation count over their total period."""
    ending = [r for r in records if r.goodness == 1]
    if not ending:
        raise NoEndingFixations("no records with goodness = 1")
    return len(ending) / _ending_period(records)


def estimate_lambda(records: Sequence[LearnRecord]) -> float:
    """Fixation rate: all records over the same total fixation period."""
    period = _ending_period(records)
    if period <= 0.0:
        raise ZeroPeriod("total fixation period is zero")
    return len(records) / period


def estimate_m(records: Sequence[LearnRecord]) -> float:
    """Decay rate: good-to-bad transitions between adjacent records.

    Counts index pairs (j, j+1) with goodness going 0 -> 1, in the shot
    order the records already carry, divided by the record count.
    """
    if not records:
        raise EmptyInput("no learn records")
    flips = sum(
        1
        for a, b in zip(records, records[1:])
        if a.goodness == 0 and b.goodness == 1
    )
    return flips / len(records)


def estimate_k(records: Sequence[LearnRecord],
               ref_min_distance: Optional[float] = None,
               ref_max_speed: Optional[float] = None) -> float:
    """Damping constant from reference-to-data extrema ratios.

    Returns ref_min_distance / min(distance) + ref_max_speed / max(speed).
    References default to the data's own extrema, making the result
    exactly 2.
    """
    if not records:
        raise EmptyInput("no learn records")
    min_distance = min(r.distance for r in records)
    max_speed = max(r.speed for r in records)
    if min_distance <= 0.0 or max_speed <= 0.0:
        raise DegenerateData(
            f"min distance {min_distance} and max speed {max_speed} "
            "must both be positive"
        )
    if ref_min_distance is None:
        ref_min_distance = min_distance
    if ref_max_speed is None:
        ref_max_speed = max_speed
    return ref_min_distance / min_distance + ref_max_speed / max_speed


def estimate_params(records: Sequence[LearnRecord]) -> OdeParams:
    """All four estimates from one learn matrix."""
    return OdeParams(
        fixation_rate=estimate_lambda(records),
        separation_rate=estimate_mu(records),
        decay_rate=estimate_m(records),
        damping=estimate_k(records),
    )


PARAMS_HEADER = "lambda,mu,m,k"


def write_params(params: OdeParams, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(PARAMS_HEADER + "\n")
        f.write(",".join(format_float(v) for v in (
            params.fixation_rate, params.separation_rate,
            params.decay_rate, params.damping)) + "\n")


def read_params(path) -> OdeParams:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != PARAMS_HEADER:
        raise MalformedRow(f"{path}: expected header '{PARAMS_HEADER}'")
    if len(lines) < 2:
        raise EmptyInput(f"{path}: no parameter row")
    fields = lines[1].split(",")
    if len(fields) != 4:
        raise MalformedRow(f"{path}: expected 4 fields, got {len(fields)}")
    try:
        lam, mu, m, k = (float(v) for v in fields)
    except ValueError as exc:
        raise MalformedRow(f"{path}: non-numeric parameter: {exc}") from None
    return OdeParams(fixation_rate=lam, separation_rate=mu,
                     decay_rate=m, damping=k)
