"""Coupled four-state rate equations and a fixed-step RK4 integrator.

State (n, v, d, g) = fixation level, relative speed, distance, goodness
level. The governing equations, with rates (lam, mu, m, k):

    dn/dt = lam * g - mu * n
    dv/dt = k * v / (v - 1)
    dd/dt = v - n
    dg/dt = m * g / (g - 1)

The v and g laws are stated self-referentially in their original form
(dX/dt = X dX/dt - cX); solving that algebraically for dX/dt gives the
explicit right-hand sides above, which are singular at X = 1. Integration
refuses to evaluate within EPS_SINGULAR of the singular value instead of
stepping across it.

Both singular laws separate: v - ln v - k t and g - ln g - m t are
conserved along exact solutions, which is what the residual checks below
measure on a numerical trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyInput, MalformedRow, NonFinite, SingularState
from .estimation import OdeParams
from .records import format_float

EPS_SINGULAR = 1e-6


@dataclass(frozen=True)
class OdeState:
    """One point of the coupled system.

    n: fixation level (real-valued count), v: speed (m/s),
    d: distance (m), g: goodness level (real-valued).
    """

    n: float
    v: float
    d: float
    g: float

    def as_array(self) -> np.ndarray:
        return np.array([self.n, self.v, self.d, self.g], dtype=float)


@dataclass(frozen=True)
class InitialConditions:
    n0: float = 70.0
    v0: float = 48.0
    d0: float = 47.0
    g0: float = 2.0

    def __post_init__(self):
        for name in ("n0", "v0", "d0", "g0"):
            if not math.isfinite(getattr(self, name)):
                raise NonFinite(f"initial condition {name} must be finite")
        if abs(self.v0 - 1.0) <= EPS_SINGULAR:
            raise SingularState("v0 sits on the singular value 1")
        if abs(self.g0 - 1.0) <= EPS_SINGULAR:
            raise SingularState("g0 sits on the singular value 1")


@dataclass(frozen=True)
class Trajectory:
    """States sampled on a uniform time grid.

    times has shape (points,), states (points, 4) with columns n, v, d, g.
    """

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        if self.times.ndim != 1 or self.states.shape != (len(self.times), 4):
            raise MalformedRow("trajectory arrays have inconsistent shapes")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def n(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def v(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def d(self) -> np.ndarray:
        return self.states[:, 2]

    @property
    def g(self) -> np.ndarray:
        return self.states[:, 3]

    def state_at(self, i: int) -> OdeState:
        n, v, d, g = self.states[i]
        return OdeState(n=float(n), v=float(v), d=float(d), g=float(g))


def _rhs_vec(y: np.ndarray, lam: float, mu: float, m: float,
             k: float) -> np.ndarray:
    n, v, d, g = y
    if abs(v - 1.0) <= EPS_SINGULAR:
        raise SingularState(f"speed state v = {v!r} is within "
                            f"{EPS_SINGULAR} of the singular value 1")
    if abs(g - 1.0) <= EPS_SINGULAR:
        raise SingularState(f"goodness state g = {g!r} is within "
                            f"{EPS_SINGULAR} of the singular value 1")
    return np.array([
        lam * g - mu * n,
        k * v / (v - 1.0),
        v - n,
        m * g / (g - 1.0),
    ])


def rhs(state: OdeState, params: OdeParams) -> tuple[float, float, float, float]:
    """Time derivative (dn, dv, dd, dg) at one state."""
    dy = _rhs_vec(state.as_array(), params.fixation_rate,
                  params.separation_rate, params.decay_rate, params.damping)
    return float(dy[0]), float(dy[1]), float(dy[2]), float(dy[3])


def integrate_rk4(ic: InitialConditions, params: OdeParams,
                  t0: float = 0.0, t1: float = 10.0,
                  n_steps: int = 2025) -> Trajectory:
    """Classical fixed-step 4th-order Runge-Kutta over [t0, t1].

    Produces n_steps + 1 grid points. Fully deterministic: identical
    inputs give bit-identical trajectories.
    """
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    lam, mu = params.fixation_rate, params.separation_rate
    m, k = params.decay_rate, params.damping
    h = (t1 - t0) / n_steps
    times = np.linspace(t0, t1, n_steps + 1)
    states = np.empty((n_steps + 1, 4))
    y = np.array([ic.n0, ic.v0, ic.d0, ic.g0], dtype=float)
    states[0] = y
    for i in range(n_steps):
        k1 = _rhs_vec(y, lam, mu, m, k)
        k2 = _rhs_vec(y + 0.5 * h * k1, lam, mu, m, k)
        k3 = _rhs_vec(y + 0.5 * h * k2, lam, mu, m, k)
        k4 = _rhs_vec(y + h * k3, lam, mu, m, k)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NonFinite(f"state left the finite range at t = {times[i + 1]}")
        states[i + 1] = y
    return Trajectory(times=times, states=states)


def _separable_residual(column: np.ndarray, x0: float, rate: float,
                        times: np.ndarray) -> float:
    invariant = column - np.log(column)
    expected = x0 - math.log(x0) + rate * (times - times[0])
    return float(np.max(np.abs(invariant - expected)))


def analytic_residual_v(traj: Trajectory, params: OdeParams,
                        ic: InitialConditions) -> float:
    """Max deviation of v - ln v from its conserved value along the grid."""
    return _separable_residual(traj.v, ic.v0, params.damping, traj.times)


def analytic_residual_g(traj: Trajectory, params: OdeParams,
                        ic: InitialConditions) -> float:
    """Max deviation of g - ln g from its conserved value along the grid."""
    return _separable_residual(traj.g, ic.g0, params.decay_rate, traj.times)


TRAJECTORY_HEADER = "t,n,v,d,g"


def write_trajectory(traj: Trajectory, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(TRAJECTORY_HEADER + "\n")
        for t, row in zip(traj.times, traj.states):
            f.write(format_float(t) + ","
                    + ",".join(format_float(v) for v in row) + "\n")


def read_trajectory(path) -> Trajectory:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != TRAJECTORY_HEADER:
        raise MalformedRow(f"{path}: expected header '{TRAJECTORY_HEADER}'")
    if len(lines) < 2:
        raise EmptyInput(f"{path}: no trajectory rows")
    times = np.empty(len(lines) - 1)
    states = np.empty((len(lines) - 1, 4))
    for i, line in enumerate(lines[1:]):
        fields = line.split(",")
        if len(fields) != 5:
            raise MalformedRow(f"{path} line {i + 2}: expected 5 fields")
        try:
            values = [float(v) for v in fields]
        except ValueError as exc:
            raise MalformedRow(f"{path} line {i + 2}: {exc}") from None
        times[i] = values[0]
        states[i] = values[1:]
    return Trajectory(times=times, states=states)
