"""Scoring a parameter set against observed dose/response time series.

Supports the hand-fitting workflow: load observations, evaluate a
range-normalized RMSE loss, and sweep one parameter at a time.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

from .kinetics import Trajectory, integrate, rest_state
from .params import ModelParams
from .regimen import DoseSchedule

CHANNELS = ("concentration", "effect")


@dataclass(frozen=True)
class ObservedSeries:
    """One measured channel over time (concentration in ug/mL or effect units)."""

    channel: str
    times: np.ndarray
    values: np.ndarray
    units: str = ""

    def __post_init__(self) -> None:
        if self.channel not in CHANNELS:
            raise ValueError(f"channel must be one of {CHANNELS}, got {self.channel!r}")
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if len(t) != len(v) or len(t) == 0:
            raise ValueError("times and values must be equal-length and non-empty")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("times and values must be finite")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)


def load_series(path: str) -> ObservedSeries:
    """Parse an observation CSV: a `# channel: <name>` line, a `t_min,value`
    header, then rows. Malformed lines are reported with their line number."""
    channel = None
    times, values = [], []
    header_seen = False
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if body.lower().startswith("channel:"):
                    channel = body.split(":", 1)[1].strip()
                continue
            if not header_seen:
                cols = [c.strip() for c in line.split(",")]
                if cols != ["t_min", "value"]:
                    raise ValueError(
                        f"{path}:{lineno}: expected header 't_min,value', got {line!r}")
                header_seen = True
                continue
            cells = line.split(",")
            if len(cells) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(cells)}")
            try:
                t, v = float(cells[0]), float(cells[1])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric cell in {line!r}") from None
            if times and t <= times[-1]:
                raise ValueError(f"{path}:{lineno}: time {t} is not strictly increasing")
            times.append(t)
            values.append(v)
    if channel is None:
        raise ValueError(f"{path}: missing '# channel: <concentration|effect>' line")
    if not times:
        raise ValueError(f"{path}: no data rows")
    return ObservedSeries(channel=channel, times=np.array(times),
                          values=np.array(values))


def _channel_values(traj: Trajectory, channel: str) -> np.ndarray:
    return traj.c if channel == "concentration" else traj.effects


def series_loss(traj: Trajectory, obs: ObservedSeries) -> float:
    """Range-normalized RMSE of one series against a simulated trajectory."""
    if obs.times[0] < traj.times[0] - 1e-9 or obs.times[-1] > traj.times[-1] + 1e-9:
        raise ValueError("observation times fall outside the simulated horizon")
    sim = np.interp(obs.times, traj.times, _channel_values(traj, obs.channel))
    rmse = float(np.sqrt(np.mean((sim - obs.values) ** 2)))
    vrange = float(obs.values.max() - obs.values.min())
    return rmse / (vrange if vrange > 0 else 1.0)


def loss(p: ModelParams, schedule: DoseSchedule,
         observed: Sequence[ObservedSeries], dt: float) -> float:
    """Total loss: sum of per-series range-normalized RMSEs.

    The simulation is interpolated at the observation times, never the other
    way around.
    """
    traj = integrate(p, rest_state(p), schedule, dt)
    return sum(series_loss(traj, obs) for obs in observed)


_PARAM_FIELDS = tuple(f.name for f in fields(ModelParams))


def sweep(p_base: ModelParams, field: str, values: Sequence[float],
          schedule: DoseSchedule, observed: Sequence[ObservedSeries],
          dt: float) -> list[tuple[float, float]]:
    """Loss at each candidate value of one parameter, base otherwise unchanged."""
    if field not in _PARAM_FIELDS:
        raise ValueError(f"unknown parameter field {field!r}; "
                         f"valid fields: {', '.join(_PARAM_FIELDS)}")
    return [(float(v), loss(p_base.replace(**{field: float(v)}),
                            schedule, observed, dt))
            for v in values]
