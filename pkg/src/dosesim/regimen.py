"""Dose schedules, weekly plans, alertness sampling, and the dosing objective."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .kinetics import Trajectory

MINUTES_PER_DAY = 1440.0
MINUTES_PER_WEEK = 7 * MINUTES_PER_DAY

CUP_MASS_UG = 1.0e5          # 100 mg, one cup of coffee
DEFAULT_WINDOW_START = 720.0  # noon
DEFAULT_WINDOW_LENGTH = 15.0  # minutes

#: heavy weighting on days 1 and 4 (the important-meeting days)
DEFAULT_WEIGHTS = (10.0, 0.2, 0.2, 10.0, 0.2, 0.2, 0.2)

PRESET_NAMES = ("daily-one-cup", "two-cups-two-weeks", "weekday-140")


@dataclass(frozen=True)
class DoseSchedule:
    """Piecewise-constant dose rate: disjoint (start, end, rate) segments in minutes."""

    segments: tuple[tuple[float, float, float], ...]
    horizon: float

    def __post_init__(self) -> None:
        if not self.horizon > 0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")
        prev_end = 0.0
        for start, end, rate in self.segments:
            if not (0.0 <= start < end <= self.horizon):
                raise ValueError(f"segment ({start}, {end}) outside [0, {self.horizon}]")
            if start < prev_end:
                raise ValueError(f"segments overlap or are unsorted at t={start}")
            if not (math.isfinite(rate) and rate >= 0.0):
                raise ValueError(f"segment rate must be finite and >= 0, got {rate}")
            prev_end = end

    @property
    def total_mass(self) -> float:
        """Total administered mass in micrograms."""
        return sum(rate * (end - start) for start, end, rate in self.segments)

    def step_rates(self, dt: float, n_steps: int) -> np.ndarray:
        """Per-step dose rates on the Euler grid; breakpoints must lie on it."""
        rates = np.zeros(n_steps)
        for start, end, rate in self.segments:
            i0 = _grid_index(start, dt)
            i1 = _grid_index(end, dt)
            rates[min(i0, n_steps):min(i1, n_steps)] = rate
        return rates

    def to_dict(self) -> dict:
        return {"horizon_min": self.horizon,
                "segments": [list(seg) for seg in self.segments]}


def _grid_index(t: float, dt: float) -> int:
    i = int(round(t / dt))
    if abs(i * dt - t) > 1e-6 * max(1.0, abs(t)):
        raise ValueError(f"schedule breakpoint t={t} min is not on the dt={dt} grid")
    return i


def schedule_from_dict(d: dict) -> DoseSchedule:
    return DoseSchedule(
        segments=tuple(tuple(float(x) for x in seg) for seg in d["segments"]),
        horizon=float(d["horizon_min"]),
    )


def load_schedule(path: str) -> DoseSchedule:
    with open(path) as fh:
        return schedule_from_dict(json.load(fh))


@dataclass(frozen=True)
class WeeklyPlan:
    """Seven per-day dose strengths (in cups) plus the dosing-window geometry."""

    doses: tuple[float, ...]
    cup_mass_ug: float = CUP_MASS_UG
    window_start_min: float = DEFAULT_WINDOW_START
    window_length_min: float = DEFAULT_WINDOW_LENGTH

    def __post_init__(self) -> None:
        if len(self.doses) != 7:
            raise ValueError(f"expected 7 daily doses, got {len(self.doses)}")
        if any(not (math.isfinite(d) and d >= 0.0) for d in self.doses):
            raise ValueError(f"doses must be finite and >= 0, got {self.doses}")
        if not self.cup_mass_ug > 0:
            raise ValueError("cup_mass_ug must be > 0")
        if not (0.0 <= self.window_start_min
                and self.window_length_min > 0.0
                and self.window_start_min + self.window_length_min <= MINUTES_PER_DAY):
            raise ValueError("dosing window must fit within one day")

    def with_doses(self, doses: Sequence[float]) -> "WeeklyPlan":
        return replace(self, doses=tuple(float(d) for d in doses))

    def to_dict(self) -> dict:
        return {"doses": list(self.doses), "cup_mass_ug": self.cup_mass_ug,
                "window_start_min": self.window_start_min,
                "window_length_min": self.window_length_min}


def plan_from_dict(d: dict) -> WeeklyPlan:
    return WeeklyPlan(
        doses=tuple(float(x) for x in d["doses"]),
        cup_mass_ug=float(d.get("cup_mass_ug", CUP_MASS_UG)),
        window_start_min=float(d.get("window_start_min", DEFAULT_WINDOW_START)),
        window_length_min=float(d.get("window_length_min", DEFAULT_WINDOW_LENGTH)),
    )


def load_plan(path: str) -> WeeklyPlan:
    with open(path) as fh:
        return plan_from_dict(json.load(fh))


def plan_to_schedule(plan: WeeklyPlan, weeks: int, dt: float = 1.0) -> DoseSchedule:
    """Repeat the weekly plan over `weeks` weeks, one dosing window per day.

    Window boundaries are snapped to the dt grid at construction (total mass
    per window is preserved by recomputing the rate over the snapped length).
    """
    if weeks < 1:
        raise ValueError("weeks must be >= 1")
    start = round(plan.window_start_min / dt) * dt
    end = round((plan.window_start_min + plan.window_length_min) / dt) * dt
    if end <= start:
        end = start + dt
    length = end - start
    segments = []
    for w in range(weeks):
        for i, dose in enumerate(plan.doses):
            if dose == 0.0:
                continue
            day0 = (w * 7 + i) * MINUTES_PER_DAY
            segments.append((day0 + start, day0 + end,
                             dose * plan.cup_mass_ug / length))
    return DoseSchedule(segments=tuple(segments), horizon=weeks * MINUTES_PER_WEEK)


def preset_regimen(name: str, dt: float = 1.0) -> DoseSchedule:
    """The three published 4-week caffeine regimens, each totalling 2800 mg."""
    weeks = 4
    if name == "daily-one-cup":
        return plan_to_schedule(WeeklyPlan(doses=(1.0,) * 7), weeks, dt)
    if name == "two-cups-two-weeks":
        first_half = plan_to_schedule(WeeklyPlan(doses=(2.0,) * 7), 2, dt)
        return DoseSchedule(segments=first_half.segments,
                            horizon=weeks * MINUTES_PER_WEEK)
    if name == "weekday-140":
        return plan_to_schedule(
            WeeklyPlan(doses=(1.4, 1.4, 1.4, 1.4, 1.4, 0.0, 0.0)), weeks, dt)
    raise ValueError(f"unknown regimen {name!r}; valid names: {', '.join(PRESET_NAMES)}")


@dataclass(frozen=True)
class ObjectiveSpec:
    """Where and how alertness is scored: 3 pm samples on the evaluation week."""

    weights: tuple[float, ...] = DEFAULT_WEIGHTS
    sample_minute: float = 900.0    # 3 pm
    horizon_weeks: int = 3
    evaluation_week: int | None = None  # None = last week

    def __post_init__(self) -> None:
        if len(self.weights) != 7:
            raise ValueError(f"expected 7 weights, got {len(self.weights)}")
        if any(not (math.isfinite(w) and w >= 0.0) for w in self.weights):
            raise ValueError(f"weights must be finite and >= 0, got {self.weights}")
        if not (0.0 <= self.sample_minute < MINUTES_PER_DAY):
            raise ValueError("sample_minute must lie within the day")
        if self.horizon_weeks < 1:
            raise ValueError("horizon_weeks must be >= 1")
        if self.evaluation_week is not None and not (
                0 <= self.evaluation_week < self.horizon_weeks):
            raise ValueError("evaluation_week must be < horizon_weeks")

    @property
    def eval_week_index(self) -> int:
        return (self.horizon_weeks - 1 if self.evaluation_week is None
                else self.evaluation_week)

    def sample_times(self) -> np.ndarray:
        """Absolute sample instants (min) for days 1..7 of the evaluation week."""
        w = self.eval_week_index
        return np.array([(w * 7 + i) * MINUTES_PER_DAY + self.sample_minute
                         for i in range(7)])

    def to_dict(self) -> dict:
        return {"weights": list(self.weights), "sample_minute": self.sample_minute,
                "horizon_weeks": self.horizon_weeks,
                "evaluation_week": self.eval_week_index}


def objective_spec_from_dict(d: dict) -> ObjectiveSpec:
    return ObjectiveSpec(
        weights=tuple(float(w) for w in d.get("weights", DEFAULT_WEIGHTS)),
        sample_minute=float(d.get("sample_minute", 900.0)),
        horizon_weeks=int(d.get("horizon_weeks", 3)),
        evaluation_week=d.get("evaluation_week"),
    )


def sample_alertness(traj: "Trajectory", spec: ObjectiveSpec) -> np.ndarray:
    """Effect values at the seven sample instants of the evaluation week.

    Reads the recorded grid value at the exact minute; no interpolation. Sample
    instants that are not recorded grid points are rejected.
    """
    wanted = spec.sample_times()
    if wanted[-1] > traj.times[-1] + 1e-9:
        raise ValueError("trajectory does not cover the evaluation week")
    idx = np.searchsorted(traj.times, wanted - 1e-9)
    if np.any(idx >= len(traj.times)) or np.any(
            np.abs(traj.times[idx] - wanted) > 1e-6):
        raise ValueError("sample instant is not a recorded grid point")
    return traj.effects[idx]


def objective(e: Sequence[float], weights: Sequence[float] = DEFAULT_WEIGHTS) -> float:
    """Weighted sum of sqrt(alertness); negative alertness is clamped to zero."""
    e = np.asarray(e, dtype=float)
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be >= 0")
    return float(np.dot(w, np.sqrt(np.clip(e, 0.0, None))))
