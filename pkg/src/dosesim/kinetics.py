"""Model state, differential equations, and fixed-step integration.

The integration loop is compiled with numba when available (it sits inside
the optimizer's inner loop); the compiled kernel performs exactly the
per-step arithmetic of :func:`euler_step`, so identical inputs give
bit-identical trajectories either way.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .params import ModelParams
from .regimen import DoseSchedule

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*a, **kw):
        def wrap(fn):
            return fn
        return wrap if not a else a[0]

CSV_HEADER = ("t_min", "C", "C_mem", "F", "E_b", "E")


@dataclass(frozen=True)
class State:
    """Instantaneous model state."""

    c: float       # blood plasma concentration (ug/mL)
    c_mem: float   # memory concentration (ug/mL)
    f: float       # idealized (tolerance-free) effect
    e_b: float     # baseline effect

    def __post_init__(self) -> None:
        for name in ("c", "c_mem", "f", "e_b"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"state field {name} must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.c, self.c_mem, self.f, self.e_b])


def rest_state(p: ModelParams) -> State:
    """Drug-naive equilibrium: no substance anywhere, baseline at e0."""
    return State(0.0, 0.0, 0.0, p.e0)


def derivatives(p: ModelParams, s: State, dose_rate: float) -> State:
    """Right-hand side of the four coupled ODEs, per minute."""
    if not (math.isfinite(dose_rate) and dose_rate >= 0.0):
        raise ValueError(f"dose_rate must be finite and >= 0, got {dose_rate}")
    return State(
        c=p.k1 * (p.k7 * dose_rate - s.c),
        c_mem=p.k5 * (s.c - s.c_mem),
        f=p.k2 * (p.k6 * s.c - s.f),
        e_b=p.k3 * (p.e0 - p.k4 * s.c_mem - s.e_b),
    )


def effect(p: ModelParams, s: State) -> float:
    """Measured effect: baseline plus the saturation-damped idealized effect."""
    if not p.acute_tolerance_enabled:
        return s.e_b + s.f
    return s.e_b + s.f / (1.0 + s.c_mem / p.c_half)


def effect_array(p: ModelParams, c_mem: np.ndarray, f: np.ndarray,
                 e_b: np.ndarray) -> np.ndarray:
    if not p.acute_tolerance_enabled:
        return e_b + f
    return e_b + f / (1.0 + c_mem / p.c_half)


def stability_limit(p: ModelParams) -> float:
    """Largest dt for which forward Euler does not blow up."""
    r = p.max_rate()
    return math.inf if r == 0.0 else 2.0 / r


def _check_dt(p: ModelParams, dt: float) -> None:
    if not (math.isfinite(dt) and dt >= 0.0):
        raise ValueError(f"dt must be finite and >= 0, got {dt}")
    if dt >= stability_limit(p):
        raise ValueError(
            f"dt={dt} violates the Euler stability bound dt < {stability_limit(p)}")


def euler_step(p: ModelParams, s: State, dose_rate: float, dt: float) -> State:
    """One forward-Euler step: s + dt * derivatives(p, s, dose_rate)."""
    _check_dt(p, dt)
    d = derivatives(p, s, dose_rate)
    return State(s.c + dt * d.c, s.c_mem + dt * d.c_mem,
                 s.f + dt * d.f, s.e_b + dt * d.e_b)


@dataclass(frozen=True)
class Trajectory:
    """Time-sampled states plus the computed effect, stored as columns."""

    times: np.ndarray
    c: np.ndarray
    c_mem: np.ndarray
    f: np.ndarray
    e_b: np.ndarray
    effects: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def state(self, i: int) -> State:
        return State(self.c[i], self.c_mem[i], self.f[i], self.e_b[i])

    @property
    def states(self) -> list[State]:
        return [self.state(i) for i in range(len(self))]

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for i in range(len(self)):
                w.writerow([repr(float(x)) for x in
                            (self.times[i], self.c[i], self.c_mem[i],
                             self.f[i], self.e_b[i], self.effects[i])])


@njit(cache=True)
def _euler_kernel(rates, dt, c0, cm0, f0, eb0, k1, k2, k3, k4, k5, k6, k7, e0):
    n = rates.shape[0]
    c = np.empty(n + 1)
    cm = np.empty(n + 1)
    f = np.empty(n + 1)
    eb = np.empty(n + 1)
    c[0], cm[0], f[0], eb[0] = c0, cm0, f0, eb0
    for i in range(n):
        ci, cmi, fi, ebi = c[i], cm[i], f[i], eb[i]
        c[i + 1] = ci + dt * (k1 * (k7 * rates[i] - ci))
        cm[i + 1] = cmi + dt * (k5 * (ci - cmi))
        f[i + 1] = fi + dt * (k2 * (k6 * ci - fi))
        eb[i + 1] = ebi + dt * (k3 * (e0 - k4 * cmi - ebi))
    return c, cm, f, eb


def _resolve_steps(dt: float, t_end: float) -> int:
    n = int(round(t_end / dt))
    if n < 1 or abs(n * dt - t_end) > 1e-6 * max(1.0, t_end):
        raise ValueError(f"t_end={t_end} is not a positive multiple of dt={dt}")
    return n


def _record_indices(n_steps: int, stride: int) -> np.ndarray:
    if stride < 1:
        raise ValueError("record_stride must be >= 1")
    idx = np.arange(0, n_steps + 1, stride)
    if idx[-1] != n_steps:
        idx = np.append(idx, n_steps)
    return idx


def integrate(p: ModelParams, s0: State, schedule: DoseSchedule, dt: float,
              t_end: float | None = None, record_stride: int = 1) -> Trajectory:
    """Forward-Euler integration with the dose rate constant within each step.

    Records every ``record_stride``-th step, always including t = 0 and
    t = t_end. Pure and deterministic.
    """
    if t_end is None:
        t_end = schedule.horizon
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    _check_dt(p, dt)
    if t_end > schedule.horizon + 1e-9:
        raise ValueError(f"t_end={t_end} exceeds schedule horizon {schedule.horizon}")
    n_steps = _resolve_steps(dt, t_end)
    rates = schedule.step_rates(dt, n_steps)
    if np.any(rates < 0) or not np.all(np.isfinite(rates)):
        raise ValueError("dose rates must be finite and >= 0")

    c, c_mem, f, e_b = _euler_kernel(
        rates, dt, s0.c, s0.c_mem, s0.f, s0.e_b,
        p.k1, p.k2, p.k3, p.k4, p.k5, p.k6, p.k7, p.e0)

    idx = _record_indices(n_steps, record_stride)
    c, c_mem, f, e_b = c[idx], c_mem[idx], f[idx], e_b[idx]
    return Trajectory(times=idx * dt, c=c, c_mem=c_mem, f=f, e_b=e_b,
                      effects=effect_array(p, c_mem, f, e_b))


def integrate_reference(p: ModelParams, s0: State, schedule: DoseSchedule,
                        dt: float, t_end: float | None = None,
                        record_stride: int = 1) -> Trajectory:
    """Classical 4th-order Runge-Kutta reference, for convergence testing only.

    Same fixed-step grid and piecewise-constant dose handling as
    :func:`integrate`.
    """
    if t_end is None:
        t_end = schedule.horizon
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    _check_dt(p, dt)
    if t_end > schedule.horizon + 1e-9:
        raise ValueError(f"t_end={t_end} exceeds schedule horizon {schedule.horizon}")
    n_steps = _resolve_steps(dt, t_end)
    rates = schedule.step_rates(dt, n_steps)

    k1, k2, k3, k4, k5, k6, k7, e0 = (p.k1, p.k2, p.k3, p.k4, p.k5, p.k6,
                                      p.k7, p.e0)

    def rhs(y, d):
        c, cm, f, eb = y
        return (k1 * (k7 * d - c), k5 * (c - cm), k2 * (k6 * c - f),
                k3 * (e0 - k4 * cm - eb))

    out = np.empty((n_steps + 1, 4))
    y = [s0.c, s0.c_mem, s0.f, s0.e_b]
    out[0] = y
    for n in range(n_steps):
        d = rates[n]
        s1 = rhs(y, d)
        s2 = rhs([y[i] + 0.5 * dt * s1[i] for i in range(4)], d)
        s3 = rhs([y[i] + 0.5 * dt * s2[i] for i in range(4)], d)
        s4 = rhs([y[i] + dt * s3[i] for i in range(4)], d)
        y = [y[i] + (dt / 6.0) * (s1[i] + 2 * s2[i] + 2 * s3[i] + s4[i])
             for i in range(4)]
        out[n + 1] = y

    idx = _record_indices(n_steps, record_stride)
    c, c_mem, f, e_b = (out[idx, 0], out[idx, 1], out[idx, 2], out[idx, 3])
    return Trajectory(times=idx * dt, c=c, c_mem=c_mem, f=f, e_b=e_b,
                      effects=effect_array(p, c_mem, f, e_b))
