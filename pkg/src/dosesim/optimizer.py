"""Constrained maximization of the weekly dosing objective.

Projected gradient ascent with central finite-difference gradients and
backtracking line search, multi-started from seeded uniform-random plans.
Both feasible sets (per-day box, weekly capped simplex) have cheap exact
Euclidean projections.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .kinetics import _euler_kernel, integrate, rest_state
from .params import ModelParams
from .regimen import (MINUTES_PER_WEEK, ObjectiveSpec, WeeklyPlan, objective,
                      plan_to_schedule, sample_alertness)

DAILY_MAX = "daily_max"
WEEKLY_MAX = "weekly_max"

FD_STEP = 1e-4           # finite-difference step, in cups
GRAD_TOL = 1e-6          # projected-gradient norm tolerance
F_TOL = 1e-8             # per-iteration objective-change tolerance
MAX_ITERS = 10_000
INIT_DOSE_MAX = 1.0      # random starts are drawn from [0, 1]^7


@dataclass(frozen=True)
class Constraint:
    """Per-day cap or weekly total cap, in cups."""

    kind: str
    cap: float

    def __post_init__(self) -> None:
        if self.kind not in (DAILY_MAX, WEEKLY_MAX):
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if not (math.isfinite(self.cap) and self.cap > 0):
            raise ValueError(f"cap must be finite and > 0, got {self.cap}")


@dataclass(frozen=True)
class OptResult:
    doses: tuple[float, ...]
    f_value: float
    evaluations: int
    starts: int
    converged: bool
    seed: int
    history: tuple[dict, ...] = ()

    def to_dict(self) -> dict:
        return {"doses": list(self.doses), "f_value": self.f_value,
                "evaluations": self.evaluations, "starts": self.starts,
                "converged": self.converged, "seed": self.seed,
                "history": [dict(h) for h in self.history]}


def _project_capped_simplex(d: np.ndarray, cap: float) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum(x) <= cap} (sort/threshold)."""
    y = np.maximum(d, 0.0)
    # slack makes projection exactly idempotent despite roundoff in theta
    if y.sum() <= cap + 1e-9 * max(1.0, cap):
        return y
    u = np.sort(d)[::-1]
    css = np.cumsum(u) - cap
    k = np.arange(1, len(d) + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(d - theta, 0.0)


def project(d, constraint: Constraint) -> np.ndarray:
    """Euclidean projection of a candidate plan onto the feasible set."""
    d = np.asarray(d, dtype=float)
    if constraint.kind == DAILY_MAX:
        return np.clip(d, 0.0, constraint.cap)
    return _project_capped_simplex(d, constraint.cap)


def evaluate_plan(p: ModelParams, doses, spec: ObjectiveSpec,
                  template: WeeklyPlan | None = None, dt: float = 1.0) -> float:
    """Objective value of a weekly plan: simulate, sample, score."""
    doses = np.asarray(doses, dtype=float)
    if np.any(doses < 0) or not np.all(np.isfinite(doses)):
        raise ValueError("doses must be finite and >= 0")
    if template is None:
        template = WeeklyPlan(doses=(0.0,) * 7)
    plan = template.with_doses(doses)
    schedule = plan_to_schedule(plan, spec.horizon_weeks, dt)
    traj = integrate(p, rest_state(p), schedule, dt)
    return objective(sample_alertness(traj, spec), spec.weights)


def _make_fast_evaluator(p: ModelParams, template: WeeklyPlan,
                         spec: ObjectiveSpec, dt: float):
    """Closure computing evaluate_plan without per-call schedule rebuilding.

    Same Euler kernel, same snapped dose windows, same sampled effects as
    :func:`evaluate_plan`; only the plumbing is hoisted out of the loop.
    """
    n_steps = int(round(spec.horizon_weeks * MINUTES_PER_WEEK / dt))
    # one reference schedule fixes the grid-snapped window geometry
    ref = plan_to_schedule(template.with_doses((1.0,) * 7),
                           spec.horizon_weeks, dt)
    seg0 = ref.segments[0]
    length = seg0[1] - seg0[0]
    cup_mass = template.cup_mass_ug
    day_slices: list[list[slice]] = [[] for _ in range(7)]
    for w in range(spec.horizon_weeks):
        for i in range(7):
            start = (w * 7 + i) * 1440.0 + (seg0[0] % 1440.0)
            i0 = int(round(start / dt))
            i1 = int(round((start + length) / dt))
            day_slices[i].append(slice(i0, min(i1, n_steps)))
    sample_idx = np.asarray(np.round(spec.sample_times() / dt), dtype=np.intp)
    weights = np.asarray(spec.weights)
    s0 = rest_state(p)

    def fast_eval(doses: np.ndarray) -> float:
        rates = np.zeros(n_steps)
        for i in range(7):
            if doses[i] != 0.0:
                r = doses[i] * cup_mass / length  # same arithmetic as plan_to_schedule
                for sl in day_slices[i]:
                    rates[sl] = r
        _, cm, f, eb = _euler_kernel(
            rates, dt, s0.c, s0.c_mem, s0.f, s0.e_b,
            p.k1, p.k2, p.k3, p.k4, p.k5, p.k6, p.k7, p.e0)
        cm, f, eb = cm[sample_idx], f[sample_idx], eb[sample_idx]
        e = eb + f if not p.acute_tolerance_enabled else eb + f / (1.0 + cm / p.c_half)
        return float(np.dot(weights, np.sqrt(np.clip(e, 0.0, None))))

    return fast_eval


def _fd_gradient(func: Callable[[np.ndarray], float], d: np.ndarray,
                 f0: float, h: float) -> tuple[np.ndarray, int]:
    """Central differences, falling back to forward near the d >= 0 boundary."""
    g = np.empty_like(d)
    evals = 0
    for i in range(len(d)):
        dp = d.copy()
        dp[i] += h
        fp = func(dp)
        evals += 1
        if d[i] >= h:
            dm = d.copy()
            dm[i] -= h
            g[i] = (fp - func(dm)) / (2.0 * h)
            evals += 1
        else:
            g[i] = (fp - f0) / h
    return g, evals


@dataclass
class _AscentOutcome:
    doses: np.ndarray
    f: float
    iterations: int
    termination: str
    converged: bool
    f_trace: list


def ascend(func, d0, constraint: Constraint, max_iters: int = MAX_ITERS,
           trace: bool = False) -> _AscentOutcome:
    """Single projected-gradient ascent run from d0 to a stationary point.

    Backtracking (Armijo) line search along the projection arc; the step size
    grows after accepted steps, so the accepted objective sequence is
    nondecreasing by construction.
    """
    d = project(np.asarray(d0, dtype=float), constraint)
    f = func(d)
    f_trace = [f] if trace else []
    alpha = 1.0
    converged = False
    termination = "max_iters"
    iters = 0
    for iters in range(1, max_iters + 1):
        g, _ = _fd_gradient(func, d, f, FD_STEP)
        pg = project(d + g, constraint) - d
        if np.linalg.norm(pg) < GRAD_TOL:
            converged = True
            termination = "projected_gradient"
            break
        delta = 0.0
        accepted = False
        for _ in range(60):
            cand = project(d + alpha * g, constraint)
            step = cand - d
            if np.linalg.norm(step) == 0.0:
                break
            fc = func(cand)
            if fc >= f + 1e-4 * float(np.dot(g, step)):
                delta = fc - f
                d, f = cand, fc
                alpha = min(alpha * 2.0, 64.0)
                accepted = True
                break
            alpha *= 0.5
        if trace:
            f_trace.append(f)
        if not accepted:
            converged = True
            termination = "no_ascent_step"
            break
        if delta < F_TOL:
            converged = True
            termination = "f_change"
            break
    return _AscentOutcome(doses=d, f=f, iterations=iters,
                          termination=termination, converged=converged,
                          f_trace=f_trace)


def optimize(p: ModelParams, plan_template: WeeklyPlan, spec: ObjectiveSpec,
             constraint: Constraint, seed: int = 0, starts: int = 8,
             dt: float = 1.0, max_iters: int = MAX_ITERS) -> OptResult:
    """Maximize the objective over the seven daily doses.

    Deterministic in (seed, starts): starting points come from a seeded
    generator, starts run sequentially, and ties between equal best values
    go to the lowest start index.
    """
    if spec.horizon_weeks < spec.eval_week_index + 1:
        raise ValueError("horizon must cover the evaluation week")
    if starts < 1:
        raise ValueError("starts must be >= 1")
    rng = np.random.default_rng(seed)
    inits = rng.uniform(0.0, INIT_DOSE_MAX, size=(starts, 7))

    eval_count = 0
    fast_eval = _make_fast_evaluator(p, plan_template, spec, dt)

    def func(d: np.ndarray) -> float:
        nonlocal eval_count
        eval_count += 1
        return fast_eval(d)

    best: _AscentOutcome | None = None
    history = []
    for s in range(starts):
        out = ascend(func, inits[s], constraint, max_iters)
        history.append({"start": s, "f": out.f, "iterations": out.iterations,
                        "termination": out.termination})
        if best is None or out.f > best.f:
            best = out

    assert best is not None
    return OptResult(doses=tuple(float(x) for x in best.doses), f_value=best.f,
                     evaluations=eval_count, starts=starts,
                     converged=best.converged, seed=seed,
                     history=tuple(history))
