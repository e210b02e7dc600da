"""End-to-end acceptance gate.

One test per numbered criterion, each printing a single PASS/FAIL line
(run with ``pytest tests/test_acceptance.py -v -s`` to see them live).
Every expected number is either a closed-form value computed by an
independent oracle in this file or a pinned reference constant.
"""
import json
import math
import time

import numpy as np
import pytest

from conftest import random_schedule
from dosesim.analytic import (constant_dose_equilibrium, estimate_k4,
                              impulse_concentration)
from dosesim.kinetics import (DoseSchedule, integrate, integrate_reference,
                              rest_state)
from dosesim.optimizer import (Constraint, _make_fast_evaluator, ascend,
                               evaluate_plan, optimize, project)
from dosesim.params import builtin_params
from dosesim.regimen import (ObjectiveSpec, WeeklyPlan, plan_to_schedule,
                             preset_regimen, sample_alertness)

CAFFEINE = builtin_params("caffeine")
NICOTINE = builtin_params("nicotine")
CUP_UG = 1e5  # one cup of coffee, in ug of caffeine

# Reference weekly schedules (cups/day) and the constraints they were
# optimized under.  Pinned externally; their objective values are
# re-derived locally by evaluate_plan rather than hardcoded.
REFERENCE_ROWS = {
    "no-tolerance, daily max": (
        dict(k4=0.0), Constraint("daily_max", 2.0),
        (2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0)),
    "with-tolerance, daily max": (
        {}, Constraint("daily_max", 2.0),
        (2.0, 0.2179, 0.3921, 2.0, 0.2456, 0.3275, 0.3568)),
    "no-tolerance, weekly max": (
        dict(k4=0.0), Constraint("weekly_max", 10.0),
        (4.9997, 0.0, 0.0, 4.9990, 0.0, 0.0, 0.0013)),
    "with-tolerance, weekly max": (
        {}, Constraint("weekly_max", 10.0),
        (4.9180, 0.0, 0.0, 5.0820, 0.0, 0.0, 0.0)),
}


def report(num, ok, detail, t0, budget_s):
    elapsed = time.perf_counter() - t0
    line = (f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail} "
            f"[{elapsed:.1f}s / {budget_s:.0f}s budget]")
    print(line)
    assert ok, line
    assert elapsed < budget_s, f"criterion {num}: over runtime budget: {line}"


@pytest.fixture(scope="module", autouse=True)
def _warm_kernel():
    # one-time JIT load/compile of the integration kernel, excluded from
    # the per-criterion runtime budgets
    integrate(CAFFEINE, rest_state(CAFFEINE),
              DoseSchedule(segments=(), horizon=1.0), 1.0)


def day_peaks(traj, days):
    t = traj.times
    return np.array([traj.effects[(t >= d * 1440.0) & (t < (d + 1) * 1440.0)].max()
                     for d in days])


def test_criterion_1_impulse_oracle():
    t0 = time.perf_counter()
    dt = 0.1
    sched = DoseSchedule(segments=((0.0, dt, CUP_UG / dt),), horizon=1440.0)
    traj = integrate(CAFFEINE, rest_state(CAFFEINE), sched, dt)
    on = traj.times >= dt - 1e-12
    pred = impulse_concentration(CAFFEINE, CUP_UG, traj.times[on])
    rel = np.abs(traj.c[on] - pred) / pred
    report(1, rel.max() < 0.01,
           f"one-step 100 mg dose tracks the exponential oracle over 24 h "
           f"(max rel err {rel.max():.1e})", t0, 1.0)


def test_criterion_2_peak_concentration():
    t0 = time.perf_counter()
    sched = DoseSchedule(segments=((0.0, 15.0, CUP_UG / 15.0),), horizon=120.0)
    traj = integrate(CAFFEINE, rest_state(CAFFEINE), sched, 0.1)
    peak = traj.c.max()
    report(2, abs(peak - 2.463) <= 0.025,
           f"100 mg over 15 min peaks at C = {peak:.4f} ug/mL "
           f"(expected 2.463 +- 0.025)", t0, 1.0)


def test_criterion_3_equilibrium_oracle():
    t0 = time.perf_counter()
    rate = CUP_UG / 1440.0
    eq = constant_dose_equilibrium(CAFFEINE, rate)
    sched = DoseSchedule(segments=((0.0, 20 * 1440.0, rate),),
                         horizon=20 * 1440.0)
    traj = integrate(CAFFEINE, rest_state(CAFFEINE), sched, 1.0)
    rel_c = abs(traj.c[-1] - eq.c_eq) / abs(eq.c_eq)
    rel_eb = abs(traj.e_b[-1] - eq.e_withdrawal) / abs(eq.e_withdrawal)
    report(3, rel_c < 1e-3 and rel_eb < 5e-3,
           f"20-day constant dose reaches C = {traj.c[-1]:.5f} "
           f"(oracle {eq.c_eq:.5f}, rel {rel_c:.1e}) and E_b = "
           f"{traj.e_b[-1]:.5f} (oracle {eq.e_withdrawal:.5f}, rel "
           f"{rel_eb:.1e})", t0, 5.0)


def test_criterion_4_k4_estimator():
    t0 = time.perf_counter()
    v = estimate_k4(k6=0.4, e0=0.0, e_drug=2.0, e_drug_tol=0.5)
    # 0.3 has no exact binary representation; every evaluation order of the
    # closed form lands one ulp away, so "exact" here means to the last ulp
    report(4, abs(v - 0.3) <= 1e-15,
           f"estimator returns {v!r} for (k6=0.4, e0=0, e_drug=2, "
           f"e_drug_tol=0.5), within one ulp of 0.3", t0, 1.0)


def test_criterion_5_qualitative_regimens():
    t0 = time.perf_counter()
    daily = integrate(CAFFEINE, rest_state(CAFFEINE),
                      preset_regimen("daily-one-cup"), 1.0)
    # (a) residual concentration lifts the day-2 peak slightly above day 1;
    # from day 2 on the peaks decay strictly as tolerance builds
    peaks = day_peaks(daily, range(10))
    a_decay = bool(np.all(np.diff(peaks[1:]) < 0))
    a_eb = -0.30 <= daily.e_b[-1] <= -0.20
    two = integrate(CAFFEINE, rest_state(CAFFEINE),
                    preset_regimen("two-cups-two-weeks"), 1.0)
    post = two.effects[two.times >= 14 * 1440.0]
    b_neg = post.min() < 0.0
    eb_15 = two.e_b[two.times == 14 * 1440.0][0]
    b_recover = two.e_b[-1] > eb_15
    weekday = integrate(CAFFEINE, rest_state(CAFFEINE),
                        preset_regimen("weekday-140"), 1.0)
    # (c) the weekend break pays off on Monday of week 2: higher peak than
    # the same day under constant daily dosing
    mon2_weekday = day_peaks(weekday, [7])[0]
    mon2_daily = day_peaks(daily, [7])[0]
    c_ok = mon2_weekday > mon2_daily
    ok = a_decay and a_eb and b_neg and b_recover and c_ok
    report(5, ok,
           f"daily cup: peaks decay after day 2 ({a_decay}), final E_b = "
           f"{daily.e_b[-1]:.3f}; two-cup stop: withdrawal min "
           f"{post.min():.3f} then E_b recovers {eb_15:.3f} -> "
           f"{two.e_b[-1]:.3f}; weekday plan Monday-wk2 peak "
           f"{mon2_weekday:.3f} > daily plan's {mon2_daily:.3f}", t0, 10.0)


def test_criterion_6_reference_schedules():
    t0 = time.perf_counter()
    spec = ObjectiveSpec()
    tpl = WeeklyPlan(doses=(0.0,) * 7)
    failures = []
    for name, (overrides, con, ref_doses) in REFERENCE_ROWS.items():
        p = CAFFEINE.replace(**overrides)
        res = optimize(p, tpl, spec, con, seed=42, starts=8, dt=1.0)
        d = np.array(res.doses)
        f_ref = evaluate_plan(p, ref_doses, spec)
        dose_gap = np.abs(d - np.array(ref_doses)).max()
        if dose_gap <= 0.05:
            matched = "doses"
        elif res.f_value >= f_ref - 1e-3:
            # different basin: check the reference row is itself a local
            # optimum under our machinery (polish leaves it in place)
            fast = _make_fast_evaluator(p, tpl, spec, 1.0)
            pol = ascend(fast, np.array(ref_doses), con)
            stays = (np.abs(pol.doses - np.array(ref_doses)).max() <= 0.05
                     and abs(pol.f - f_ref) <= 1e-3)
            matched = "f" if stays else ""
        else:
            matched = ""
        if not matched:
            failures.append(f"{name}: doses {d.round(4).tolist()} "
                            f"f {res.f_value:.6f} vs ref f {f_ref:.6f}")
        if con.kind == "weekly_max":
            if abs(d.sum() - 10.0) > 1e-3:
                failures.append(f"{name}: sum {d.sum():.6f} != 10")
            if d[[1, 2, 4, 5]].max() >= 1e-3:
                failures.append(f"{name}: midweek doses not ~0: "
                                f"{d.round(4).tolist()}")
    report(6, not failures,
           "all four reference schedules reproduced (dose match, or equal-"
           "or-better objective with the reference row verified as a local "
           f"optimum); failures: {failures or 'none'}", t0, 600.0)


def _half_cup_grid(cap_units=20, days=7):
    """All dose vectors on the 0.5-cup grid with total <= cap_units/2 cups."""
    pts = np.zeros((1, 0), dtype=np.int64)
    sums = np.zeros(1, dtype=np.int64)
    for _ in range(days):
        counts = cap_units + 1 - sums
        offsets = np.cumsum(counts) - counts
        col = np.arange(counts.sum()) - np.repeat(offsets, counts)
        pts = np.hstack([np.repeat(pts, counts, axis=0), col[:, None]])
        sums = np.repeat(sums, counts) + col
    return pts * 0.5


def test_criterion_7_grid_oracle():
    t0 = time.perf_counter()
    p = CAFFEINE.replace(k4=0.0)
    spec = ObjectiveSpec()
    tpl = WeeklyPlan(doses=(0.0,) * 7)
    dt = 4.0
    # without the slow-tolerance and saturation mechanisms every state
    # variable is linear in the doses, so sampled alertness superposes:
    # a 7x7 unit-dose response matrix evaluates the whole grid exactly
    A = np.empty((7, 7))
    for i in range(7):
        doses = np.zeros(7)
        doses[i] = 1.0
        sched = plan_to_schedule(tpl.with_doses(doses), spec.horizon_weeks, dt)
        A[:, i] = sample_alertness(
            integrate(p, rest_state(p), sched, dt), spec)
    grid = _half_cup_grid()
    e = grid @ A.T
    w = np.asarray(spec.weights)
    f_grid = np.sqrt(np.clip(e, 0.0, None)) @ w
    # spot-check the superposition shortcut against full simulations
    rng = np.random.default_rng(0)
    for k in rng.choice(len(grid), size=40, replace=False):
        full = evaluate_plan(p, grid[k], spec, tpl, dt)
        assert full == pytest.approx(f_grid[k], rel=1e-9)
    best_k = int(np.argmax(f_grid))
    res = optimize(p, tpl, spec, Constraint("weekly_max", 10.0),
                   seed=42, starts=8, dt=dt)
    ok = res.f_value >= f_grid[best_k] - 1e-9
    report(7, ok,
           f"optimizer f = {res.f_value:.6f} >= best of {len(grid)} "
           f"half-cup grid points f = {f_grid[best_k]:.6f} at "
           f"{grid[best_k].tolist()}", t0, 900.0)


def test_criterion_8_nicotine_properties():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    floor = math.inf
    for _ in range(50):
        sched = random_schedule(rng, 1440.0, dt=1.0, max_rate=2000.0)
        traj = integrate(NICOTINE, rest_state(NICOTINE), sched, 1.0)
        floor = min(floor, traj.effects.min())
    no_rebound = floor >= 60.0 - 1e-9
    pulses = DoseSchedule(segments=((0.0, 2.0, 500.0), (30.0, 32.0, 500.0)),
                          horizon=300.0)
    traj = integrate(NICOTINE, rest_state(NICOTINE), pulses, 0.5)
    t = traj.times
    first = traj.effects[(t >= 0.0) & (t < 30.0)].max() - 60.0
    pre2 = traj.effects[t == 30.0][0]
    second = traj.effects[t >= 30.0].max() - pre2
    acute = 0.0 < second < first
    report(8, no_rebound and acute,
           f"no rebound below baseline over 50 random schedules (min E = "
           f"{floor:.4f}); repeated dose increment shrinks "
           f"({second:.3f} < {first:.3f})", t0, 30.0)


def test_criterion_9_property_suites():
    t0 = time.perf_counter()
    details = []

    # superposition of split schedules when both tolerance mechanisms are off
    p = CAFFEINE.replace(k4=0.0)
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(10):
        sched = random_schedule(rng, 1440.0, dt=1.0, max_rate=1e4)
        segs = sched.segments
        part_a = DoseSchedule(segments=segs[0::2], horizon=1440.0)
        part_b = DoseSchedule(segments=segs[1::2], horizon=1440.0)
        ea = integrate(p, rest_state(p), part_a, 1.0).effects
        eb = integrate(p, rest_state(p), part_b, 1.0).effects
        e_all = integrate(p, rest_state(p), sched, 1.0).effects
        scale = max(1.0, np.abs(e_all).max())
        worst = max(worst, np.abs(e_all - (ea + eb)).max() / (10 * 1.0 * scale))
    superpose = worst <= 1.0
    details.append(f"superposition margin {worst:.1e}")

    # first-order convergence of the Euler loop toward the reference integrator
    plan = WeeklyPlan(doses=(1.0,) * 7, window_length_min=16.0)
    sched = plan_to_schedule(plan, 1, dt=2.0)
    errs = []
    for dt in (2.0, 1.0):
        eul = integrate(CAFFEINE, rest_state(CAFFEINE), sched, dt,
                        record_stride=int(8 / dt))
        ref = integrate_reference(CAFFEINE, rest_state(CAFFEINE), sched, dt,
                                  record_stride=int(8 / dt))
        errs.append(np.abs(eul.effects - ref.effects).max())
    order = math.log2(errs[0] / errs[1])
    order_ok = 0.8 <= order <= 1.2
    details.append(f"convergence order {order:.3f}")

    # projection idempotence and feasibility on 1000 random vectors
    rng = np.random.default_rng(99)
    proj_ok = True
    for con in (Constraint("daily_max", 2.0), Constraint("weekly_max", 10.0)):
        for _ in range(500):
            x = rng.uniform(-15.0, 15.0, 7)
            px = project(x, con)
            proj_ok &= bool(np.array_equal(project(px, con), px))
            proj_ok &= bool(np.all(px >= 0.0))
            if con.kind == "daily_max":
                proj_ok &= bool(np.all(px <= con.cap))
            else:
                proj_ok &= bool(px.sum() <= con.cap + 1e-9)
    details.append(f"projection idempotent+feasible: {proj_ok}")

    # seeded runs are reproducible byte for byte
    spec = ObjectiveSpec()
    tpl = WeeklyPlan(doses=(0.0,) * 7)
    runs = [optimize(CAFFEINE, tpl, spec, Constraint("daily_max", 2.0),
                     seed=5, starts=2) for _ in range(2)]
    det = (json.dumps(runs[0].to_dict()).encode()
           == json.dumps(runs[1].to_dict()).encode())
    details.append(f"seed determinism: {det}")

    report(9, superpose and order_ok and proj_ok and det,
           "; ".join(details), t0, 60.0)
