"""Command-line front end: simulate, analyze, optimize, fit-loss, sweep.

Every output embeds the normalized parameter set, dt, and seed so runs are
self-describing and reproducible. Exit codes: 0 success, 2 configuration
error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import analytic, calibration, optimizer
from .kinetics import integrate, rest_state
from .params import BUILTIN_NAMES, ModelParams, builtin_params, load_params
from .regimen import (MINUTES_PER_WEEK, PRESET_NAMES, ObjectiveSpec, WeeklyPlan,
                      load_plan, load_schedule, plan_to_schedule, preset_regimen,
                      sample_alertness)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

#: the four published optimization conditions
CONDITIONS = {
    "no-tolerance-daily-max": ({"k4": 0.0}, optimizer.Constraint("daily_max", 2.0)),
    "with-tolerance-daily-max": ({}, optimizer.Constraint("daily_max", 2.0)),
    "no-tolerance-weekly-max": ({"k4": 0.0}, optimizer.Constraint("weekly_max", 10.0)),
    "with-tolerance-weekly-max": ({}, optimizer.Constraint("weekly_max", 10.0)),
}


class ConfigError(Exception):
    pass


def _resolve_params(spec: str) -> ModelParams:
    if spec in BUILTIN_NAMES:
        return builtin_params(spec)
    if not os.path.exists(spec):
        raise ConfigError(f"parameter file not found: {spec}")
    return load_params(spec)


def _resolve_schedule(args, dt: float):
    if args.preset and args.schedule:
        raise ConfigError("give either --preset or --schedule, not both")
    if args.preset:
        return preset_regimen(args.preset, dt)
    if args.schedule:
        if not os.path.exists(args.schedule):
            raise ConfigError(f"schedule file not found: {args.schedule}")
        return load_schedule(args.schedule)
    if getattr(args, "plan", None):
        if not os.path.exists(args.plan):
            raise ConfigError(f"plan file not found: {args.plan}")
        return plan_to_schedule(load_plan(args.plan), args.weeks, dt)
    raise ConfigError("no schedule given (use --preset, --schedule, or --plan)")


def _parse_constraint(text: str) -> optimizer.Constraint:
    try:
        kind, cap = text.split(":")
        kind = {"daily": "daily_max", "weekly": "weekly_max"}[kind.strip()]
        return optimizer.Constraint(kind, float(cap))
    except (ValueError, KeyError):
        raise ConfigError(
            f"bad constraint {text!r}; expected 'daily:<cap>' or 'weekly:<cap>'"
        ) from None


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _provenance(p: ModelParams, args) -> dict:
    return {"params": p.to_dict(), "dt_min": args.dt, "seed": args.seed}


def cmd_simulate(args) -> int:
    p = _resolve_params(args.params)
    schedule = _resolve_schedule(args, args.dt)
    traj = integrate(p, rest_state(p), schedule, args.dt,
                     record_stride=args.stride)
    os.makedirs(args.out, exist_ok=True)
    summary = _provenance(p, args)
    summary.update({
        "schedule": schedule.to_dict(),
        "total_dose_mass_ug": schedule.total_mass,
        "peak_effect": float(traj.effects.max()),
        "min_effect": float(traj.effects.min()),
        "final_baseline": float(traj.e_b[-1]),
        "record_stride": args.stride,
    })
    traj.to_csv(os.path.join(args.out, "trajectory.csv"))
    _write_json(os.path.join(args.out, "summary.json"), summary)
    print(f"wrote {args.out}/trajectory.csv ({len(traj)} samples), "
          f"peak E = {traj.effects.max():.4f}, final E_b = {traj.e_b[-1]:.4f}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    p = _resolve_params(args.params)
    summary = analytic.constant_dose_equilibrium(p, args.dose_rate)
    report = _provenance(p, args)
    report["equilibrium"] = summary.to_dict()
    if args.e_drug is not None and args.e_drug_tol is not None:
        report["k4_estimate"] = analytic.estimate_k4(
            p.k6, p.e0, args.e_drug, args.e_drug_tol)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_json(os.path.join(args.out, "equilibrium.json"), report)
    print(text)
    return EXIT_OK


def cmd_optimize(args) -> int:
    p = _resolve_params(args.params)
    if args.condition:
        overrides, constraint = CONDITIONS[args.condition]
        p = p.replace(**overrides)
    elif args.constraint:
        constraint = _parse_constraint(args.constraint)
    else:
        raise ConfigError("give --condition or --constraint")
    spec = ObjectiveSpec(horizon_weeks=args.weeks)
    template = WeeklyPlan(doses=(0.0,) * 7)
    result = optimizer.optimize(p, template, spec, constraint, seed=args.seed,
                                starts=args.starts, dt=args.dt)
    payload = _provenance(p, args)
    payload.update({
        "constraint": {"kind": constraint.kind, "cap": constraint.cap},
        "objective": spec.to_dict(),
        "result": result.to_dict(),
    })
    os.makedirs(args.out, exist_ok=True)
    _write_json(os.path.join(args.out, "result.json"), payload)

    # evaluation-week alertness trace for the optimal plan
    schedule = plan_to_schedule(template.with_doses(result.doses),
                                spec.horizon_weeks, args.dt)
    traj = integrate(p, rest_state(p), schedule, args.dt)
    w0 = spec.eval_week_index * MINUTES_PER_WEEK
    mask = traj.times >= w0 - 1e-9
    with open(os.path.join(args.out, "optimal_week.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_min", "E"])
        for t, e in zip(traj.times[mask], traj.effects[mask]):
            w.writerow([repr(float(t)), repr(float(e))])
    doses = ", ".join(f"{d:.4f}" for d in result.doses)
    print(f"best f = {result.f_value:.6f} at doses ({doses}); "
          f"{result.evaluations} evaluations over {result.starts} starts")
    return EXIT_OK


def _load_observations(paths) -> list:
    obs = []
    for path in paths:
        if not os.path.exists(path):
            raise ConfigError(f"observation file not found: {path}")
        obs.append(calibration.load_series(path))
    return obs


def cmd_fit_loss(args) -> int:
    p = _resolve_params(args.params)
    schedule = _resolve_schedule(args, args.dt)
    observed = _load_observations(args.obs)
    value = calibration.loss(p, schedule, observed, args.dt)
    payload = _provenance(p, args)
    payload["loss"] = value
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_json(os.path.join(args.out, "loss.json"), payload)
    print(json.dumps({"loss": value}))
    return EXIT_OK


def cmd_sweep(args) -> int:
    p = _resolve_params(args.params)
    schedule = _resolve_schedule(args, args.dt)
    observed = _load_observations(args.obs)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    rows = calibration.sweep(p, args.field, values, schedule, observed, args.dt)
    lines = ["value,loss"] + [f"{v!r},{l!r}" for v, l in rows]
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "sweep.csv"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def _add_common(sp, seed_default=0):
    sp.add_argument("--params", required=True,
                    help=f"parameter set name ({', '.join(BUILTIN_NAMES)}) or JSON path")
    sp.add_argument("--dt", type=float, default=1.0, help="Euler step (min)")
    sp.add_argument("--seed", type=int, default=seed_default)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dosesim",
        description="Two-mechanism drug-tolerance simulator and schedule optimizer")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="integrate a dosing schedule")
    _add_common(sp)
    sp.add_argument("--preset", choices=PRESET_NAMES)
    sp.add_argument("--schedule", help="schedule JSON path")
    sp.add_argument("--plan", help="weekly plan JSON path")
    sp.add_argument("--weeks", type=int, default=4, help="weeks when using --plan")
    sp.add_argument("--stride", type=int, default=1, help="record every Nth step")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("analyze", help="constant-dose equilibrium report")
    _add_common(sp)
    sp.add_argument("--dose-rate", type=float, required=True,
                    help="constant dose rate (ug/min)")
    sp.add_argument("--e-drug", type=float, help="observed pre-tolerance effect")
    sp.add_argument("--e-drug-tol", type=float, help="observed post-tolerance effect")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("optimize", help="optimal weekly dosing schedule")
    _add_common(sp)
    sp.add_argument("--condition", choices=sorted(CONDITIONS))
    sp.add_argument("--constraint", help="'daily:<cap>' or 'weekly:<cap>' (cups)")
    sp.add_argument("--starts", type=int, default=8)
    sp.add_argument("--weeks", type=int, default=3, help="simulation horizon")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("fit-loss", help="score parameters against observations")
    _add_common(sp)
    sp.add_argument("--preset", choices=PRESET_NAMES)
    sp.add_argument("--schedule", help="schedule JSON path")
    sp.add_argument("--obs", action="append", required=True,
                    help="observation CSV (repeatable)")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_fit_loss)

    sp = sub.add_parser("sweep", help="loss along one parameter axis")
    _add_common(sp)
    sp.add_argument("--preset", choices=PRESET_NAMES)
    sp.add_argument("--schedule", help="schedule JSON path")
    sp.add_argument("--obs", action="append", required=True)
    sp.add_argument("--field", required=True, help="parameter field name, e.g. k6")
    sp.add_argument("--values", required=True, help="comma-separated candidates")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sweep)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
