"""Two-mechanism drug-tolerance simulator and dosing-schedule optimizer."""

from .analytic import (EquilibriumSummary, constant_dose_equilibrium,
                       estimate_k4, impulse_concentration)
from .calibration import ObservedSeries, load_series, loss, sweep
from .kinetics import (State, Trajectory, derivatives, effect, euler_step,
                       integrate, integrate_reference, rest_state,
                       stability_limit)
from .optimizer import (Constraint, OptResult, evaluate_plan, optimize,
                        project)
from .params import (ModelParams, builtin_params, load_params,
                     normalize_params, save_params)
from .regimen import (DoseSchedule, ObjectiveSpec, WeeklyPlan, load_plan,
                      load_schedule, objective, plan_to_schedule,
                      preset_regimen, sample_alertness)

__all__ = [
    "Constraint", "DoseSchedule", "EquilibriumSummary", "ModelParams",
    "ObjectiveSpec", "ObservedSeries", "OptResult", "State", "Trajectory",
    "WeeklyPlan", "builtin_params", "constant_dose_equilibrium",
    "derivatives", "effect", "estimate_k4", "euler_step", "evaluate_plan",
    "impulse_concentration", "integrate", "integrate_reference", "load_params",
    "load_plan", "load_schedule", "load_series", "loss", "normalize_params",
    "objective", "optimize", "plan_to_schedule", "preset_regimen", "project",
    "rest_state", "sample_alertness", "save_params", "stability_limit",
    "sweep",
]

__version__ = "0.1.0"
