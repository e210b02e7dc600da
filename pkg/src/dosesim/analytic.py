"""Closed-form results used as independent oracles and for parameter estimation."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .params import ModelParams


@dataclass(frozen=True)
class EquilibriumSummary:
    """Long-run values under a constant dose rate (acute mechanism off)."""

    dose_rate: float       # ug/min
    c_eq: float            # ug/mL
    c_mem_eq: float        # ug/mL
    e_drug: float          # effect before tolerance develops
    e_drug_tol: float      # effect after tolerance develops
    e_withdrawal: float    # effect just after stopping, tolerance still present

    def to_dict(self) -> dict:
        return {"dose_rate_ug_per_min": self.dose_rate, "c_eq": self.c_eq,
                "c_mem_eq": self.c_mem_eq, "e_drug": self.e_drug,
                "e_drug_tol": self.e_drug_tol, "e_withdrawal": self.e_withdrawal}


def impulse_concentration(p: ModelParams, total_dose: float, t) -> float:
    """Concentration after an instantaneous dose at t = 0: k1*k7*dose*exp(-k1*t)."""
    import numpy as np
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    if not (math.isfinite(total_dose) and total_dose >= 0):
        raise ValueError("total_dose must be finite and >= 0")
    out = p.k1 * p.k7 * total_dose * np.exp(-p.k1 * t)
    return float(out) if out.ndim == 0 else out


def constant_dose_equilibrium(p: ModelParams, dose_rate: float) -> EquilibriumSummary:
    """Equilibria under a constant dose rate.

    Valid only with the acute mechanism disabled (c_half infinite), where the
    effect decomposes as baseline plus idealized effect.
    """
    if p.acute_tolerance_enabled:
        raise ValueError(
            "constant-dose equilibrium analysis requires c_half = inf "
            "(effect must decompose as E = E_b + F)")
    if not (math.isfinite(dose_rate) and dose_rate >= 0):
        raise ValueError("dose_rate must be finite and >= 0")
    c_eq = p.k7 * dose_rate
    return EquilibriumSummary(
        dose_rate=dose_rate,
        c_eq=c_eq,
        c_mem_eq=c_eq,
        e_drug=p.e0 + p.k6 * c_eq,
        e_drug_tol=p.e0 + (p.k6 - p.k4) * c_eq,
        e_withdrawal=p.e0 - p.k4 * c_eq,
    )


def estimate_k4(k6: float, e0: float, e_drug: float, e_drug_tol: float) -> float:
    """Tolerance strength from observed pre- and post-tolerance effect levels."""
    if e_drug == e0:
        raise ValueError("e_drug equals e0: the drug had no initial effect, "
                         "k4 is not identifiable")
    return k6 * (e_drug - e_drug_tol) / (e_drug - e0)
