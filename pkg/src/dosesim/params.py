"""Model parameter sets and unit normalization.

All rate constants are stored per minute internally. Input files may mix
1/min and 1/day units, so loading goes through :func:`normalize_params`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields, replace
from typing import Mapping

MINUTES_PER_DAY = 1440.0

#: rate fields that carry a time unit and may need conversion
RATE_FIELDS = ("k1", "k2", "k3", "k5")

_UNIT_SCALE = {
    "1/min": 1.0,
    "1/day": 1.0 / MINUTES_PER_DAY,
}


@dataclass(frozen=True)
class ModelParams:
    """The nine model constants, rates normalized to 1/min.

    ``k4 = 0`` disables the long-term (baseline-shift) tolerance mechanism;
    ``c_half = math.inf`` disables the acute (saturation) mechanism. Infinity
    is the exact marker: the effect formula branches on it so the divisor is
    exactly 1.
    """

    e0: float       # intrinsic effect baseline (effect units)
    k1: float       # concentration decay rate (1/min)
    k2: float       # effect convergence rate (1/min)
    k3: float       # baseline convergence rate (1/min)
    k4: float       # long-term tolerance strength (mL/ug)
    k5: float       # memory rate (1/min)
    k6: float       # concentration-to-effect gain (mL/ug)
    k7: float       # dose-to-concentration gain (min/mL)
    c_half: float   # acute-tolerance half concentration (ug/mL), inf allowed

    def __post_init__(self) -> None:
        for name in ("e0", "k4", "k6"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        for name in ("k1", "k2", "k3", "k5", "k7"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if not self.c_half > 0.0:
            raise ValueError(f"c_half must be > 0 (inf allowed), got {self.c_half}")

    @property
    def acute_tolerance_enabled(self) -> bool:
        return math.isfinite(self.c_half)

    def max_rate(self) -> float:
        """Largest decay rate; controls the Euler stability bound 2/max_rate."""
        return max(self.k1, self.k2, self.k3, self.k5)

    def replace(self, **changes: float) -> "ModelParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        if math.isinf(d["c_half"]):
            d["c_half"] = "inf"
        return d


FIELD_NAMES = tuple(f.name for f in fields(ModelParams))


def normalize_params(values: Mapping[str, float],
                     units: Mapping[str, str] | None = None) -> ModelParams:
    """Build a ModelParams from published values plus per-field unit tags.

    ``units`` maps rate-field names to "1/min" or "1/day"; untagged rates are
    taken as already per-minute. ``c_half`` may be the string "inf".
    """
    units = dict(units or {})
    vals = {}
    for name in FIELD_NAMES:
        if name not in values:
            raise ValueError(f"missing parameter field {name!r}")
        v = values[name]
        if isinstance(v, str):
            if name == "c_half" and v.strip().lower() in ("inf", "infinity"):
                v = math.inf
            else:
                v = float(v)
        vals[name] = float(v)
    for name, tag in units.items():
        if name not in RATE_FIELDS:
            raise ValueError(f"unit tag given for non-rate field {name!r}")
        if tag not in _UNIT_SCALE:
            raise ValueError(f"unknown unit {tag!r} for field {name!r} "
                             f"(expected one of {sorted(_UNIT_SCALE)})")
        vals[name] = vals[name] * _UNIT_SCALE[tag]
    return ModelParams(**vals)


def load_params(path: str) -> ModelParams:
    """Load a parameter JSON file: {e0,k1,...,k7,c_half, units:{...}}."""
    with open(path) as fh:
        raw = json.load(fh)
    units = raw.pop("units", {})
    return normalize_params(raw, units)


def save_params(p: ModelParams, path: str) -> None:
    """Write normalized parameters (all rates 1/min) as JSON."""
    with open(path, "w") as fh:
        json.dump(p.to_dict(), fh, indent=2)
        fh.write("\n")


# Published values: caffeine fitted to long-term tolerance data, nicotine to
# acute-tolerance heart-rate data (k3 = k4 = 0, fixed baseline).
_BUILTIN_RAW = {
    "caffeine": (
        {"e0": 0.0, "k1": 0.002, "k2": 0.1, "k3": 0.5, "k4": 0.3,
         "k5": 0.5, "k6": 0.4, "k7": 0.0125, "c_half": math.inf},
        {"k3": "1/day", "k5": "1/day"},
    ),
    "nicotine": (
        {"e0": 60.0, "k1": 0.014, "k2": 0.08, "k3": 0.0, "k4": 0.0,
         "k5": 20.0, "k6": 1.8e3, "k7": 0.0175, "c_half": 0.005},
        {"k3": "1/day", "k5": "1/day"},
    ),
}

BUILTIN_NAMES = tuple(sorted(_BUILTIN_RAW))


def builtin_params(name: str) -> ModelParams:
    """Named parameter sets ("caffeine", "nicotine"), already normalized."""
    try:
        raw, units = _BUILTIN_RAW[name]
    except KeyError:
        raise ValueError(
            f"unknown parameter set {name!r}; valid names: {', '.join(BUILTIN_NAMES)}"
        ) from None
    return normalize_params(raw, units)
