import numpy as np
import pytest

from dosesim.params import builtin_params
from dosesim.regimen import DoseSchedule


@pytest.fixture
def caffeine():
    return builtin_params("caffeine")


@pytest.fixture
def nicotine():
    return builtin_params("nicotine")


def random_schedule(rng: np.random.Generator, horizon: float, dt: float = 1.0,
                    max_segments: int = 5, max_rate: float = 1e4) -> DoseSchedule:
    """Random disjoint on-grid dose segments, for property tests."""
    n = int(rng.integers(1, max_segments + 1))
    n_grid = int(horizon / dt)
    points = np.sort(rng.choice(n_grid, size=2 * n, replace=False)) * dt
    segments = []
    for k in range(n):
        start, end = points[2 * k], points[2 * k + 1]
        if end > start:
            segments.append((float(start), float(end),
                             float(rng.uniform(0, max_rate))))
    if not segments:
        segments = [(0.0, dt, float(rng.uniform(0, max_rate)))]
    return DoseSchedule(segments=tuple(segments), horizon=horizon)
