"""Shared fixtures: benchmark plants, closed-form oracles, sampling helpers."""

import numpy as np
import pytest

from hinfopt.landscape import grid_scan_2d
from hinfopt.plant import builtin_example, is_stabilizing


def j1_closed(k: float) -> float:
    """Closed-form cost of the scalar benchmark: sqrt(1+k^2)/|k| on [-1, 0),
    sqrt(1+k^2)/(k+2) on (-2, -1)."""
    if k >= -1.0:
        return float(np.sqrt(1.0 + k * k) / abs(k))
    return float(np.sqrt(1.0 + k * k) / (k + 2.0))


def dj1_closed(k: float) -> float:
    """Derivative of the closed-form cost away from the kink at k = -1."""
    if k > -1.0:
        return float(1.0 / (k * k * np.sqrt(1.0 + k * k)))
    return float((k * (k + 2.0) - (1.0 + k * k)) / ((k + 2.0) ** 2 * np.sqrt(1.0 + k * k)))


def sample_stabilizing_gains(plant, box, n, seed, j_max=None, j_fn=None):
    """Rejection-sample n stabilizing gains from the box (optionally J-capped)."""
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    d = plant.dims
    out = []
    for _ in range(500000):
        k = (lo + (hi - lo) * rng.random(len(box))).reshape(d.n_u, d.n_y)
        if not is_stabilizing(plant, k):
            continue
        if j_max is not None and j_fn(k) > j_max:
            continue
        out.append(k)
        if len(out) == n:
            return out
    raise RuntimeError("sampling budget exhausted")


@pytest.fixture(scope="session")
def ex1():
    return builtin_example("example1")


@pytest.fixture(scope="session")
def ex2():
    return builtin_example("example2")


@pytest.fixture(scope="session")
def ex3_013():
    return builtin_example("example3", alpha=0.13)


@pytest.fixture(scope="session")
def ex3_014():
    return builtin_example("example3", alpha=0.14)


@pytest.fixture(scope="session")
def ex2_grid_oracle(ex2):
    """Brute-force grid oracle for the Example-2 optimal cost (resolution 400)."""
    plant, meta = ex2
    return grid_scan_2d(plant, meta.scan_box, 400, compute_j=True)
