"""Empirical landscape probes: grid scans with connected components,
weak-convexity and Lipschitz constant estimation, and the weak-PL ratio.

Everything here is a sampled estimate: weak-convexity moduli come from
secant violations along segments that stay inside a sublevel set,
dist(0, dJ) uses only the sampled generator set, and grid scans are the
brute-force oracle for the optimal cost.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import ndimage

from .errors import AtOptimum, DimensionMismatch, EmptySample, WrongGainShape
from .hinf import sweep_closed_loop
from .plant import Plant, as_gain_matrix, loop_matrices
from .subgrad import _clarke_fast, min_norm_element, subdifferential_sample

__all__ = [
    "GridScan",
    "WeakConvexityEstimate",
    "grid_scan_2d",
    "scan_to_csv",
    "estimate_weak_convexity",
    "estimate_lipschitz",
    "weak_pl_ratio",
]

# 4-neighbor connectivity: diagonal contact does not join components.
_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])

_SCAN_HINF_DEFAULTS = {"grid_size": 1024, "refine_tol": 1e-9}


@dataclass
class GridScan:
    """Dense 2-d scan of the cost over a box of gain entries.

    ``j_values[i1, i2]`` corresponds to ``(k1[i1], k2[i2])`` and holds +inf
    for non-stabilizing cells (``None`` when the scan was stability-only).
    ``components`` labels stabilizing cells 0..n_components-1 via
    4-neighbor flood fill, with -1 for infeasible cells.
    """

    box: tuple[tuple[float, float], tuple[float, float]]
    resolution: int
    k1: np.ndarray
    k2: np.ndarray
    stabilizing: np.ndarray
    components: np.ndarray
    n_components: int
    j_values: Optional[np.ndarray]
    j_star_grid: Optional[float]
    argmin_cell: Optional[tuple[int, int]]


def _entry_gain_shape(plant: Plant) -> tuple[int, int]:
    d = plant.dims
    if d.n_u * d.n_y != 2:
        raise WrongGainShape(
            f"2-d scan needs exactly two gain entries; this plant has {d.n_u}x{d.n_y}"
        )
    return d.n_u, d.n_y


def gain_from_entries(plant: Plant, k1: float, k2: float) -> np.ndarray:
    """Pack two scalar entries into the plant's gain shape (row-major)."""
    shape = _entry_gain_shape(plant)
    return np.array([k1, k2], dtype=float).reshape(shape)


def grid_scan_2d(
    plant: Plant,
    box,
    resolution: int,
    *,
    compute_j: bool = True,
    hinf_opts: Optional[dict] = None,
) -> GridScan:
    """Dense scan over ``box`` with ``resolution`` points per axis.

    Stability is evaluated at every cell; connected components of the
    stabilizing set use 4-neighbor flood fill.  With ``compute_j`` the cost
    is evaluated at every stabilizing cell (lighter sweep settings than the
    point oracle by default; override via ``hinf_opts``) and the grid
    minimum serves as a brute-force oracle for the optimal cost.
    """
    shape = _entry_gain_shape(plant)
    (lo1, hi1), (lo2, hi2) = box
    res = int(resolution)
    k1 = np.linspace(float(lo1), float(hi1), res)
    k2 = np.linspace(float(lo2), float(hi2), res)

    base = np.zeros((2, plant.dims.n_x, plant.dims.n_x))
    for idx in range(2):
        e = np.zeros(2)
        e[idx] = 1.0
        base[idx] = plant.B @ e.reshape(shape) @ plant.C

    stab = np.empty((res, res), dtype=bool)
    chunk = max(1, 200000 // max(plant.dims.n_x**2, 1))
    kk1 = np.repeat(k1, res)
    kk2 = np.tile(k2, res)
    flat = np.empty(res * res, dtype=bool)
    for start in range(0, res * res, chunk):
        s = slice(start, min(start + chunk, res * res))
        mats = (
            plant.A[None, :, :]
            + kk1[s, None, None] * base[0][None, :, :]
            + kk2[s, None, None] * base[1][None, :, :]
        )
        ev = np.linalg.eigvals(mats)
        flat[s] = np.max(np.abs(ev), axis=1) < 1.0
    stab = flat.reshape(res, res)

    components, n_components = ndimage.label(stab, structure=_CROSS)
    components = components.astype(np.int64) - 1

    j_values = None
    j_star = None
    argmin_cell = None
    if compute_j:
        opts = {**_SCAN_HINF_DEFAULTS, **(hinf_opts or {})}
        j_values = np.full((res, res), np.inf)
        for i1, i2 in zip(*np.nonzero(stab)):
            a_k, c_k = loop_matrices(plant, gain_from_entries(plant, k1[i1], k2[i2]))
            sr = sweep_closed_loop(a_k, c_k, plant.Bw, **opts)
            j_values[i1, i2] = sr.value
        flat_idx = int(np.argmin(j_values))
        argmin_cell = np.unravel_index(flat_idx, j_values.shape)
        j_star = float(j_values[argmin_cell])
        if not np.isfinite(j_star):
            j_star, argmin_cell = None, None
        else:
            argmin_cell = (int(argmin_cell[0]), int(argmin_cell[1]))

    return GridScan(
        box=((float(lo1), float(hi1)), (float(lo2), float(hi2))),
        resolution=res, k1=k1, k2=k2, stabilizing=stab, components=components,
        n_components=int(n_components), j_values=j_values, j_star_grid=j_star,
        argmin_cell=argmin_cell,
    )


def scan_to_csv(scan: GridScan, path) -> None:
    """Columns k1, k2, J (empty for infeasible cells), component_id (-1)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["k1", "k2", "J", "component_id"])
        for i1 in range(scan.resolution):
            for i2 in range(scan.resolution):
                j = ""
                if scan.j_values is not None and np.isfinite(scan.j_values[i1, i2]):
                    j = repr(float(scan.j_values[i1, i2]))
                w.writerow([
                    repr(float(scan.k1[i1])),
                    repr(float(scan.k2[i2])),
                    j,
                    int(scan.components[i1, i2]),
                ])


@dataclass(frozen=True)
class WeakConvexityEstimate:
    """Smallest modulus making all sampled secant violations nonpositive."""

    m_hat: float
    nu: float
    segments_tested: int
    worst_violation_margin: float


def _default_cost(plant: Plant, hinf_opts: Optional[dict]) -> Callable[[np.ndarray], float]:
    opts = dict(hinf_opts or {})

    def cost(k: np.ndarray) -> float:
        j, _, _, _, _, _, _ = _clarke_fast(plant, k, **opts)
        return j

    return cost


def _sample_box(rng: np.random.Generator, box, shape) -> np.ndarray:
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return (lo + (hi - lo) * rng.random(len(box))).reshape(shape)


def estimate_weak_convexity(
    plant: Plant,
    nu: float,
    n_segments: int = 200,
    n_points_per_segment: int = 21,
    seed: int = 0,
    *,
    box,
    cost_fn: Optional[Callable[[np.ndarray], float]] = None,
    hinf_opts: Optional[dict] = None,
    max_attempts_factor: int = 400,
) -> WeakConvexityEstimate:
    """Estimate the weak-convexity modulus on the sublevel set {J <= nu}.

    Samples segment endpoints from ``box`` whose whole segment (checked
    pointwise at ``n_points_per_segment`` samples) stays in the sublevel
    set, then solves for the smallest m making every secant violation
        J(lam K1 + (1-lam) K2) - lam J(K1) - (1-lam) J(K2)
          - (m/2) lam (1-lam) ||K1-K2||_F^2
    nonpositive, clamped at 0.  ``cost_fn`` may replace the cost (testing
    seam); infeasible points must evaluate to +inf.
    """
    d = plant.dims
    shape = (d.n_u, d.n_y)
    if box is None or len(box) != d.n_u * d.n_y:
        raise ValueError("box must give one (lo, hi) interval per gain entry")
    cost = cost_fn or _default_cost(plant, hinf_opts)
    rng = np.random.default_rng(seed)
    inner = np.linspace(0.0, 1.0, n_points_per_segment)[1:-1]

    # Endpoint pool first: the sublevel set can be a tiny fraction of the
    # box, and independent pair rejection would square that fraction.
    pool_target = max(50, n_segments)
    pool_pts: list[np.ndarray] = []
    pool_js: list[float] = []
    attempts = 0
    cap = max_attempts_factor * pool_target
    while len(pool_pts) < pool_target and attempts < cap:
        attempts += 1
        k = _sample_box(rng, box, shape)
        j = cost(k)
        if np.isfinite(j) and j <= nu:
            pool_pts.append(k)
            pool_js.append(float(j))
    if len(pool_pts) < 2:
        raise EmptySample(f"no endpoint pool inside the nu = {nu!r} sublevel set after {attempts} draws")

    accepted = 0
    ratios_max = 0.0
    v0_all: list[np.ndarray] = []
    wt_all: list[np.ndarray] = []
    seg_attempts = 0
    seg_cap = 50 * n_segments
    npool = len(pool_pts)
    while accepted < n_segments and seg_attempts < seg_cap:
        seg_attempts += 1
        i1 = int(rng.integers(npool))
        i2 = int(rng.integers(npool))
        if i1 == i2:
            continue
        k1, j1 = pool_pts[i1], pool_js[i1]
        k2, j2 = pool_pts[i2], pool_js[i2]
        js = np.empty(n_points_per_segment - 2)
        ok = True
        for i, lam in enumerate(inner):
            val = cost(lam * k1 + (1.0 - lam) * k2)
            if not (np.isfinite(val) and val <= nu):
                ok = False
                break
            js[i] = val
        if not ok:
            continue
        accepted += 1
        sep2 = float(np.sum((k1 - k2) ** 2))
        v0 = js - inner * j1 - (1.0 - inner) * j2
        wt = 0.5 * inner * (1.0 - inner) * sep2
        v0_all.append(v0)
        wt_all.append(wt)
        with np.errstate(divide="ignore", invalid="ignore"):
            need = np.where(wt > 0.0, v0 / wt, 0.0)
        if need.size:
            ratios_max = max(ratios_max, float(need.max()))

    if accepted == 0:
        raise EmptySample(f"no segments inside the nu = {nu!r} sublevel set after {seg_attempts} draws")
    m_hat = max(0.0, ratios_max)
    margin = max(float(np.max(v - m_hat * w)) for v, w in zip(v0_all, wt_all))
    return WeakConvexityEstimate(
        m_hat=m_hat, nu=float(nu), segments_tested=accepted, worst_violation_margin=margin
    )


def estimate_lipschitz(
    plant: Plant,
    nu: float,
    n_samples: int,
    seed: int = 0,
    *,
    box,
    oracle: Optional[Callable[[np.ndarray], tuple[float, np.ndarray]]] = None,
    hinf_opts: Optional[dict] = None,
    max_attempts_factor: int = 400,
) -> float:
    """Largest sampled subgradient norm over the sublevel set {J <= nu}.

    ``oracle`` maps a gain to (J, G) and is the testing seam; the default
    uses the cost and its Clarke subgradient.
    """
    d = plant.dims
    shape = (d.n_u, d.n_y)
    if box is None or len(box) != d.n_u * d.n_y:
        raise ValueError("box must give one (lo, hi) interval per gain entry")
    opts = dict(hinf_opts or {})

    if oracle is None:
        def oracle(k):
            j, grad, _, _, _, _, _ = _clarke_fast(plant, k, **opts)
            return j, grad

    rng = np.random.default_rng(seed)
    found = 0
    best = 0.0
    attempts = 0
    cap = max_attempts_factor * n_samples
    while found < n_samples and attempts < cap:
        attempts += 1
        k = _sample_box(rng, box, shape)
        j, grad = oracle(k)
        if not (np.isfinite(j) and j <= nu):
            continue
        found += 1
        best = max(best, float(np.linalg.norm(grad)))
    if found == 0:
        raise EmptySample(f"no samples inside the nu = {nu!r} sublevel set after {attempts} draws")
    return best


def weak_pl_ratio(
    plant: Plant,
    K,
    j_star: float,
    *,
    delta_active: float = 1e-6,
    hinf_opts: Optional[dict] = None,
) -> float:
    """Empirical lower-bound witness dist_est(0, dJ(K)) / (J(K) - J*).

    State feedback only (C = I).  The distance uses the minimum-norm point
    of the sampled generator set, so the ratio is an estimate.  Raises
    :class:`AtOptimum` when J(K) is within 1e-9 of ``j_star``.
    """
    d = plant.dims
    if not np.array_equal(plant.C, np.eye(d.n_x)):
        raise DimensionMismatch("weak_pl_ratio requires full state feedback (C = I)")
    K = as_gain_matrix(plant, K)
    opts = dict(hinf_opts or {})
    j, _, _, _, _, _, _ = _clarke_fast(plant, K, **opts)
    excess = j - float(j_star)
    if excess < 1e-9:
        raise AtOptimum(f"J(K) - J* = {excess:.3e} is below 1e-9")
    grads = subdifferential_sample(plant, K, delta_active, **opts)
    _, dist = min_norm_element(grads)
    return float(dist / excess)
