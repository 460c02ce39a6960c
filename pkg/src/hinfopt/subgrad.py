"""Clarke subgradients of the H-infinity cost.

The cost is a pointwise maximum of smooth components
phi(omega, u, v, K) = Re[v^H T(K, omega) u] over frequencies and unit
vectors; gradients of active components generate the Clarke subdifferential
(the cost is subdifferentially regular, so any active generator is a valid
subgradient).  The minimum-norm point of a sampled generator set estimates
dist(0, dJ(K)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from ._kernels import pure as pure_kernels
from .errors import DimensionMismatch, EmptyList, NotStabilizing, SingularResolvent
from .hinf import (
    SingularTriple,
    _half_grid,
    active_candidates,
    hinf_norm,
    sigma_max_triple,
    sweep_closed_loop,
)
from .plant import Plant, as_gain_matrix, loop_matrices, transfer

__all__ = [
    "SubgradientInfo",
    "phi_gradient",
    "clarke_subgradient",
    "subdifferential_sample",
    "min_norm_element",
    "fd_directional",
]

# Frequencies sampled as generators when the response is flat in omega
# (every omega is then a maximizer).
_FLAT_SAMPLE_COUNT = 8
MULTIPLICITY_TOL = 1e-8


@dataclass(frozen=True)
class SubgradientInfo:
    """One Clarke subgradient with its generating frequency and triple."""

    G: np.ndarray
    omega: float
    triple: SingularTriple
    J_at_K: float


def phi_gradient(plant: Plant, K, omega: float, u, v) -> np.ndarray:
    """Gradient in K of the smooth component Re[v^H T(K, omega) u].

    u and v must be unit vectors (checked to 1e-8); the resolvent at omega
    must be invertible.  Exact to rounding via the resolvent identity
    d Phi = Phi B dK C Phi.
    """
    K = as_gain_matrix(plant, K)
    u = np.asarray(u, dtype=complex).ravel()
    v = np.asarray(v, dtype=complex).ravel()
    d = plant.dims
    if u.shape != (d.n_w,) or v.shape != (d.n_x + d.n_u,):
        raise DimensionMismatch("u must have length n_w and v length n_x + n_u")
    if abs(np.linalg.norm(u) - 1.0) > 1e-8 or abs(np.linalg.norm(v) - 1.0) > 1e-8:
        raise ValueError("u and v must be unit vectors")
    a_k, c_k = loop_matrices(plant, K)
    z = np.exp(1j * float(omega))
    m = z * np.eye(d.n_x) - a_k
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise SingularResolvent(f"resolvent singular at omega = {omega!r}")
    return pure_kernels.phi_gradient_core(
        a_k, c_k, plant.Bw, plant.B, plant.C, plant.r_sqrt, float(omega), u, v
    )


_TWO_PI = 2.0 * np.pi


def _clarke_fast(plant: Plant, K, *, grid_size=4096, refine_tol=1e-10, delta_active=1e-6):
    """Hot-path subgradient evaluation.

    Returns (J, G, omega, sigma, u, v, rho) using the backend kernels; the
    generating frequency is the smallest active one (deterministic
    tie-break), or 0 for a flat response.  Skips the active-set
    post-processing of :func:`hinfopt.hinf.hinf_norm`: duplicates do not
    change the smallest active frequency or the value.
    """
    k_arr = np.asarray(getattr(K, "K", K), dtype=float)
    a_k = plant.A + plant.B @ (k_arr @ plant.C)
    c_k = np.vstack([plant.q_sqrt, plant.r_sqrt @ (k_arr @ plant.C)])
    rho, gmax, gmin, sig0, argmax_om, rom, rsig = kernels.sweep(
        a_k, c_k, plant.Bw, _half_grid(int(grid_size)), int(grid_size), float(refine_tol)
    )
    if rho >= 1.0:
        return np.inf, None, 0.0, np.nan, None, None, rho
    if gmax - gmin <= 1e-12 * gmax or rom.size == 0:
        omega = 0.0 if gmax - gmin <= 1e-12 * gmax else float(argmax_om)
        value = sig0 if omega == 0.0 else gmax
    else:
        value = max(gmax, float(rsig.max()))
        wrap = max(16.0 * refine_tol, 1e-9)
        om = np.mod(rom, _TWO_PI)
        om[om > _TWO_PI - wrap] = 0.0
        mask = rsig >= value * (1.0 - delta_active)
        omega = float(om[mask].min()) if mask.any() else float(argmax_om)
    sigma, u, v, grad = kernels.clarke_at(
        a_k, c_k, plant.Bw, plant.B, plant.C, plant.r_sqrt, float(omega)
    )
    return value, grad, float(omega), float(sigma), u, v, rho


def clarke_subgradient(
    plant: Plant,
    K,
    *,
    grid_size: int = 4096,
    refine_tol: float = 1e-10,
    delta_active: float = 1e-6,
) -> SubgradientInfo:
    """A Clarke subgradient of J at K.

    Runs the frequency sweep, picks the smallest active frequency, and
    returns the gradient of its smooth component at the top singular triple.
    Deterministic: fixed tie-break and phase normalization.
    """
    j, grad, omega, sigma, u, v, rho = _clarke_fast(
        plant, K, grid_size=grid_size, refine_tol=refine_tol, delta_active=delta_active
    )
    if not np.isfinite(j):
        raise NotStabilizing(f"closed-loop spectral radius {rho:.6g} >= 1")
    return SubgradientInfo(
        G=grad, omega=omega, triple=SingularTriple(sigma=sigma, u=u, v=v), J_at_K=float(j)
    )


def subdifferential_sample(
    plant: Plant,
    K,
    delta_active: float = 1e-6,
    *,
    grid_size: int = 4096,
    refine_tol: float = 1e-10,
    multiplicity_tol: float = MULTIPLICITY_TOL,
) -> list[np.ndarray]:
    """Sampled generators of the Clarke subdifferential at K.

    One gradient per active frequency, using the top singular triple; when
    the top singular value is numerically multiple (relative gap below
    ``multiplicity_tol``) a gradient is included for each triple in the top
    cluster.  For a flat response every frequency is active, so a fixed
    spread of 8 evenly spaced frequencies is sampled instead.
    """
    K = as_gain_matrix(plant, K)
    a_k, c_k = loop_matrices(plant, K)
    sr = sweep_closed_loop(a_k, c_k, plant.Bw, grid_size, refine_tol)
    if sr.rho >= 1.0:
        raise NotStabilizing(f"closed-loop spectral radius {sr.rho:.6g} >= 1")
    if sr.flat:
        omegas = [2.0 * np.pi * k / _FLAT_SAMPLE_COUNT for k in range(_FLAT_SAMPLE_COUNT)]
    else:
        omegas = [om for om, _ in active_candidates(sr, delta_active)]
    grads: list[np.ndarray] = []
    for omega in omegas:
        t = transfer(plant, K, omega)
        uu, ss, vh = np.linalg.svd(t)
        top = ss[0]
        for j, s in enumerate(ss):
            if top - s > multiplicity_tol * top:
                break
            u = np.conj(vh[j])
            v = uu[:, j]
            nz = np.flatnonzero(np.abs(u) > 1e-12)
            if nz.size:
                phase = u[nz[0]] / abs(u[nz[0]])
                u = u * np.conj(phase)
                v = v * np.conj(phase)
            grads.append(
                pure_kernels.phi_gradient_core(
                    a_k, c_k, plant.Bw, plant.B, plant.C, plant.r_sqrt, omega, u, v
                )
            )
    return grads


def min_norm_element(grads, tol: float = 1e-10, return_weights: bool = False):
    """Minimum-norm point of the convex hull of a list of matrices.

    Wolfe's minimum-norm-point scheme: grow a corral of support points,
    solve the affine least-norm subproblem over it, and take line-search
    steps that drop points whose weight would turn negative.  Terminates
    when the optimality gap ||x||^2 - min_i <x, g_i> falls below
    ``tol * (1 + ||x||)``.
    """
    if not grads:
        raise EmptyList("min_norm_element needs at least one matrix")
    shape = np.asarray(grads[0]).shape
    pts = np.array([np.asarray(g, float).ravel() for g in grads])
    k = pts.shape[0]
    norms2 = np.einsum("ij,ij->i", pts, pts)
    start = int(np.argmin(norms2))
    support = [start]
    weights = np.array([1.0])
    x = pts[start].copy()

    for _ in range(200 * max(k, 1)):
        dots = pts @ x
        gap = float(x @ x - dots.min())
        if gap <= tol * (1.0 + np.linalg.norm(x)):
            break
        j = int(np.argmin(dots))
        if j not in support:
            support.append(j)
            weights = np.append(weights, 0.0)
        # Minor cycle: affine min-norm over the corral, clipping at the
        # boundary of the simplex when a weight would go negative.
        while True:
            sub = pts[support]
            m = len(support)
            kkt = np.zeros((m + 1, m + 1))
            kkt[:m, :m] = sub @ sub.T
            kkt[:m, m] = 1.0
            kkt[m, :m] = 1.0
            rhs = np.zeros(m + 1)
            rhs[m] = 1.0
            sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
            v = sol[:m]
            if np.all(v >= -1e-12):
                weights = np.clip(v, 0.0, None)
                weights /= weights.sum()
                x = weights @ sub
                break
            mask = v < weights
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(mask, weights / (weights - v), np.inf)
            theta = float(np.min(ratios[v <= 1e-12])) if np.any(v <= 1e-12) else 1.0
            theta = min(max(theta, 0.0), 1.0)
            weights = (1.0 - theta) * weights + theta * v
            keep = weights > 1e-12
            if keep.all():
                weights = np.clip(weights, 0.0, None)
                weights /= weights.sum()
                x = weights @ pts[support]
                break
            support = [s for s, flag in zip(support, keep) if flag]
            weights = weights[keep]
            weights /= weights.sum()

    g_star = x.reshape(shape)
    norm = float(np.linalg.norm(x))
    if return_weights:
        full = np.zeros(k)
        for s, w in zip(support, weights):
            full[s] += w
        return g_star, norm, full
    return g_star, norm


def fd_directional(plant: Plant, K, D, h: float, **hinf_opts) -> float:
    """Central finite difference of J along direction D with step h."""
    K = as_gain_matrix(plant, K)
    D = np.asarray(D, dtype=float)
    if D.shape != K.shape:
        raise ValueError("direction D must have the gain shape")
    j_plus = hinf_norm(plant, K + h * D, **hinf_opts).value
    j_minus = hinf_norm(plant, K - h * D, **hinf_opts).value
    return (j_plus - j_minus) / (2.0 * h)
