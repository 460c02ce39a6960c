"""Certificate machinery: complex-to-real lifting, bounded-real matrices,
Riccati gamma-feasibility, and the LMI change of variables.

The feasibility test powers :func:`hinfopt.hinf.hinf_bisection` and gives an
executable version of the equivalence J(K) <= gamma  <=>  exists P > 0 with
Lambda(K, gamma, P) <= 0 (nonstrict bounded-real form).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import solve_discrete_lyapunov

from . import _kernels as kernels
from .errors import DimensionMismatch, GammaNonPositive, NotStabilizing, PNotPD, SolverError
from .plant import Plant, as_gain_matrix, loop_matrices, spectral_radius

__all__ = [
    "LiftedTriple",
    "CvxTriple",
    "RiccatiResult",
    "psi_map",
    "lambda_matrix",
    "riccati_fixed_point",
    "pi_map",
    "lmi_matrix",
]

PSD_TOL = 1e-9


@dataclass(frozen=True)
class LiftedTriple:
    """(K, gamma, P) candidate for the lifted bounded-real set."""

    K: np.ndarray
    gamma: float
    P: np.ndarray


@dataclass(frozen=True)
class CvxTriple:
    """(gamma, Y, X) candidate for the convex LMI set."""

    gamma: float
    Y: np.ndarray
    X: np.ndarray


@dataclass(frozen=True)
class RiccatiResult:
    """Outcome of the gamma-feasibility fixed point."""

    gamma: float
    feasible: bool
    P: Optional[np.ndarray]
    iterations: int
    lambda_max: Optional[float]
    status: str  # "feasible" | "pd_loss" | "max_iter"


def psi_map(x: np.ndarray) -> np.ndarray:
    """Real symmetric lifting of a complex q-by-r matrix.

    The largest eigenvalue of the lifted matrix equals sigma_max(x), and
    sigma**2 I >= x^H x holds exactly when sigma I >= psi_map(x).
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2:
        raise DimensionMismatch("psi_map expects a 2-d matrix")
    re, im = x.real, x.imag
    q, r = x.shape
    zr = np.zeros((r, r))
    zq = np.zeros((q, q))
    blk_re = np.block([[zr, re.T], [re, zq]])
    blk_im = np.block([[zr, im.T], [-im, zq]])
    out = np.block([[blk_re, blk_im], [blk_im.T, blk_re]])
    return 0.5 * (out + out.T)


def _gram(plant: Plant, K: np.ndarray) -> np.ndarray:
    krc = K @ plant.C
    g = plant.Q + krc.T @ plant.R @ krc
    return 0.5 * (g + g.T)


def lambda_matrix(plant: Plant, K, gamma: float, P: np.ndarray) -> np.ndarray:
    """Bounded-real certificate matrix for (K, gamma, P).

    Built with the plant's Bw (off-diagonal blocks A_K' P Bw, corner
    Bw' P Bw - gamma^2 I); for Bw = I this is the familiar two-block form
    with A_K' P and P - gamma^2 I.  Negative semidefiniteness together with
    P > 0 certifies J(K) <= gamma.
    """
    K = as_gain_matrix(plant, K)
    P = np.asarray(P, dtype=float)
    n = plant.dims.n_x
    nw = plant.dims.n_w
    if P.shape != (n, n):
        raise DimensionMismatch("P must be n_x by n_x")
    a_k = plant.A + plant.B @ K @ plant.C
    pa = P @ a_k
    pb = P @ plant.Bw
    top_left = a_k.T @ pa - P + _gram(plant, K)
    top_right = a_k.T @ pb
    bottom_right = plant.Bw.T @ pb - (float(gamma) ** 2) * np.eye(nw)
    out = np.block([[top_left, top_right], [top_right.T, bottom_right]])
    return 0.5 * (out + out.T)


def riccati_fixed_point(
    plant: Plant,
    K,
    gamma: float,
    *,
    max_iter: int = 10000,
    tol: float = 1e-11,
) -> RiccatiResult:
    """Constructive gamma-feasibility test via the fixed-point recursion.

    Iterates P <- A_K' P A_K + A_K' P Bw (gamma^2 I - Bw' P Bw)^{-1} Bw' P A_K
    + C_K' C_K from P = 0.  Feasible declarations come with the certificate P
    (polished by a few Newton correction steps so that the bounded-real matrix
    satisfies lambda_max <= 1e-8 even when gamma sits just above the norm);
    infeasibility is declared when gamma^2 I - Bw' P Bw loses positive
    definiteness or the iteration budget runs out without convergence.
    """
    K = as_gain_matrix(plant, K)
    if gamma <= 0.0:
        raise GammaNonPositive("gamma must be positive")
    a_k, c_k = loop_matrices(plant, K)
    rho = spectral_radius(a_k)
    if rho >= 1.0:
        raise NotStabilizing(f"closed-loop spectral radius {rho:.6g} >= 1")
    gram = c_k.T @ c_k
    gram = 0.5 * (gram + gram.T)
    status, p, iters = kernels.riccati(a_k, gram, plant.Bw, float(gamma), int(max_iter), float(tol))
    if status == 1:
        return RiccatiResult(float(gamma), False, None, iters, None, "pd_loss")
    if status == 2:
        return RiccatiResult(float(gamma), False, None, iters, None, "max_iter")
    p = _newton_polish(a_k, gram, plant.Bw, float(gamma), p)
    lam_max = float(np.linalg.eigvalsh(lambda_matrix(plant, K, gamma, p)).max())
    if lam_max > 1e-8:
        raise SolverError(
            f"converged certificate violates the bounded-real bound: lambda_max {lam_max:.3e}"
        )
    return RiccatiResult(float(gamma), True, p, iters, lam_max, "feasible")


def _residual(a_k, gram, bw, g2, p):
    s = g2 * np.eye(bw.shape[1]) - bw.T @ p @ bw
    nmat = bw.T @ p @ a_k
    res = a_k.T @ p @ a_k + nmat.T @ np.linalg.solve(s, nmat) + gram - p
    return 0.5 * (res + res.T), s, nmat


def _newton_polish(a_k, gram, bw, gamma, p, steps=3):
    """Newton correction of the converged fixed point.

    Near gamma ~ J(K) the plain recursion converges linearly with rate close
    to 1, leaving an error too large for tight certificate tolerances; each
    Newton step solves the Stein equation of the residual's derivative and
    converges quadratically.
    """
    g2 = gamma * gamma
    try:
        res, s, nmat = _residual(a_k, gram, bw, g2, p)
    except np.linalg.LinAlgError:
        return p
    best_p, best_res = p, float(np.linalg.norm(res))
    for _ in range(steps):
        if best_res <= 1e-14 * (1.0 + np.linalg.norm(best_p)):
            break
        try:
            a_cl = a_k + bw @ np.linalg.solve(s, nmat)
            corr = solve_discrete_lyapunov(a_cl.T, res)
            cand = best_p + 0.5 * (corr + corr.T)
            res, s, nmat = _residual(a_k, gram, bw, g2, cand)
        except np.linalg.LinAlgError:
            break
        cand_res = float(np.linalg.norm(res))
        if cand_res >= best_res or np.linalg.eigvalsh(s).min() <= 1e-12 * g2:
            break
        best_p, best_res = cand, cand_res
    return best_p


def pi_map(triple: LiftedTriple) -> CvxTriple:
    """Change of variables (K, gamma, P) -> (gamma, K X, X) with X = (P/gamma)^{-1}.

    Requires P positive definite and gamma > 0.  State-feedback context
    only: K must have n_x columns so that Y = K X is well formed.
    """
    gamma = float(triple.gamma)
    if gamma <= 0.0:
        raise GammaNonPositive("gamma must be positive")
    p = np.asarray(triple.P, dtype=float)
    k = np.asarray(triple.K, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise DimensionMismatch("P must be square")
    if k.ndim != 2 or k.shape[1] != p.shape[0]:
        raise DimensionMismatch("K must be n_u by n_x (state feedback)")
    psym = 0.5 * (p + p.T)
    if np.linalg.eigvalsh(psym).min() <= 0.0:
        raise PNotPD("P is not positive definite")
    x = gamma * np.linalg.inv(psym)
    x = 0.5 * (x + x.T)
    return CvxTriple(gamma=gamma, Y=k @ x, X=x)


def pi_inverse(triple: CvxTriple) -> LiftedTriple:
    """Inverse change of variables: K = Y X^{-1}, P = gamma X^{-1}."""
    gamma = float(triple.gamma)
    if gamma <= 0.0:
        raise GammaNonPositive("gamma must be positive")
    x = np.asarray(triple.X, dtype=float)
    xsym = 0.5 * (x + x.T)
    if np.linalg.eigvalsh(xsym).min() <= 0.0:
        raise PNotPD("X is not positive definite")
    xinv = np.linalg.inv(xsym)
    xinv = 0.5 * (xinv + xinv.T)
    return LiftedTriple(K=np.asarray(triple.Y, float) @ xinv, gamma=gamma, P=gamma * xinv)


def lmi_matrix(plant: Plant, gamma: float, Y: np.ndarray, X: np.ndarray) -> np.ndarray:
    """The five-block LMI in the convex variables (gamma, Y, X).

    State-feedback form (C = I); affine in (gamma, Y, X).  Membership in the
    convex set mirrors membership of the lifted triple: lambda_max <= 0 (at
    tolerance) together with X > 0.
    """
    d = plant.dims
    if not np.array_equal(plant.C, np.eye(d.n_x)):
        raise DimensionMismatch("lmi_matrix requires state feedback (C = I)")
    Y = np.asarray(Y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.shape != (d.n_x, d.n_x):
        raise DimensionMismatch("X must be n_x by n_x")
    if Y.shape != (d.n_u, d.n_x):
        raise DimensionMismatch("Y must be n_u by n_x")
    gamma = float(gamma)
    n, nu, nw = d.n_x, d.n_u, d.n_w
    axby = plant.A @ X + plant.B @ Y
    qinv = np.linalg.inv(plant.Q)
    rinv = np.linalg.inv(plant.R)
    z = np.zeros
    out = np.block([
        [-X, z((n, nw)), X, axby.T, Y.T],
        [z((nw, n)), -gamma * np.eye(nw), z((nw, n)), plant.Bw.T, z((nw, nu))],
        [X, z((n, nw)), -gamma * qinv, z((n, n)), z((n, nu))],
        [axby, plant.Bw, z((n, n)), -X, z((n, nu))],
        [Y, z((nu, n)), z((nu, n)), z((nu, n)), -gamma * rinv],
    ])
    return 0.5 * (out + out.T)
