"""Subgradient method with iterate logging and the Moreau-envelope estimator.

The update is K <- K - alpha_t G_t with G_t a Clarke subgradient.  Iterates
that leave the stabilizing set are reported as a first-class status (the
method does not project or backtrack); stationarity is measured through the
gradient of the Moreau envelope, estimated by solving the proximal
subproblem with the strongly convex subgradient scheme.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import EmptyLog, K0NotStabilizing, RhoTooSmall
from .plant import Plant, as_gain_matrix, is_stabilizing
from .subgrad import _clarke_fast

__all__ = [
    "ConstantStep",
    "SqrtHorizonStep",
    "StepSchedule",
    "RunLog",
    "MoreauEstimate",
    "RunSummary",
    "subgradient_method",
    "moreau_gradient",
    "summarize_run",
    "write_run_csv",
]


@dataclass(frozen=True)
class ConstantStep:
    """alpha_t = alpha for every t."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ValueError("step size must be strictly positive")

    def step(self, t: int) -> float:
        return self.alpha

    def describe(self) -> dict:
        return {"kind": "constant", "alpha": self.alpha}


@dataclass(frozen=True)
class SqrtHorizonStep:
    """alpha_t = beta / sqrt(T + 1) for a horizon of T steps."""

    beta: float
    horizon: int

    def __post_init__(self):
        if not self.beta > 0.0:
            raise ValueError("beta must be strictly positive")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")

    def step(self, t: int) -> float:
        return self.beta / np.sqrt(self.horizon + 1.0)

    def describe(self) -> dict:
        return {"kind": "sqrt_horizon", "beta": self.beta, "T": self.horizon}


StepSchedule = Union[ConstantStep, SqrtHorizonStep]


@dataclass(frozen=True)
class MoreauEstimate:
    """Proximal point and envelope gradient at one anchor gain."""

    rho: float
    K_hat: np.ndarray
    grad: np.ndarray
    inner_iters: int
    inner_gap: float

    @property
    def grad_norm(self) -> float:
        return float(np.linalg.norm(self.grad))


@dataclass
class RunLog:
    """Per-iteration trace of one subgradient run."""

    K_path: np.ndarray          # (n_logged, n_u, n_y)
    J: np.ndarray               # (n_logged,)
    grad_norm: np.ndarray
    alpha: np.ndarray
    rho_cl: np.ndarray          # closed-loop spectral radius
    stabilizing: np.ndarray     # bool
    status: str                 # "completed" | "left_feasible_set" | "diverged"
    status_t: Optional[int]
    best_index: int
    final_K: np.ndarray
    moreau: Optional[list[tuple[int, float]]] = None
    rho_moreau: Optional[float] = None
    m_hat: Optional[float] = None
    schedule: Optional[dict] = None

    def __len__(self) -> int:
        return int(self.J.shape[0])

    @property
    def iterates(self):
        """Tuples (t, K_t, J_t, grad_norm_t, alpha_t, stabilizing_t)."""
        return [
            (t, self.K_path[t], float(self.J[t]), float(self.grad_norm[t]),
             float(self.alpha[t]), bool(self.stabilizing[t]))
            for t in range(len(self))
        ]


def subgradient_method(
    plant: Plant,
    K0,
    schedule: StepSchedule,
    T: int,
    *,
    log_moreau_every: int = 0,
    rho: Optional[float] = None,
    m_hat: Optional[float] = None,
    divergence_cap: float = 1e8,
    hinf_opts: Optional[dict] = None,
) -> RunLog:
    """Run T subgradient iterations from K0, logging every iterate.

    Halts with status ``left_feasible_set`` if an iterate stops being
    stabilizing (reported, not repaired) and ``diverged`` if the cost
    exceeds ``divergence_cap``.  When ``log_moreau_every > 0`` the Moreau
    envelope gradient is estimated at every that-many-th logged iterate
    after the main loop (requires ``m_hat``; ``rho`` defaults to
    ``2 * m_hat``, floored at 1.0 for convex samples where m_hat = 0).
    Fully deterministic.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    K = as_gain_matrix(plant, K0).copy()
    if not is_stabilizing(plant, K):
        raise K0NotStabilizing("initial gain is not stabilizing")
    opts = dict(hinf_opts or {})
    if log_moreau_every > 0:
        if m_hat is None:
            raise ValueError("moreau logging requires m_hat (weak-convexity estimate)")
        if rho is None:
            rho = 2.0 * m_hat if m_hat > 0.0 else 1.0

    n_u, n_y = K.shape
    k_path = np.empty((T, n_u, n_y))
    j_log = np.empty(T)
    g_log = np.empty(T)
    a_log = np.empty(T)
    r_log = np.empty(T)
    s_log = np.zeros(T, dtype=bool)
    status = "completed"
    status_t: Optional[int] = None
    n_logged = 0

    for t in range(T):
        k_path[t] = K
        j, grad, _, _, _, _, rho_cl = _clarke_fast(plant, K, **opts)
        r_log[t] = rho_cl
        n_logged = t + 1
        if not np.isfinite(j):
            j_log[t] = np.inf
            g_log[t] = np.nan
            a_log[t] = schedule.step(t)
            s_log[t] = False
            status, status_t = "left_feasible_set", t
            break
        alpha_t = schedule.step(t)
        j_log[t] = j
        g_log[t] = float(np.linalg.norm(grad))
        a_log[t] = alpha_t
        s_log[t] = True
        if j > divergence_cap:
            status, status_t = "diverged", t
            break
        K = K - alpha_t * grad

    k_path = k_path[:n_logged]
    j_log = j_log[:n_logged]
    g_log = g_log[:n_logged]
    a_log = a_log[:n_logged]
    r_log = r_log[:n_logged]
    s_log = s_log[:n_logged]

    finite = np.where(s_log, j_log, np.inf)
    best_index = int(np.argmin(finite))

    moreau = None
    if log_moreau_every > 0:
        moreau = []
        for t in range(0, n_logged, log_moreau_every):
            if not s_log[t]:
                continue
            est = moreau_gradient(
                plant, k_path[t], rho, m_hat=m_hat, hinf_opts=opts
            )
            moreau.append((t, est.grad_norm))

    return RunLog(
        K_path=k_path, J=j_log, grad_norm=g_log, alpha=a_log, rho_cl=r_log,
        stabilizing=s_log, status=status, status_t=status_t, best_index=best_index,
        final_K=K, moreau=moreau, rho_moreau=rho if log_moreau_every > 0 else rho,
        m_hat=m_hat, schedule=schedule.describe(),
    )


def moreau_gradient(
    plant: Plant,
    K,
    rho: float,
    *,
    m_hat: float,
    max_inner: int = 500,
    tol: float = 1e-8,
    hinf_opts: Optional[dict] = None,
    oracle: Optional[Callable[[np.ndarray], tuple[float, np.ndarray]]] = None,
) -> MoreauEstimate:
    """Estimate the Moreau envelope gradient rho * (K - K_hat) at K.

    Solves min_M J(M) + (rho/2) ||M - K||_F^2 with the subgradient scheme
    for strongly convex objectives: steps 2 / ((rho - m_hat) (i + 2)),
    weighted iterate averaging, started at K.  Stops after ``max_inner``
    iterations or when the proximal objective stops improving by more than
    ``tol`` over a 10-iteration window.  ``oracle`` may replace the cost
    with a callable M -> (J(M), G(M)) (testing seam); by default J and its
    Clarke subgradient are used and proposals that would leave the
    stabilizing set shrink their step.
    """
    if not rho > m_hat:
        raise RhoTooSmall(f"rho = {rho!r} must exceed m_hat = {m_hat!r}")
    anchor = as_gain_matrix(plant, K).copy() if oracle is None else np.asarray(K, float).copy()
    opts = dict(hinf_opts or {})

    if oracle is None:
        def oracle(m):
            j, grad, _, _, _, _, _ = _clarke_fast(plant, m, **opts)
            return j, grad

    def prox_value(j: float, m: np.ndarray) -> float:
        return j + 0.5 * rho * float(np.sum((m - anchor) ** 2))

    cur = anchor.copy()
    j_cur, g_cur = oracle(cur)
    if not np.isfinite(j_cur):
        raise K0NotStabilizing("anchor gain is not stabilizing")
    best_val = prox_value(j_cur, cur)
    best_point = cur.copy()

    # Warm start: probe a few small steps along the steepest descent ray.
    # The strongly convex schedule opens with steps of size ~ 1/(rho - m_hat),
    # which overshoots anchors that are already near-stationary; the probe
    # resolves improvements at much smaller scales.  Deterministic.
    gnorm = float(np.linalg.norm(g_cur))
    if gnorm > 0.0:
        direction = g_cur / gnorm
        for scale in (1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 0.3, 1.0):
            cand = anchor - scale * direction
            j_cand, g_cand = oracle(cand)
            if not np.isfinite(j_cand):
                continue
            val = prox_value(j_cand, cand)
            if val < best_val:
                best_val = val
                best_point = cand.copy()
                cur, j_cur, g_cur = cand, j_cand, g_cand

    acc = np.zeros_like(cur)
    wsum = 0.0
    window: list[float] = [best_val]
    gap = np.inf
    iters = 0

    for i in range(max_inner):
        iters = i + 1
        subg = g_cur + rho * (cur - anchor)
        step = 2.0 / ((rho - m_hat) * (i + 2))
        nxt = cur - step * subg
        j_nxt, g_nxt = oracle(nxt)
        shrink = 0
        while not np.isfinite(j_nxt) and shrink < 60:
            step *= 0.5
            nxt = cur - step * subg
            j_nxt, g_nxt = oracle(nxt)
            shrink += 1
        if not np.isfinite(j_nxt):
            break
        cur, j_cur, g_cur = nxt, j_nxt, g_nxt
        val = prox_value(j_cur, cur)
        if val < best_val:
            best_val = val
            best_point = cur.copy()
        w = i + 1.0
        acc += w * cur
        wsum += w
        window.append(best_val)
        if len(window) > 10:
            gap = window[-11] - window[-1]
            if gap < tol * (1.0 + abs(best_val)):
                break

    if wsum > 0.0:
        avg = acc / wsum
        j_avg, _ = oracle(avg)
        if np.isfinite(j_avg) and prox_value(j_avg, avg) < best_val:
            best_val = prox_value(j_avg, avg)
            best_point = avg

    k_hat = best_point
    grad = rho * (anchor - k_hat)
    return MoreauEstimate(
        rho=float(rho), K_hat=k_hat, grad=grad, inner_iters=iters,
        inner_gap=float(gap) if np.isfinite(gap) else float("nan"),
    )


@dataclass(frozen=True)
class RunSummary:
    min_J: float
    argmin_t: int
    min_grad_norm: float
    min_moreau_grad: Optional[float]
    steps_to_tolerance: dict = field(default_factory=dict)


def summarize_run(log: RunLog, eps_table=(1e-1, 1e-2, 1e-3)) -> RunSummary:
    """Running minima and first-hit times of the stationarity measure."""
    if len(log) == 0:
        raise EmptyLog("cannot summarize an empty run log")
    finite = np.where(log.stabilizing, log.J, np.inf)
    min_j = float(finite.min())
    argmin_t = int(np.argmin(finite))
    gn = log.grad_norm[np.isfinite(log.grad_norm)]
    min_grad = float(gn.min()) if gn.size else float("nan")
    min_moreau = None
    steps: dict = {}
    if log.moreau:
        vals = np.array([v for _, v in log.moreau])
        ts = np.array([t for t, _ in log.moreau])
        running = np.minimum.accumulate(vals)
        min_moreau = float(running[-1])
        for eps in eps_table:
            hits = np.flatnonzero(running <= eps)
            steps[float(eps)] = int(ts[hits[0]]) if hits.size else None
    return RunSummary(
        min_J=min_j, argmin_t=argmin_t, min_grad_norm=min_grad,
        min_moreau_grad=min_moreau, steps_to_tolerance=steps,
    )


def write_run_csv(log: RunLog, path) -> None:
    """Per-iteration CSV: t, J, grad_norm, alpha, rho_spectral_closed_loop,
    stabilizing, moreau_grad_norm (empty when not sampled)."""
    moreau_at = dict(log.moreau or [])

    def fmt(x: float) -> str:
        return repr(float(x))

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "J", "grad_norm", "alpha", "rho_spectral_closed_loop",
                    "stabilizing", "moreau_grad_norm"])
        for t in range(len(log)):
            w.writerow([
                t,
                fmt(log.J[t]),
                fmt(log.grad_norm[t]),
                fmt(log.alpha[t]),
                fmt(log.rho_cl[t]),
                int(bool(log.stabilizing[t])),
                fmt(moreau_at[t]) if t in moreau_at else "",
            ])
