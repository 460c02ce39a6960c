"""H-infinity norm oracle.

The primary evaluator sweeps sigma_max of the closed-loop frequency response
over a uniform grid on [0, 2*pi), refines every strict local maximum by
golden-section search, and reports the refined global maximum together with
the set of active frequencies and their singular triples (the raw material
for subgradients).  A Riccati-based bisection provides an independent global
cross-check that cannot miss narrow peaks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels as kernels
from ._kernels import pure as pure_kernels
from .errors import NoUpperBound, NotStabilizing, SvdFailure
from .plant import Plant, loop_matrices, transfer

__all__ = ["SingularTriple", "HinfResult", "sigma_max_triple", "hinf_norm", "hinf_bisection"]

FLAT_REL_TOL = 1e-12


@dataclass(frozen=True)
class SingularTriple:
    """Largest singular value with unit singular vectors, phase-normalized."""

    sigma: float
    u: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class HinfResult:
    """H-infinity value plus the active frequencies that attain it."""

    value: float
    active: list[tuple[float, SingularTriple]]
    grid_size: int
    refinement_tol: float
    flat: bool = False

    @property
    def active_omegas(self) -> list[float]:
        return [om for om, _ in self.active]


@lru_cache(maxsize=16)
def _half_grid(grid_size: int) -> np.ndarray:
    """Unit-circle samples for the first half of the frequency grid.

    sigma(2*pi - w) = sigma(w) for real state-space data, so only
    floor(n/2) + 1 points need evaluation; the sweep mirrors the rest.
    """
    nhalf = grid_size // 2 if grid_size % 2 == 0 else (grid_size - 1) // 2
    om = 2.0 * np.pi * np.arange(nhalf + 1) / grid_size
    return np.exp(1j * om)


@dataclass(frozen=True)
class SweepResult:
    """Post-processed output of the grid sweep for one (plant, gain)."""

    rho: float
    value: float = np.nan
    grid_max: float = np.nan
    grid_min: float = np.nan
    sigma0: float = np.nan
    argmax_omega: float = 0.0
    peak_omegas: np.ndarray = field(default_factory=lambda: np.empty(0))
    peak_sigmas: np.ndarray = field(default_factory=lambda: np.empty(0))
    flat: bool = False


def sweep_closed_loop(a_k, c_k, bw, grid_size=4096, refine_tol=1e-10) -> SweepResult:
    """Run the kernel sweep and dedupe/sort the refined maxima."""
    zs = _half_grid(int(grid_size))
    rho, gmax, gmin, sig0, argmax_om, rom, rsig = kernels.sweep(
        a_k, c_k, bw, zs, int(grid_size), float(refine_tol)
    )
    if rho >= 1.0:
        return SweepResult(rho=rho)
    flat = (gmax - gmin) <= FLAT_REL_TOL * gmax
    if flat or rom.size == 0:
        return SweepResult(
            rho=rho, value=gmax, grid_max=gmax, grid_min=gmin, sigma0=sig0,
            argmax_omega=argmax_om, flat=flat,
        )

    two_pi = 2.0 * np.pi
    tol = max(16.0 * refine_tol, 1e-9)
    om = np.mod(rom, two_pi)
    om[om > two_pi - tol] = 0.0
    order = np.argsort(om, kind="stable")
    om, sig = om[order], rsig[order]
    keep_om: list[float] = []
    keep_sig: list[float] = []
    for o, s in zip(om, sig):
        if keep_om and o - keep_om[-1] < tol:
            if s > keep_sig[-1]:
                keep_om[-1], keep_sig[-1] = o, s
        else:
            keep_om.append(float(o))
            keep_sig.append(float(s))
    # Cyclic wrap: a peak just below 2*pi duplicates one at ~0.
    if len(keep_om) > 1 and (two_pi - keep_om[-1]) + keep_om[0] < tol:
        if keep_sig[-1] > keep_sig[0]:
            keep_sig[0] = keep_sig[-1]
        keep_om.pop()
        keep_sig.pop()
    peaks_om = np.asarray(keep_om)
    peaks_sig = np.asarray(keep_sig)
    value = max(gmax, float(peaks_sig.max()))
    return SweepResult(
        rho=rho, value=value, grid_max=gmax, grid_min=gmin, sigma0=sig0,
        argmax_omega=argmax_om, peak_omegas=peaks_om, peak_sigmas=peaks_sig, flat=False,
    )


def active_candidates(sr: SweepResult, delta_active: float) -> list[tuple[float, float]]:
    """(omega, sigma) pairs within delta_active of the sweep maximum."""
    if sr.flat:
        return [(0.0, sr.sigma0)]
    if sr.peak_omegas.size == 0:
        return [(float(sr.argmax_omega), sr.grid_max)]
    cut = sr.value * (1.0 - delta_active)
    out = [(float(o), float(s)) for o, s in zip(sr.peak_omegas, sr.peak_sigmas) if s >= cut]
    return out or [(float(sr.argmax_omega), sr.grid_max)]


def sigma_max_triple(t: np.ndarray) -> SingularTriple:
    """Largest singular value and vectors of a complex matrix.

    The phase is normalized so the first entry of u with modulus above
    1e-12 is real nonnegative, making downstream gradients reproducible.
    """
    t = np.asarray(t, dtype=complex)
    if not np.all(np.isfinite(t.real)) or not np.all(np.isfinite(t.imag)):
        raise SvdFailure("matrix has non-finite entries")
    try:
        sigma, u, v = pure_kernels.top_triple(t)
    except RuntimeError as exc:
        raise SvdFailure(str(exc)) from exc
    return SingularTriple(sigma=sigma, u=u, v=v)


def _require_stabilizing(rho: float) -> None:
    if rho >= 1.0:
        raise NotStabilizing(
            f"closed-loop spectral radius {rho:.6g} >= 1; the cost is +inf outside "
            "the stabilizing set"
        )


def hinf_norm(
    plant: Plant,
    K,
    *,
    grid_size: int = 4096,
    refine_tol: float = 1e-10,
    delta_active: float = 1e-6,
) -> HinfResult:
    """Peak of sigma_max(T(K, omega)) over omega with the active set.

    Evaluates the response on a uniform grid, refines every strict local
    maximum (cyclic neighbor comparison) by golden-section search to bracket
    width ``refine_tol``, and reports every refined maximum within relative
    ``delta_active`` of the peak.  A response that is constant in omega
    (relative variation below 1e-12) is flagged ``flat`` and reported with
    the single representative frequency 0.

    Raises :class:`NotStabilizing` when the gain is infeasible; the cost is
    +inf there and callers must treat it as such.
    """
    a_k, c_k = loop_matrices(plant, K)
    sr = sweep_closed_loop(a_k, c_k, plant.Bw, grid_size, refine_tol)
    _require_stabilizing(sr.rho)
    cands = active_candidates(sr, delta_active)
    triples = [(om, sigma_max_triple(transfer(plant, K, om))) for om, _ in cands]
    value = max(tr.sigma for _, tr in triples)
    cut = value * (1.0 - delta_active)
    active = [(om, tr) for om, tr in triples if tr.sigma >= cut]
    active.sort(key=lambda item: item[0])
    return HinfResult(
        value=value,
        active=active,
        grid_size=int(grid_size),
        refinement_tol=float(refine_tol),
        flat=sr.flat,
    )


def hinf_bisection(plant: Plant, K, tol: float = 1e-8, *, feas_max_iter: int = 200000) -> float:
    """Bisection on gamma using the Riccati feasibility certificate.

    Independent of the grid sweep: each step asks whether gamma exceeds the
    norm by running the fixed-point certificate, so narrow peaks that a grid
    could miss cannot fool it.  The iteration budget per feasibility test is
    raised well above the certificate's default because the fixed point
    slows down as gamma approaches the norm from above.
    """
    from .certify import riccati_fixed_point

    a_k, c_k = loop_matrices(plant, K)
    sr0 = np.linalg.svd(np.asarray(transfer(plant, K, 0.0)), compute_uv=False)
    lo = float(sr0[0])

    def feasible(gamma: float) -> bool:
        res = riccati_fixed_point(plant, K, gamma, max_iter=feas_max_iter)
        return res.feasible

    hi = max(2.0 * lo, 1.0)
    while not feasible(hi):
        hi *= 2.0
        if hi > 1e12:
            raise NoUpperBound("no feasible gamma found below 1e12")
    while hi - lo > tol * (1.0 + lo):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
