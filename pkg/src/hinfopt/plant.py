"""System data, validity checks, closed-loop construction, and built-in benchmarks.

A plant is the discrete-time system

    x[t+1] = A x[t] + B u[t] + Bw w[t],    y[t] = C x[t],

with performance weights Q (on the state) and R (on the input).  A static
gain ``K`` closes the loop through ``u = K y``, giving ``A_K = A + B K C``
and the performance output map ``C_K = [Q^{1/2}; R^{1/2} K C]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np

from .errors import (
    AlphaMissing,
    DimensionMismatch,
    NotSymmetric,
    SingularResolvent,
    SolverError,
    UnknownName,
)

__all__ = [
    "Dims",
    "Plant",
    "Gain",
    "ClosedLoop",
    "BuiltinMeta",
    "validate",
    "sqrt_psd",
    "spectral_radius",
    "is_stabilizing",
    "transfer",
    "builtin_example",
    "plant_from_dict",
    "plant_to_dict",
    "load_plant",
    "save_plant",
]

RANK_TOL = 1e-10


class Dims(NamedTuple):
    n_x: int
    n_u: int
    n_y: int
    n_w: int


def _freeze(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Plant:
    """Immutable system tuple (A, B, Bw, C, Q, R).

    Construction only enforces shape consistency and finiteness; semantic
    conditions (positive definite weights, row ranks, stabilizability) are
    reported by :func:`validate`.
    """

    A: np.ndarray
    B: np.ndarray
    Bw: np.ndarray
    C: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "Bw", "C", "Q", "R"):
            arr = _freeze(getattr(self, name))
            if arr.ndim != 2:
                raise DimensionMismatch(f"{name} must be a 2-d matrix")
            if not np.all(np.isfinite(arr)):
                raise DimensionMismatch(f"{name} has non-finite entries")
            object.__setattr__(self, name, arr)
        n_x = self.A.shape[0]
        if self.A.shape != (n_x, n_x):
            raise DimensionMismatch("A must be square")
        if self.B.shape[0] != n_x:
            raise DimensionMismatch("B must have n_x rows")
        if self.Bw.shape[0] != n_x:
            raise DimensionMismatch("Bw must have n_x rows")
        if self.C.shape[1] != n_x:
            raise DimensionMismatch("C must have n_x columns")
        if self.Q.shape != (n_x, n_x):
            raise DimensionMismatch("Q must be n_x by n_x")
        n_u = self.B.shape[1]
        if self.R.shape != (n_u, n_u):
            raise DimensionMismatch("R must be n_u by n_u")

    @property
    def dims(self) -> Dims:
        return Dims(
            n_x=self.A.shape[0],
            n_u=self.B.shape[1],
            n_y=self.C.shape[0],
            n_w=self.Bw.shape[1],
        )

    @cached_property
    def q_sqrt(self) -> np.ndarray:
        return _freeze(sqrt_psd(self.Q))

    @cached_property
    def r_sqrt(self) -> np.ndarray:
        return _freeze(sqrt_psd(self.R))


@dataclass(frozen=True)
class Gain:
    """A candidate static feedback matrix u = K y."""

    K: np.ndarray

    def __post_init__(self):
        arr = _freeze(self.K)
        if arr.ndim != 2:
            raise DimensionMismatch("K must be a 2-d matrix")
        if not np.all(np.isfinite(arr)):
            raise DimensionMismatch("K has non-finite entries")
        object.__setattr__(self, "K", arr)


def as_gain_matrix(plant: Plant, K) -> np.ndarray:
    """Normalize a Gain or array-like into an (n_u, n_y) float matrix."""
    arr = np.asarray(getattr(K, "K", K), dtype=float)
    d = plant.dims
    if arr.shape != (d.n_u, d.n_y):
        raise DimensionMismatch(
            f"gain shape {arr.shape} does not match (n_u, n_y) = ({d.n_u}, {d.n_y})"
        )
    return arr


@dataclass(frozen=True)
class ClosedLoop:
    """Closed-loop data for a (plant, gain) pair."""

    A_K: np.ndarray
    C_K: np.ndarray
    Bw: np.ndarray
    rho: float

    @classmethod
    def build(cls, plant: Plant, K) -> "ClosedLoop":
        a_k, c_k = loop_matrices(plant, K)
        return cls(A_K=a_k, C_K=c_k, Bw=plant.Bw, rho=spectral_radius(a_k))


def loop_matrices(plant: Plant, K) -> tuple[np.ndarray, np.ndarray]:
    """Return (A_K, C_K) without the eigenvalue computation."""
    K = as_gain_matrix(plant, K)
    a_k = plant.A + plant.B @ K @ plant.C
    c_k = np.vstack([plant.q_sqrt, plant.r_sqrt @ K @ plant.C])
    return a_k, c_k


def sqrt_psd(M: np.ndarray) -> np.ndarray:
    """Symmetric square root of a symmetric PSD matrix.

    Negative eigenvalues from rounding are clipped to zero.  Raises
    :class:`NotSymmetric` when the asymmetry exceeds 1e-10 relative to the
    matrix norm.
    """
    M = np.asarray(M, dtype=float)
    nrm = np.linalg.norm(M)
    if np.linalg.norm(M - M.T) > 1e-10 * nrm:
        raise NotSymmetric("matrix is not symmetric within 1e-10 relative")
    Msym = 0.5 * (M + M.T)
    w, v = np.linalg.eigh(Msym)
    s = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    return 0.5 * (s + s.T)


def spectral_radius(M: np.ndarray) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch("spectral radius needs a square matrix")
    try:
        ev = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"eigenvalue computation failed: {exc}") from exc
    return float(np.max(np.abs(ev))) if ev.size else 0.0


def is_stabilizing(plant: Plant, K) -> bool:
    """True iff the closed-loop spectral radius is strictly below 1."""
    a_k = plant.A + plant.B @ as_gain_matrix(plant, K) @ plant.C
    return spectral_radius(a_k) < 1.0


def validate(plant: Plant) -> list[str]:
    """Check the plant's standing assumptions; return all violations.

    Reports positive definiteness of Q and R, full row rank of Bw and C,
    and stabilizability of (A, B) by the eigenvector (PBH) rank test.  An
    empty list means the plant is valid.  Never raises.
    """
    violations: list[str] = []
    for name, M in (("Q", plant.Q), ("R", plant.R)):
        sym = np.linalg.norm(M - M.T) <= 1e-10 * max(np.linalg.norm(M), 1e-300)
        if not sym or np.linalg.eigvalsh(0.5 * (M + M.T)).min() <= 0.0:
            violations.append(f"{name} not positive definite")
    for name, M in (("Bw", plant.Bw), ("C", plant.C)):
        sv = np.linalg.svd(M, compute_uv=False)
        rank = int(np.sum(sv > RANK_TOL * (sv[0] if sv.size else 0.0)))
        if rank < M.shape[0]:
            violations.append(f"{name} not full row rank")
    n_x = plant.dims.n_x
    for lam in np.linalg.eigvals(plant.A):
        if abs(lam) >= 1.0:
            pbh = np.hstack([plant.A - lam * np.eye(n_x), plant.B.astype(complex)])
            sv = np.linalg.svd(pbh, compute_uv=False)
            if np.sum(sv > RANK_TOL * sv[0]) < n_x:
                violations.append(
                    f"(A,B) not stabilizable: PBH rank deficient at eigenvalue {lam:.6g}"
                )
    return violations


def transfer(plant: Plant, K, omega: float) -> np.ndarray:
    """Closed-loop frequency response C_K (e^{j omega} I - A_K)^{-1} Bw.

    Only invertibility of the resolvent is required, so the gain need not be
    stabilizing.  Raises :class:`SingularResolvent` when e^{j omega} is an
    eigenvalue of A_K at tolerance 1e-12.
    """
    a_k, c_k = loop_matrices(plant, K)
    n = a_k.shape[0]
    M = np.exp(1j * omega) * np.eye(n) - a_k
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise SingularResolvent(f"resolvent singular at omega = {omega!r}")
    return c_k @ np.linalg.solve(M, plant.Bw.astype(complex))


@dataclass(frozen=True)
class BuiltinMeta:
    """Known facts about a built-in benchmark system."""

    name: str
    alpha: Optional[float]
    j_star: Optional[float]
    optimal_gain: Optional[np.ndarray]
    scan_box: tuple[tuple[float, float], ...]


def builtin_example(name: str, alpha: Optional[float] = None) -> tuple[Plant, BuiltinMeta]:
    """Return a built-in benchmark plant and its metadata.

    ``example1`` is the scalar integrator with Q = R = 1 (best cost sqrt(2)
    at k = -1).  ``example2`` is the unstable two-state system with full
    state feedback and best cost approximately 8.327.  ``example3`` is the
    alpha-parameterized three-state output-feedback system whose stabilizing
    region is disconnected for alpha around 0.05-0.13 and merges by 0.14;
    it requires ``alpha``.
    """
    if name == "example1":
        plant = Plant(
            A=[[1.0]], B=[[1.0]], Bw=[[1.0]], C=[[1.0]], Q=[[1.0]], R=[[1.0]]
        )
        meta = BuiltinMeta(
            name=name,
            alpha=None,
            j_star=float(np.sqrt(2.0)),
            optimal_gain=_freeze([[-1.0]]),
            scan_box=((-1.99, -0.01),),
        )
        return plant, meta
    if name == "example2":
        plant = Plant(
            A=[[0.0, 2.0], [4.0, 0.2]],
            B=[[1.0], [0.0]],
            Bw=np.eye(2),
            C=np.eye(2),
            Q=np.diag([1.0, 1e-3]),
            R=[[1.0]],
        )
        meta = BuiltinMeta(
            name=name,
            alpha=None,
            j_star=8.327,
            optimal_gain=None,
            scan_box=((-6.0, 2.0), (-4.0, 2.0)),
        )
        return plant, meta
    if name == "example3":
        if alpha is None:
            raise AlphaMissing("example3 requires alpha")
        plant = Plant(
            A=[[1.0 - alpha, -0.1, -0.1], [0.1, 1.0, 0.0], [0.0, 0.1, 1.0]],
            B=[[0.1], [0.0], [0.0]],
            Bw=np.eye(3),
            C=[[0.0, 1.0, 1.0], [1.0, -1.0, 1.0]],
            Q=0.01 * np.eye(3),
            R=[[0.01]],
        )
        meta = BuiltinMeta(
            name=name,
            alpha=float(alpha),
            j_star=None,
            optimal_gain=None,
            scan_box=((-10.0, 2.0), (-4.0, 4.0)),
        )
        return plant, meta
    raise UnknownName(f"unknown builtin example {name!r}")


# JSON interchange: nested row-major arrays, IEEE-754 doubles.

def plant_to_dict(plant: Plant) -> dict:
    return {
        "A": plant.A.tolist(),
        "B": plant.B.tolist(),
        "Bw": plant.Bw.tolist(),
        "C": plant.C.tolist(),
        "Q": plant.Q.tolist(),
        "R": plant.R.tolist(),
    }


def plant_from_dict(data: dict) -> Plant:
    missing = [k for k in ("A", "B", "Bw", "C", "Q", "R") if k not in data]
    if missing:
        raise DimensionMismatch(f"plant JSON missing keys: {missing}")
    return Plant(
        A=data["A"], B=data["B"], Bw=data["Bw"], C=data["C"], Q=data["Q"], R=data["R"]
    )


def load_plant(path) -> Plant:
    with open(path, "r", encoding="utf-8") as fh:
        return plant_from_dict(json.load(fh))


def save_plant(plant: Plant, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(plant_to_dict(plant), fh, indent=2)
        fh.write("\n")
