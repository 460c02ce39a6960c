"""Pure-NumPy implementations of the numerical kernels.

This module mirrors the compiled extension ``hinfopt._kernels._speedups``
function-for-function and is selected at import when the extension is not
built (or when ``HINFOPT_BACKEND=python``).  The kernels operate on raw
closed-loop matrices so they stay independent of the domain types.

Kernel contract (shared with the compiled backend):

``sweep(a_k, c_k, bw, zs_half, grid_size, refine_tol, max_peaks)``
    Evaluate sigma_max of the frequency response on a uniform grid over
    [0, 2*pi) (exploiting sigma(2*pi - w) = sigma(w) for real data), locate
    strict local maxima by cyclic neighbor comparison, and refine each by
    golden-section search to the requested bracket width.  Returns
    ``(rho, grid_max, grid_min, sigma0, argmax_omega, peak_om, peak_sig)``
    with raw (unsorted, undeduplicated) refined peaks.  If ``rho >= 1`` the
    sweep is skipped and only ``rho`` is meaningful.

``clarke_at(a_k, c_k, bw, b, c, rsqrt, omega)``
    Top singular triple of the response at one frequency plus the gradient
    of the smooth component Re[v^H T(K, omega) u] with respect to K.
    Returns ``(sigma, u, v, grad)``.

``riccati(a_k, gram, bw, gamma, max_iter, tol)``
    Fixed-point iteration for the gamma-feasibility certificate, from P = 0.
    Returns ``(status, P, iterations)`` with status 0 = converged,
    1 = gamma**2 I - Bw' P Bw lost positive definiteness, 2 = iteration
    budget exhausted.
"""

from __future__ import annotations

import numpy as np

INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0
INV_PHI2 = (3.0 - np.sqrt(5.0)) / 2.0

# Diagonalization is trusted only when it reconstructs A_K to this tolerance;
# otherwise each frequency falls back to a dense resolvent solve.
_EIG_RESIDUAL_TOL = 1e-9


class LoopData:
    """Reusable per-closed-loop data: eigenstructure or LU fallback."""

    __slots__ = ("a_k", "c_k", "bw", "n", "nz", "nw", "rho", "use_diag", "lam", "ckv", "wb")

    def __init__(self, a_k, c_k, bw):
        self.a_k = np.ascontiguousarray(a_k, dtype=float)
        self.c_k = np.ascontiguousarray(c_k, dtype=float)
        self.bw = np.ascontiguousarray(bw, dtype=float)
        self.n = self.a_k.shape[0]
        self.nz = self.c_k.shape[0]
        self.nw = self.bw.shape[1]
        lam, vec = np.linalg.eig(self.a_k)
        self.lam = lam.astype(complex)
        self.rho = float(np.max(np.abs(lam))) if lam.size else 0.0
        self.use_diag = False
        self.ckv = None
        self.wb = None
        try:
            w = np.linalg.inv(vec)
        except np.linalg.LinAlgError:
            return
        recon = (vec * lam) @ w
        if np.max(np.abs(recon - self.a_k)) <= _EIG_RESIDUAL_TOL * (1.0 + np.max(np.abs(self.a_k))):
            self.use_diag = True
            self.ckv = self.c_k.astype(complex) @ vec
            self.wb = w @ self.bw.astype(complex)


def _response_many(ld: LoopData, zs: np.ndarray) -> np.ndarray:
    """Stack of frequency responses T(omega) for z = e^{j omega} values."""
    if ld.use_diag:
        scal = 1.0 / (zs[:, None] - ld.lam[None, :])
        return np.einsum("pi,fi,iw->fpw", ld.ckv, scal, ld.wb, optimize=True)
    eye = np.eye(ld.n, dtype=complex)
    m = zs[:, None, None] * eye - ld.a_k[None, :, :]
    x = np.linalg.solve(m, np.broadcast_to(ld.bw.astype(complex), (len(zs), ld.n, ld.nw)))
    return ld.c_k @ x


def _sigma_from_responses(t: np.ndarray) -> np.ndarray:
    """Largest singular value of each matrix in a stack."""
    nz, nw = t.shape[1], t.shape[2]
    m = min(nz, nw)
    if m == 1:
        return np.sqrt(np.sum(np.abs(t) ** 2, axis=(1, 2)))
    if m == 2:
        if nw <= nz:
            g = np.conj(np.transpose(t, (0, 2, 1))) @ t
        else:
            g = t @ np.conj(np.transpose(t, (0, 2, 1)))
        a = g[:, 0, 0].real
        d = g[:, 1, 1].real
        off2 = np.abs(g[:, 0, 1]) ** 2
        lam = 0.5 * (a + d) + np.sqrt(np.maximum(0.25 * (a - d) ** 2 + off2, 0.0))
        return np.sqrt(np.maximum(lam, 0.0))
    return np.linalg.svd(t, compute_uv=False)[:, 0]


def sigma_many(ld: LoopData, omegas: np.ndarray) -> np.ndarray:
    return _sigma_from_responses(_response_many(ld, np.exp(1j * np.asarray(omegas, float))))


def sigma_at(a_k, c_k, bw, omega: float) -> float:
    """Single-frequency sigma_max; convenience wrapper for tests."""
    ld = LoopData(a_k, c_k, bw)
    return float(sigma_many(ld, np.array([float(omega)]))[0])


def _golden_max(fun, lo, hi, tol, cap=90):
    """Vectorized golden-section maximization on brackets [lo, hi]."""
    lo = np.asarray(lo, float).copy()
    hi = np.asarray(hi, float).copy()
    h = hi - lo
    width = float(np.max(h))
    niter = 1
    if width > tol:
        niter = int(np.ceil(np.log(tol / width) / np.log(INV_PHI)))
    niter = int(np.clip(niter, 1, cap))
    c = lo + INV_PHI2 * h
    d = lo + INV_PHI * h
    yc = fun(c)
    yd = fun(d)
    for _ in range(niter):
        upper = yc > yd
        lo = np.where(upper, lo, c)
        hi = np.where(upper, d, hi)
        h = hi - lo
        c = lo + INV_PHI2 * h
        d = lo + INV_PHI * h
        # Golden ratio makes one of (c, d) coincide with a previous point,
        # so only the other needs a fresh evaluation.
        x_new = np.where(upper, c, d)
        y_new = fun(x_new)
        yc, yd = np.where(upper, y_new, yd), np.where(upper, yc, y_new)
    take_c = yc >= yd
    return np.where(take_c, c, d), np.where(take_c, yc, yd)


def sweep(a_k, c_k, bw, zs_half, grid_size, refine_tol, max_peaks=64):
    ld = LoopData(a_k, c_k, bw)
    empty = np.empty(0)
    if ld.rho >= 1.0:
        return ld.rho, np.nan, np.nan, np.nan, 0.0, empty, empty

    nhalf = len(zs_half) - 1
    sig_half = _sigma_from_responses(_response_many(ld, np.asarray(zs_half)))
    n = int(grid_size)
    sig = np.empty(n)
    sig[: nhalf + 1] = sig_half
    tail = n - nhalf - 1
    if tail > 0:
        sig[nhalf + 1:] = sig_half[1: tail + 1][::-1]

    grid_max = float(sig.max())
    grid_min = float(sig.min())
    sigma0 = float(sig[0])
    argmax_om = 2.0 * np.pi * int(np.argmax(sig)) / n
    if grid_max - grid_min <= 1e-12 * grid_max:
        return ld.rho, grid_max, grid_min, sigma0, argmax_om, empty, empty

    prev = np.roll(sig, 1)
    nxt = np.roll(sig, -1)
    idx = np.flatnonzero((sig > prev) & (sig >= nxt))
    if idx.size == 0:
        return ld.rho, grid_max, grid_min, sigma0, argmax_om, empty, empty
    if idx.size > max_peaks:
        idx = idx[np.argsort(sig[idx])[::-1][:max_peaks]]

    dom = 2.0 * np.pi / n
    om = dom * idx
    x_ref, y_ref = _golden_max(lambda x: sigma_many(ld, x), om - dom, om + dom, refine_tol)
    # The bracket center is on the grid; never report less than its value.
    center_better = sig[idx] > y_ref
    x_ref = np.where(center_better, om, x_ref)
    y_ref = np.where(center_better, sig[idx], y_ref)
    return ld.rho, grid_max, grid_min, sigma0, argmax_om, x_ref, y_ref


def phi_gradient_core(a_k, c_k, bw, b, c, rsqrt, omega, u, v):
    """Gradient in K of Re[v^H T(K, omega) u] for fixed unit vectors u, v.

    Uses dT = dC_K Phi Bw + C_K Phi B dK C Phi Bw with
    Phi = (e^{j omega} I - A_K)^{-1} and dC_K = [0; R^{1/2} dK C].
    """
    n = a_k.shape[0]
    z = np.exp(1j * float(omega))
    m = z * np.eye(n) - a_k
    u = np.asarray(u, complex).ravel()
    v = np.asarray(v, complex).ravel()
    phi_bw_u = np.linalg.solve(m, bw @ u)
    b_vec = c @ phi_bw_u
    r = c_k.T @ v
    phi_h_r = np.linalg.solve(m.conj().T, r)
    c_vec = b.T @ phi_h_r
    a_vec = rsqrt @ v[n:]
    return np.real(np.outer(np.conj(a_vec + c_vec), b_vec))


def top_triple(t: np.ndarray):
    """Top singular triple of a matrix with deterministic phase.

    The common phase is chosen so the first entry of u with modulus above
    1e-12 is real nonnegative.
    """
    try:
        uu, ss, vh = np.linalg.svd(t)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK hiccup
        raise RuntimeError(f"svd failed: {exc}") from exc
    sigma = float(ss[0])
    u = np.conj(vh[0])
    v = uu[:, 0]
    nz = np.flatnonzero(np.abs(u) > 1e-12)
    if nz.size:
        phase = u[nz[0]] / abs(u[nz[0]])
        u = u * np.conj(phase)
        v = v * np.conj(phase)
    return sigma, u, v


def clarke_at(a_k, c_k, bw, b, c, rsqrt, omega):
    n = a_k.shape[0]
    z = np.exp(1j * float(omega))
    m = z * np.eye(n) - a_k
    t = c_k @ np.linalg.solve(m, bw.astype(complex))
    sigma, u, v = top_triple(t)
    grad = phi_gradient_core(a_k, c_k, bw, b, c, rsqrt, omega, u, v)
    return sigma, u, v, grad


def riccati(a_k, gram, bw, gamma, max_iter, tol):
    n = a_k.shape[0]
    nw = bw.shape[1]
    g2 = float(gamma) ** 2
    thr = 1e-12 * g2
    eye_w = np.eye(nw)
    p = np.zeros((n, n))
    p_norm = 0.0
    for i in range(1, int(max_iter) + 1):
        pb = p @ bw
        s = g2 * eye_w - bw.T @ pb
        s = 0.5 * (s + s.T)
        try:
            np.linalg.cholesky(s - thr * eye_w)
        except np.linalg.LinAlgError:
            return 1, p, i
        nmat = pb.T @ a_k
        x = np.linalg.solve(s, nmat)
        p_next = a_k.T @ (p @ a_k) + nmat.T @ x + gram
        p_next = 0.5 * (p_next + p_next.T)
        delta = float(np.linalg.norm(p_next - p))
        if delta <= tol * (1.0 + p_norm):
            return 0, p_next, i
        p = p_next
        p_norm = float(np.linalg.norm(p))
    return 2, p, int(max_iter)


def riccati_history(a_k, gram, bw, gamma, max_iter, tol):
    """Like :func:`riccati` but also returns the full iterate list."""
    n = a_k.shape[0]
    nw = bw.shape[1]
    g2 = float(gamma) ** 2
    thr = 1e-12 * g2
    eye_w = np.eye(nw)
    p = np.zeros((n, n))
    hist = [p.copy()]
    for i in range(1, int(max_iter) + 1):
        pb = p @ bw
        s = g2 * eye_w - bw.T @ pb
        s = 0.5 * (s + s.T)
        try:
            np.linalg.cholesky(s - thr * eye_w)
        except np.linalg.LinAlgError:
            return 1, p, i, hist
        nmat = pb.T @ a_k
        x = np.linalg.solve(s, nmat)
        p_next = a_k.T @ (p @ a_k) + nmat.T @ x + gram
        p_next = 0.5 * (p_next + p_next.T)
        hist.append(p_next.copy())
        if float(np.linalg.norm(p_next - p)) <= tol * (1.0 + np.linalg.norm(p)):
            return 0, p_next, i, hist
        p = p_next
    return 2, p, int(max_iter), hist
