# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: frequency sweep with golden-section refinement,
single-frequency subgradient evaluation, and the Riccati feasibility loop.

Mirrors hinfopt._kernels.pure function-for-function; see that module for the
shared contract.  LAPACK is reached through scipy's Cython bindings, so the
extension links against nothing beyond what scipy already ships.  The sweep
inner loop uses split real/imaginary arithmetic: the C99 complex division
and the NaN-checked multiply helpers are too slow for a per-frequency loop.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport acos, cos, fabs, log, sin, sqrt
from libc.math cimport ceil as c_ceil
from scipy.linalg.cython_lapack cimport (
    dposv,
    dpotrf,
    zgeev,
    zgesv,
    zgesvd,
    zgetrf,
    zgetrs,
    zheev,
)

cnp.import_array()

ctypedef double complex zdbl

cdef double INV_PHI = (sqrt(5.0) - 1.0) / 2.0
cdef double INV_PHI2 = (3.0 - sqrt(5.0)) / 2.0
cdef double EIG_RESIDUAL_TOL = 1e-9
cdef double TWO_PI = 6.283185307179586476925286766559


cdef inline zdbl zpack(double re, double im) noexcept:
    cdef zdbl out
    out.real = re
    out.imag = im
    return out


# ---------------------------------------------------------------------------
# largest eigenvalue of a small Hermitian matrix, split storage (row-major)

cdef double _lam_max_herm(double* gr, double* gi, int m, double* eig_work,
                          zdbl* zwork, int lzwork, double* rwork) noexcept:
    cdef double a, d, h, r, q, p2, p, detr, arg
    cdef double b01r, b01i, b02r, b02i, b12r, b12i, aa, bb, cc
    cdef int info = 0, i, j
    cdef char jobz = b'N', uplo = b'L'
    if m == 1:
        return gr[0]
    if m == 2:
        a = gr[0]
        d = gr[3]
        h = 0.5 * (a - d)
        r = sqrt(h * h + gr[1] * gr[1] + gi[1] * gi[1])
        return 0.5 * (a + d) + r
    if m == 3:
        q = (gr[0] + gr[4] + gr[8]) / 3.0
        p2 = 2.0 * (gr[1] * gr[1] + gi[1] * gi[1]
                    + gr[2] * gr[2] + gi[2] * gi[2]
                    + gr[5] * gr[5] + gi[5] * gi[5])
        p2 += (gr[0] - q) * (gr[0] - q) + (gr[4] - q) * (gr[4] - q) + (gr[8] - q) * (gr[8] - q)
        p = sqrt(p2 / 6.0)
        if p <= 1e-300:
            return q
        # det(B) for Hermitian B = (G - qI)/p:
        #   aa bb cc + 2 Re(B01 B12 conj(B02)) - aa|B12|^2 - bb|B02|^2 - cc|B01|^2
        aa = (gr[0] - q) / p
        bb = (gr[4] - q) / p
        cc = (gr[8] - q) / p
        b01r = gr[1] / p; b01i = gi[1] / p
        b02r = gr[2] / p; b02i = gi[2] / p
        b12r = gr[5] / p; b12i = gi[5] / p
        detr = aa * bb * cc
        detr += 2.0 * ((b01r * b12r - b01i * b12i) * b02r + (b01r * b12i + b01i * b12r) * b02i)
        detr -= aa * (b12r * b12r + b12i * b12i)
        detr -= bb * (b02r * b02r + b02i * b02i)
        detr -= cc * (b01r * b01r + b01i * b01i)
        detr *= 0.5
        if detr > 1.0:
            detr = 1.0
        elif detr < -1.0:
            detr = -1.0
        arg = acos(detr) / 3.0
        return q + 2.0 * p * cos(arg)
    # general: LAPACK (rare at desk scale); matrix stored after the work area
    for j in range(m):
        for i in range(m):
            zwork[lzwork + i + j * m] = zpack(gr[i * m + j], gi[i * m + j])
    info = 0
    zheev(&jobz, &uplo, &m, zwork + lzwork, &m, eig_work, zwork, &lzwork, rwork, &info)
    if info != 0:
        return -1.0
    return eig_work[m - 1]


cdef struct SweepCtx:
    int n, nz, nw, m, use_diag
    double* lam_re   # n
    double* lam_im
    double* ckv_re   # nz*n row-major (diag path)
    double* ckv_im
    double* wb_re    # n*nw row-major (diag path)
    double* wb_im
    double* a        # n*n row-major (lu path)
    double* ck       # nz*n row-major
    double* bw       # n*nw row-major
    double* sw_re    # n*nw scratch
    double* sw_im
    double* t_re     # nz*nw scratch
    double* t_im
    double* g_re     # m*m scratch
    double* g_im
    zdbl* mlu        # n*n scratch (lu path, column-major)
    zdbl* rhs        # n*nw scratch (lu path, column-major)
    int* ipiv        # n
    double* eig_work  # m
    zdbl* zwork      # 2*m*m + lapack work
    int lzwork
    double* rwork


cdef double _sigma_ctx(SweepCtx* ctx, double re, double im) noexcept:
    """sigma_max(T(z)) for z = re + j im on the unit circle."""
    cdef int n = ctx.n, nz = ctx.nz, nw = ctx.nw, m = ctx.m
    cdef int i, j, q, p, info = 0
    cdef double dr, di, den, sr, si, wr, wi, ar, ai, cr, ci
    cdef double lam
    if ctx.use_diag:
        for i in range(n):
            dr = re - ctx.lam_re[i]
            di = im - ctx.lam_im[i]
            den = dr * dr + di * di
            sr = dr / den
            si = -di / den
            for q in range(nw):
                wr = ctx.wb_re[i * nw + q]
                wi = ctx.wb_im[i * nw + q]
                ctx.sw_re[i * nw + q] = sr * wr - si * wi
                ctx.sw_im[i * nw + q] = sr * wi + si * wr
        for p in range(nz):
            for q in range(nw):
                ar = 0.0
                ai = 0.0
                for i in range(n):
                    cr = ctx.ckv_re[p * n + i]
                    ci = ctx.ckv_im[p * n + i]
                    wr = ctx.sw_re[i * nw + q]
                    wi = ctx.sw_im[i * nw + q]
                    ar += cr * wr - ci * wi
                    ai += cr * wi + ci * wr
                ctx.t_re[p * nw + q] = ar
                ctx.t_im[p * nw + q] = ai
    else:
        # dense resolvent solve per frequency (defective A_K)
        for j in range(n):
            for i in range(n):
                ctx.mlu[i + j * n] = zpack(-ctx.a[i * n + j], 0.0)
            ctx.mlu[j + j * n] = ctx.mlu[j + j * n] + zpack(re, im)
        for q in range(nw):
            for i in range(n):
                ctx.rhs[i + q * n] = zpack(ctx.bw[i * nw + q], 0.0)
        zgesv(&n, &nw, ctx.mlu, &n, ctx.ipiv, ctx.rhs, &n, &info)
        if info != 0:
            return -1.0
        for p in range(nz):
            for q in range(nw):
                ar = 0.0
                ai = 0.0
                for i in range(n):
                    cr = ctx.ck[p * n + i]
                    ar += cr * ctx.rhs[i + q * n].real
                    ai += cr * ctx.rhs[i + q * n].imag
                ctx.t_re[p * nw + q] = ar
                ctx.t_im[p * nw + q] = ai

    # Gram matrix on the smaller side (row-major split storage)
    if nw <= nz:
        for q in range(nw):
            for j in range(q, nw):
                ar = 0.0
                ai = 0.0
                for p in range(nz):
                    cr = ctx.t_re[p * nw + q]
                    ci = ctx.t_im[p * nw + q]
                    wr = ctx.t_re[p * nw + j]
                    wi = ctx.t_im[p * nw + j]
                    ar += cr * wr + ci * wi
                    ai += cr * wi - ci * wr
                ctx.g_re[q * m + j] = ar
                ctx.g_im[q * m + j] = ai
                ctx.g_re[j * m + q] = ar
                ctx.g_im[j * m + q] = -ai
    else:
        for q in range(nz):
            for j in range(q, nz):
                ar = 0.0
                ai = 0.0
                for p in range(nw):
                    cr = ctx.t_re[q * nw + p]
                    ci = ctx.t_im[q * nw + p]
                    wr = ctx.t_re[j * nw + p]
                    wi = ctx.t_im[j * nw + p]
                    ar += cr * wr + ci * wi
                    ai += ci * wr - cr * wi
                ctx.g_re[q * m + j] = ar
                ctx.g_im[q * m + j] = ai
                ctx.g_re[j * m + q] = ar
                ctx.g_im[j * m + q] = -ai
    lam = _lam_max_herm(ctx.g_re, ctx.g_im, m, ctx.eig_work, ctx.zwork, ctx.lzwork, ctx.rwork)
    if lam < 0.0:
        lam = 0.0
    return sqrt(lam)


def sweep(a_k, c_k, bw, zs_half, grid_size, refine_tol, max_peaks=64):
    cdef cnp.ndarray[double, ndim=2, mode="c"] a = np.ascontiguousarray(a_k, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] ck = np.ascontiguousarray(c_k, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] bwm = np.ascontiguousarray(bw, dtype=np.float64)
    cdef cnp.ndarray[zdbl, ndim=1, mode="c"] zs = np.ascontiguousarray(zs_half, dtype=np.complex128)
    cdef int n = a.shape[0], nz = ck.shape[0], nw = bwm.shape[1]
    cdef int ngrid = int(grid_size)
    cdef double tol = float(refine_tol)
    cdef int mpeaks = int(max_peaks)
    empty = np.empty(0)

    # eigen-decomposition of A_K
    cdef cnp.ndarray[zdbl, ndim=2, mode="fortran"] af = np.asfortranarray(a, dtype=np.complex128)
    cdef cnp.ndarray[zdbl, ndim=1, mode="c"] lam = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[zdbl, ndim=2, mode="fortran"] vr = np.empty((n, n), dtype=np.complex128, order="F")
    cdef cnp.ndarray[double, ndim=1, mode="c"] rwork_g = np.empty(max(2 * n, 1))
    cdef int info = 0, lwork = -1
    cdef zdbl wkopt
    cdef char jobvl = b'N', jobvr = b'V'
    cdef zdbl* vl_dummy = NULL
    cdef int ldvl = 1
    zgeev(&jobvl, &jobvr, &n, &af[0, 0], &n, &lam[0], vl_dummy, &ldvl,
          &vr[0, 0], &n, &wkopt, &lwork, &rwork_g[0], &info)
    lwork = <int>wkopt.real
    if lwork < 2 * n:
        lwork = 2 * n
    cdef cnp.ndarray[zdbl, ndim=1, mode="c"] work_g = np.empty(lwork, dtype=np.complex128)
    zgeev(&jobvl, &jobvr, &n, &af[0, 0], &n, &lam[0], vl_dummy, &ldvl,
          &vr[0, 0], &n, &work_g[0], &lwork, &rwork_g[0], &info)
    if info != 0:
        raise RuntimeError(f"zgeev failed with info={info}")

    cdef double rho = 0.0, mag
    cdef int i, j, k, q, p
    for i in range(n):
        mag = sqrt(lam[i].real * lam[i].real + lam[i].imag * lam[i].imag)
        if mag > rho:
            rho = mag
    if rho >= 1.0:
        return rho, np.nan, np.nan, np.nan, 0.0, empty, empty

    # W = V^{-1} plus reconstruction check; per-frequency solves on failure
    cdef int use_diag = 1
    cdef cnp.ndarray[zdbl, ndim=2, mode="fortran"] vf = np.array(vr, order="F")
    cdef cnp.ndarray[zdbl, ndim=2, mode="fortran"] winv = np.asfortranarray(
        np.eye(n, dtype=np.complex128))
    cdef cnp.ndarray[int, ndim=1, mode="c"] ipiv = np.empty(n, dtype=np.intc)
    zgesv(&n, &n, &vf[0, 0], &n, <int*>&ipiv[0], &winv[0, 0], &n, &info)
    cdef double err = 0.0, amax = 0.0, ar, ai, vr_r, vr_i, w_r, w_i, l_r, l_i, diff
    if info != 0:
        use_diag = 0
    else:
        for i in range(n):
            for j in range(n):
                ar = 0.0
                ai = 0.0
                for k in range(n):
                    vr_r = vr[i, k].real
                    vr_i = vr[i, k].imag
                    l_r = lam[k].real
                    l_i = lam[k].imag
                    w_r = winv[k, j].real
                    w_i = winv[k, j].imag
                    # V[i,k] * lam[k] * W[k,j]
                    ar += (vr_r * l_r - vr_i * l_i) * w_r - (vr_r * l_i + vr_i * l_r) * w_i
                    ai += (vr_r * l_r - vr_i * l_i) * w_i + (vr_r * l_i + vr_i * l_r) * w_r
                diff = fabs(ar - a[i, j]) + fabs(ai)
                if diff > err:
                    err = diff
                if fabs(a[i, j]) > amax:
                    amax = fabs(a[i, j])
        if err > EIG_RESIDUAL_TOL * (1.0 + amax):
            use_diag = 0

    cdef cnp.ndarray[double, ndim=1, mode="c"] lam_re = np.empty(n)
    cdef cnp.ndarray[double, ndim=1, mode="c"] lam_im = np.empty(n)
    cdef cnp.ndarray[double, ndim=1, mode="c"] ckv_re = np.empty(max(nz * n, 1))
    cdef cnp.ndarray[double, ndim=1, mode="c"] ckv_im = np.empty(max(nz * n, 1))
    cdef cnp.ndarray[double, ndim=1, mode="c"] wb_re = np.empty(max(n * nw, 1))
    cdef cnp.ndarray[double, ndim=1, mode="c"] wb_im = np.empty(max(n * nw, 1))
    for i in range(n):
        lam_re[i] = lam[i].real
        lam_im[i] = lam[i].imag
    if use_diag:
        for p in range(nz):
            for k in range(n):
                ar = 0.0
                ai = 0.0
                for i in range(n):
                    ar += ck[p, i] * vr[i, k].real
                    ai += ck[p, i] * vr[i, k].imag
                ckv_re[p * n + k] = ar
                ckv_im[p * n + k] = ai
        for k in range(n):
            for q in range(nw):
                ar = 0.0
                ai = 0.0
                for j in range(n):
                    ar += winv[k, j].real * bwm[j, q]
                    ai += winv[k, j].imag * bwm[j, q]
                wb_re[k * nw + q] = ar
                wb_im[k * nw + q] = ai

    # scratch
    cdef int m = nz if nz < nw else nw
    cdef cnp.ndarray[double, ndim=1, mode="c"] sw_re = np.empty(n * nw)
    cdef cnp.ndarray[double, ndim=1, mode="c"] sw_im = np.empty(n * nw)
    cdef cnp.ndarray[double, ndim=1, mode="c"] t_re = np.empty(nz * nw)
    cdef cnp.ndarray[double, ndim=1, mode="c"] t_im = np.empty(nz * nw)
    cdef cnp.ndarray[double, ndim=1, mode="c"] g_re = np.empty(m * m)
    cdef cnp.ndarray[double, ndim=1, mode="c"] g_im = np.empty(m * m)
    cdef cnp.ndarray[zdbl, ndim=1, mode="c"] mlu = np.empty(n * n, dtype=np.complex128)
    cdef cnp.ndarray[zdbl, ndim=1, mode="c"] rhs = np.empty(n * nw, dtype=np.complex128)
    cdef cnp.ndarray[double, ndim=1, mode="c"] eig_work = np.empty(max(m, 1))
    cdef int lzwork = max(2 * m, 4)
    cdef cnp.ndarray[zdbl, ndim=1, mode="c"] zwork = np.empty(lzwork + m * m + 1, dtype=np.complex128)
    cdef cnp.ndarray[double, ndim=1, mode="c"] rwork = np.empty(max(3 * m, 1))

    cdef SweepCtx ctx
    ctx.n = n; ctx.nz = nz; ctx.nw = nw; ctx.m = m; ctx.use_diag = use_diag
    ctx.lam_re = &lam_re[0]; ctx.lam_im = &lam_im[0]
    ctx.ckv_re = &ckv_re[0]; ctx.ckv_im = &ckv_im[0]
    ctx.wb_re = &wb_re[0]; ctx.wb_im = &wb_im[0]
    ctx.a = &a[0, 0]; ctx.ck = &ck[0, 0]; ctx.bw = &bwm[0, 0]
    ctx.sw_re = &sw_re[0]; ctx.sw_im = &sw_im[0]
    ctx.t_re = &t_re[0]; ctx.t_im = &t_im[0]
    ctx.g_re = &g_re[0]; ctx.g_im = &g_im[0]
    ctx.mlu = &mlu[0]; ctx.rhs = &rhs[0]
    ctx.ipiv = <int*>&ipiv[0]
    ctx.eig_work = &eig_work[0]
    ctx.zwork = &zwork[0]; ctx.lzwork = lzwork
    ctx.rwork = &rwork[0]

    # half-grid evaluation, mirrored (sigma(2pi - w) = sigma(w) for real data)
    cdef int nhalf = zs.shape[0] - 1
    cdef cnp.ndarray[double, ndim=1, mode="c"] sig = np.empty(ngrid)
    for k in range(nhalf + 1):
        sig[k] = _sigma_ctx(&ctx, zs[k].real, zs[k].imag)
    for k in range(nhalf + 1, ngrid):
        sig[k] = sig[ngrid - k]

    cdef double gmax = sig[0], gmin = sig[0]
    cdef int argmax = 0
    for k in range(1, ngrid):
        if sig[k] > gmax:
            gmax = sig[k]
            argmax = k
        if sig[k] < gmin:
            gmin = sig[k]
    cdef double sigma0 = sig[0]
    cdef double argmax_om = TWO_PI * argmax / ngrid
    if gmax - gmin <= 1e-12 * gmax:
        return rho, gmax, gmin, sigma0, argmax_om, empty, empty

    # strict local maxima, cyclic (ties break toward the left edge)
    cdef list peak_idx = []
    cdef int prev_k, next_k
    for k in range(ngrid):
        prev_k = k - 1 if k > 0 else ngrid - 1
        next_k = k + 1 if k < ngrid - 1 else 0
        if sig[k] > sig[prev_k] and sig[k] >= sig[next_k]:
            peak_idx.append(k)
    if not peak_idx:
        return rho, gmax, gmin, sigma0, argmax_om, empty, empty
    idx_arr = np.asarray(peak_idx, dtype=np.int64)
    if idx_arr.shape[0] > mpeaks:
        order = np.argsort(np.asarray(sig)[idx_arr])[::-1][:mpeaks]
        idx_arr = idx_arr[order]

    # golden-section refinement of each bracket [om - dom, om + dom]
    cdef double dom = TWO_PI / ngrid
    cdef int npk = idx_arr.shape[0]
    cdef cnp.ndarray[double, ndim=1, mode="c"] pk_om = np.empty(npk)
    cdef cnp.ndarray[double, ndim=1, mode="c"] pk_sig = np.empty(npk)
    cdef cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] idxv = np.ascontiguousarray(idx_arr)
    cdef int niter = 1
    cdef double width = 2.0 * dom
    if width > tol:
        niter = <int>c_ceil(log(tol / width) / log(INV_PHI))
    if niter < 1:
        niter = 1
    elif niter > 90:
        niter = 90
    cdef double lo, hi, h, cc, dd, yc, yd, om_center
    cdef int it
    for i in range(npk):
        om_center = dom * idxv[i]
        lo = om_center - dom
        hi = om_center + dom
        h = hi - lo
        cc = lo + INV_PHI2 * h
        dd = lo + INV_PHI * h
        yc = _sigma_ctx(&ctx, cos(cc), sin(cc))
        yd = _sigma_ctx(&ctx, cos(dd), sin(dd))
        for it in range(niter):
            if yc > yd:
                hi = dd
                h = hi - lo
                cc = lo + INV_PHI2 * h
                dd = lo + INV_PHI * h
                yd = yc
                yc = _sigma_ctx(&ctx, cos(cc), sin(cc))
            else:
                lo = cc
                h = hi - lo
                cc = lo + INV_PHI2 * h
                dd = lo + INV_PHI * h
                yc = yd
                yd = _sigma_ctx(&ctx, cos(dd), sin(dd))
        if yc >= yd:
            pk_om[i] = cc
            pk_sig[i] = yc
        else:
            pk_om[i] = dd
            pk_sig[i] = yd
        if sig[idxv[i]] > pk_sig[i]:
            pk_om[i] = om_center
            pk_sig[i] = sig[idxv[i]]

    return rho, gmax, gmin, sigma0, argmax_om, np.asarray(pk_om), np.asarray(pk_sig)


def clarke_at(a_k, c_k, bw, b, c, rsqrt, omega):
    """Top singular triple and smooth-component gradient at one frequency."""
    cdef cnp.ndarray[double, ndim=2, mode="c"] a = np.ascontiguousarray(a_k, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] ck = np.ascontiguousarray(c_k, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] bwm = np.ascontiguousarray(bw, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] bmat = np.ascontiguousarray(b, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] cmat = np.ascontiguousarray(c, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] rs = np.ascontiguousarray(rsqrt, dtype=np.float64)
    cdef int n = a.shape[0], nz = ck.shape[0], nw = bwm.shape[1]
    cdef int nu = bmat.shape[1], ny = cmat.shape[0]
    cdef double om = float(omega)
    cdef zdbl z = zpack(cos(om), sin(om))

    # LU factorization of M = z I - A_K (column-major)
    cdef cnp.ndarray[zdbl, ndim=1, mode="c"] mlu = np.empty(n * n, dtype=np.complex128)
    cdef cnp.ndarray[int, ndim=1, mode="c"] ipiv = np.empty(n, dtype=np.intc)
    cdef int i, j, q, p, info = 0
    for j in range(n):
        for i in range(n):
            mlu[i + j * n] = zpack(-a[i, j], 0.0)
        mlu[j + j * n] = mlu[j + j * n] + z
    zgetrf(&n, &n, &mlu[0], &n, <int*>&ipiv[0], &info)
    if info != 0:
        raise RuntimeError("resolvent is singular at this frequency")

    # X = M^{-1} Bw (column-major), T = C_K X (column-major for zgesvd)
    cdef cnp.ndarray[zdbl, ndim=1, mode="c"] xcol = np.empty(n * nw, dtype=np.complex128)
    for q in range(nw):
        for i in range(n):
            xcol[i + q * n] = zpack(bwm[i, q], 0.0)
    cdef char trans_n = b'N', trans_c = b'C'
    zgetrs(&trans_n, &n, &nw, &mlu[0], &n, <int*>&ipiv[0], &xcol[0], &n, &info)
    cdef cnp.ndarray[zdbl, ndim=1, mode="c"] tcol = np.empty(nz * nw, dtype=np.complex128)
    cdef zdbl acc
    for q in range(nw):
        for p in range(nz):
            acc = zpack(0.0, 0.0)
            for i in range(n):
                acc = acc + ck[p, i] * xcol[i + q * n]
            tcol[p + q * nz] = acc

    # SVD of T
    cdef int mn = nz if nz < nw else nw
    cdef cnp.ndarray[double, ndim=1, mode="c"] sv = np.empty(mn)
    cdef cnp.ndarray[zdbl, ndim=1, mode="c"] umat = np.empty(nz * mn, dtype=np.complex128)
    cdef cnp.ndarray[zdbl, ndim=1, mode="c"] vtmat = np.empty(mn * nw, dtype=np.complex128)
    cdef cnp.ndarray[double, ndim=1, mode="c"] srwork = np.empty(5 * mn + 1)
    cdef int lwork = -1
    cdef zdbl wkopt
    cdef char jobu = b'S', jobvt = b'S'
    zgesvd(&jobu, &jobvt, &nz, &nw, &tcol[0], &nz, &sv[0], &umat[0], &nz,
           &vtmat[0], &mn, &wkopt, &lwork, &srwork[0], &info)
    lwork = <int>wkopt.real
    if lwork < 3 * mn + 2:
        lwork = 3 * mn + 2
    cdef cnp.ndarray[zdbl, ndim=1, mode="c"] swork = np.empty(lwork, dtype=np.complex128)
    # the workspace query may touch T; rebuild it
    for q in range(nw):
        for p in range(nz):
            acc = zpack(0.0, 0.0)
            for i in range(n):
                acc = acc + ck[p, i] * xcol[i + q * n]
            tcol[p + q * nz] = acc
    zgesvd(&jobu, &jobvt, &nz, &nw, &tcol[0], &nz, &sv[0], &umat[0], &nz,
           &vtmat[0], &mn, &swork[0], &lwork, &srwork[0], &info)
    if info != 0:
        raise RuntimeError(f"zgesvd failed with info={info}")

    cdef double sigma = sv[0]
    cdef cnp.ndarray[zdbl, ndim=1, mode="c"] u = np.empty(nw, dtype=np.complex128)
    cdef cnp.ndarray[zdbl, ndim=1, mode="c"] v = np.empty(nz, dtype=np.complex128)
    for q in range(nw):
        u[q] = vtmat[0 + q * mn].conjugate()
    for p in range(nz):
        v[p] = umat[p + 0 * nz]
    # phase normalization: first entry of u with modulus > 1e-12 made real >= 0
    cdef zdbl phase
    cdef double amag
    for q in range(nw):
        amag = sqrt(u[q].real * u[q].real + u[q].imag * u[q].imag)
        if amag > 1e-12:
            phase = u[q].conjugate() / amag
            for i in range(nw):
                u[i] = u[i] * phase
            for i in range(nz):
                v[i] = v[i] * phase
            break

    # gradient: G = Re(conj(a_vec + c_vec) b_vec^T)
    cdef cnp.ndarray[zdbl, ndim=1, mode="c"] xu = np.empty(n, dtype=np.complex128)
    for i in range(n):
        acc = zpack(0.0, 0.0)
        for q in range(nw):
            acc = acc + xcol[i + q * n] * u[q]
        xu[i] = acc
    cdef cnp.ndarray[zdbl, ndim=1, mode="c"] b_vec = np.empty(ny, dtype=np.complex128)
    for p in range(ny):
        acc = zpack(0.0, 0.0)
        for i in range(n):
            acc = acc + cmat[p, i] * xu[i]
        b_vec[p] = acc
    # r = C_K^T v, then solve M^H y = r reusing the LU factors
    cdef cnp.ndarray[zdbl, ndim=1, mode="c"] y = np.empty(n, dtype=np.complex128)
    for i in range(n):
        acc = zpack(0.0, 0.0)
        for p in range(nz):
            acc = acc + ck[p, i] * v[p]
        y[i] = acc
    cdef int one = 1
    zgetrs(&trans_c, &n, &one, &mlu[0], &n, <int*>&ipiv[0], &y[0], &n, &info)
    cdef cnp.ndarray[zdbl, ndim=1, mode="c"] cvec = np.empty(nu, dtype=np.complex128)
    for p in range(nu):
        acc = zpack(0.0, 0.0)
        for i in range(n):
            acc = acc + bmat[i, p] * y[i]
        cvec[p] = acc
    for p in range(nu):
        acc = zpack(0.0, 0.0)
        for i in range(nu):
            acc = acc + rs[p, i] * v[n + i]
        cvec[p] = cvec[p] + acc  # a_vec + c_vec
    cdef cnp.ndarray[double, ndim=2, mode="c"] grad = np.empty((nu, ny))
    for p in range(nu):
        for q in range(ny):
            acc = cvec[p].conjugate() * b_vec[q]
            grad[p, q] = acc.real
    return sigma, np.asarray(u), np.asarray(v), np.asarray(grad)


def riccati(a_k, gram, bw, gamma, max_iter, tol):
    cdef cnp.ndarray[double, ndim=2, mode="c"] a = np.ascontiguousarray(a_k, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] g = np.ascontiguousarray(gram, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] bwm = np.ascontiguousarray(bw, dtype=np.float64)
    cdef int n = a.shape[0], nw = bwm.shape[1]
    cdef double g2 = float(gamma) * float(gamma)
    cdef double thr = 1e-12 * g2
    cdef double ctol = float(tol)
    cdef int miters = int(max_iter)

    cdef cnp.ndarray[double, ndim=2, mode="c"] p = np.zeros((n, n))
    cdef cnp.ndarray[double, ndim=2, mode="c"] pn = np.empty((n, n))
    cdef cnp.ndarray[double, ndim=2, mode="c"] pb = np.empty((n, nw))
    cdef cnp.ndarray[double, ndim=2, mode="c"] pa = np.empty((n, n))
    cdef cnp.ndarray[double, ndim=1, mode="c"] schol = np.empty(nw * nw)
    cdef cnp.ndarray[double, ndim=1, mode="c"] ssol = np.empty(nw * nw)
    cdef cnp.ndarray[double, ndim=1, mode="c"] nf = np.empty(nw * n)
    cdef cnp.ndarray[double, ndim=1, mode="c"] nkeep = np.empty(nw * n)
    cdef char uplo = b'L'
    cdef int info = 0, it, i, j, l, q, r
    cdef double acc, delta, pnorm, diff

    pnorm = 0.0
    for it in range(1, miters + 1):
        # PB = P Bw ; S = g2 I - Bw^T PB
        for i in range(n):
            for q in range(nw):
                acc = 0.0
                for j in range(n):
                    acc += p[i, j] * bwm[j, q]
                pb[i, q] = acc
        for q in range(nw):
            for r in range(nw):
                acc = 0.0
                for i in range(n):
                    acc += bwm[i, q] * pb[i, r]
                ssol[q + r * nw] = -acc
            ssol[q + q * nw] += g2
        for q in range(nw):
            for r in range(nw):
                schol[q + r * nw] = ssol[q + r * nw]
            schol[q + q * nw] -= thr
        info = 0
        dpotrf(&uplo, &nw, &schol[0], &nw, &info)
        if info != 0:
            return 1, np.asarray(p), it
        # N = PB^T A (column-major), X = S^{-1} N via dposv (which overwrites
        # its right-hand side, so keep a copy of N for the quadratic term)
        for q in range(nw):
            for j in range(n):
                acc = 0.0
                for i in range(n):
                    acc += pb[i, q] * a[i, j]
                nf[q + j * nw] = acc
                nkeep[q + j * nw] = acc
        for q in range(nw):
            for j in range(nw):
                schol[q + j * nw] = ssol[q + j * nw]
        info = 0
        dposv(&uplo, &nw, &n, &schol[0], &nw, &nf[0], &nw, &info)
        if info != 0:
            return 1, np.asarray(p), it
        # P_next = A^T P A + N^T X + gram
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for l in range(n):
                    acc += p[i, l] * a[l, j]
                pa[i, j] = acc
        for i in range(n):
            for j in range(n):
                acc = g[i, j]
                for l in range(n):
                    acc += a[l, i] * pa[l, j]
                for q in range(nw):
                    acc += nkeep[q + i * nw] * nf[q + j * nw]
                pn[i, j] = acc
        for i in range(n):
            for j in range(i + 1, n):
                acc = 0.5 * (pn[i, j] + pn[j, i])
                pn[i, j] = acc
                pn[j, i] = acc
        delta = 0.0
        for i in range(n):
            for j in range(n):
                diff = pn[i, j] - p[i, j]
                delta += diff * diff
        delta = sqrt(delta)
        if delta <= ctol * (1.0 + pnorm):
            return 0, np.asarray(pn), it
        pnorm = 0.0
        for i in range(n):
            for j in range(n):
                p[i, j] = pn[i, j]
                pnorm += pn[i, j] * pn[i, j]
        pnorm = sqrt(pnorm)
    return 2, np.asarray(p), miters
