# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for propagation and the Krotov forward sweep.

Every function here has a numpy twin in :mod:`chargeqoc._kernels_py` with the
same signature; :mod:`chargeqoc.kernels` picks one at import time.

All Hamiltonians of the model are real symmetric, so segment eigenvectors are
real. State arrays are complex and stored row-wise: ``psi[k]`` is the k-th
state vector.
"""

import numpy as np
from libc.math cimport cos, sin, fabs, fmax, isfinite
from libc.stdlib cimport malloc, free
from scipy.linalg.cython_lapack cimport dsyev

ctypedef double complex cplx


cdef int _eigh(int n, double* a, double* w, double* work, int lwork) noexcept nogil:
    # a is column-major on entry, eigenvectors as columns on exit
    cdef char jobz = b'V'
    cdef char uplo = b'L'
    cdef int info = 0
    dsyev(&jobz, &uplo, &n, a, &n, w, work, &lwork, &info)
    return info


cdef int _query_lwork(int n):
    cdef char jobz = b'V'
    cdef char uplo = b'L'
    cdef int info = 0
    cdef int lwork = -1
    cdef double wk = 0
    cdef double* a = <double*> malloc(n * n * sizeof(double))
    cdef double* w = <double*> malloc(n * sizeof(double))
    dsyev(&jobz, &uplo, &n, a, &n, w, &wk, &lwork, &info)
    free(a)
    free(w)
    return max(<int> wk, 3 * n)


def krotov_sweep(const double[:, ::1] H0, const double[:, :, ::1] Hc,
                 const double[:, ::1] g_old, const double[:, ::1] weight,
                 const double[::1] lower, const double[:, ::1] w_old,
                 const double[:, :, ::1] V_old, const cplx[:, :, ::1] chip,
                 const cplx[:, ::1] psi0, double dt):
    """Sequential Krotov forward sweep.

    ``chip[j]`` holds the backward states at the start of segment ``j`` in the
    old eigenbasis of that segment. For each segment the update is
    ``g[a, j] = max(g_old[a, j] + weight[a, j] * Im(grad), lower[a])`` with
    ``grad = sum_k <chip_k| (V^T Hc_a V) * K |V^T psi_k>`` evaluated with the
    freshly propagated states, where ``K`` is the segment-average kernel
    ``(exp(i x) - 1)/(i x)``, ``x = (w_m - w_q) dt``. The segment is then
    propagated with the updated Hamiltonian.

    Returns ``(g_new, eigvals, eigvecs, psi_final)``.
    """
    cdef int n_ctrl = Hc.shape[0]
    cdef int N = H0.shape[0]
    cdef int n_steps = g_old.shape[1]
    cdef int K = psi0.shape[0]
    cdef int j, a, k, m, q, c, info = 0, bad_step = -1, bad_update = -1
    cdef double upd, phase, x, re, im
    cdef cplx acc, y

    g_new_arr = np.empty((n_ctrl, n_steps), dtype=np.float64)
    w_arr = np.empty((n_steps, N), dtype=np.float64)
    V_arr = np.empty((n_steps, N, N), dtype=np.float64)
    psi_arr = np.array(psi0, dtype=np.complex128, copy=True, order="C")
    cdef double[:, ::1] g_new = g_new_arr
    cdef double[:, ::1] w_out = w_arr
    cdef double[:, :, ::1] V_out = V_arr
    cdef cplx[:, ::1] psi = psi_arr

    cdef int lwork = _query_lwork(N)
    cdef double* buf = <double*> malloc(N * N * sizeof(double))
    cdef double* work = <double*> malloc(lwork * sizeof(double))
    cdef double* w = <double*> malloc(N * sizeof(double))
    cdef double* hv = <double*> malloc(N * N * sizeof(double))
    cdef cplx* kern = <cplx*> malloc(N * N * sizeof(cplx))
    cdef cplx* pp = <cplx*> malloc(K * N * sizeof(cplx))
    cdef cplx* tmp = <cplx*> malloc(N * sizeof(cplx))
    cdef double* gj = <double*> malloc(n_ctrl * sizeof(double))

    try:
        with nogil:
            for j in range(n_steps):
                # segment-average kernel in the old eigenbasis
                for m in range(N):
                    for q in range(N):
                        x = (w_old[j, m] - w_old[j, q]) * dt
                        if fabs(x) < 1e-8:
                            kern[m * N + q] = 1.0 + 0.5j * x
                        else:
                            kern[m * N + q] = (sin(x) + 1j * (1.0 - cos(x))) / x
                # psi' = V_old^T psi, row-wise
                for k in range(K):
                    for q in range(N):
                        acc = 0
                        for m in range(N):
                            acc = acc + V_old[j, m, q] * psi[k, m]
                        pp[k * N + q] = acc
                for a in range(n_ctrl):
                    # hv = Hc_a V_old (row-major)
                    for m in range(N):
                        for q in range(N):
                            re = 0
                            for c in range(N):
                                re = re + Hc[a, m, c] * V_old[j, c, q]
                            hv[m * N + q] = re
                    acc = 0
                    for m in range(N):
                        for q in range(N):
                            # (V^T Hc V)[m, q]
                            re = 0
                            for c in range(N):
                                re = re + V_old[j, c, m] * hv[c * N + q]
                            y = re * kern[m * N + q]
                            for k in range(K):
                                acc = acc + chip[j, k, m].conjugate() * y * pp[k * N + q]
                    upd = g_old[a, j] + weight[a, j] * acc.imag
                    if not isfinite(upd):
                        bad_update = j
                    gj[a] = fmax(upd, lower[a])
                    g_new[a, j] = gj[a]
                if bad_update >= 0:
                    break
                # H = H0 + sum_a g_a Hc_a, column-major (symmetric)
                for m in range(N):
                    for q in range(N):
                        re = H0[q, m]
                        for a in range(n_ctrl):
                            re = re + gj[a] * Hc[a, q, m]
                        buf[q + m * N] = re
                info = _eigh(N, buf, w, work, lwork)
                if info != 0:
                    bad_step = j
                    break
                for m in range(N):
                    w_out[j, m] = w[m]
                    for q in range(N):
                        V_out[j, q, m] = buf[q + m * N]
                # psi <- V exp(-i w dt) V^T psi
                for k in range(K):
                    for c in range(N):
                        acc = 0
                        for m in range(N):
                            acc = acc + buf[m + c * N] * psi[k, m]
                        phase = -w[c] * dt
                        tmp[c] = acc * (cos(phase) + 1j * sin(phase))
                    for m in range(N):
                        acc = 0
                        for c in range(N):
                            acc = acc + buf[m + c * N] * tmp[c]
                        psi[k, m] = acc
    finally:
        free(buf)
        free(work)
        free(w)
        free(hv)
        free(kern)
        free(pp)
        free(tmp)
        free(gj)
    if bad_update >= 0:
        raise FloatingPointError(f"non-finite control update at segment {bad_update}")
    if bad_step >= 0:
        raise np.linalg.LinAlgError(
            f"eigensolver failed at segment {bad_step} (info={info})")
    return g_new_arr, w_arr, V_arr, psi_arr


def eigen_chain(const double[:, ::1] w, const double[:, :, ::1] V,
                const cplx[:, ::1] psi0, double dt, bint reverse=False):
    """Chain states through segments given as eigenpairs ``(w, V)``.

    Forward: ``out[0] = psi0``, ``out[j + 1] = U_j out[j]``.
    Reverse: ``out[n] = psi0``, ``out[j] = U_j^dagger out[j + 1]``,
    with ``U_j = V_j exp(-i w_j dt) V_j^T``.
    """
    cdef int n = w.shape[0]
    cdef int N = w.shape[1]
    cdef int K = psi0.shape[0]
    cdef int j, jj, src, dst, k, i, m
    cdef double sgn = 1.0 if reverse else -1.0
    cdef double phase
    cdef cplx acc
    out_arr = np.empty((n + 1, K, N), dtype=np.complex128)
    cdef cplx[:, :, ::1] out = out_arr
    cdef cplx* tmp = <cplx*> malloc(N * sizeof(cplx))
    try:
        with nogil:
            src = n if reverse else 0
            for k in range(K):
                for i in range(N):
                    out[src, k, i] = psi0[k, i]
            for jj in range(n):
                if reverse:
                    j = n - 1 - jj
                    src = j + 1
                    dst = j
                else:
                    j = jj
                    src = j
                    dst = j + 1
                for k in range(K):
                    for i in range(N):
                        acc = 0
                        for m in range(N):
                            acc = acc + V[j, m, i] * out[src, k, m]
                        phase = sgn * w[j, i] * dt
                        tmp[i] = acc * (cos(phase) + 1j * sin(phase))
                    for m in range(N):
                        acc = 0
                        for i in range(N):
                            acc = acc + V[j, m, i] * tmp[i]
                        out[dst, k, m] = acc
    finally:
        free(tmp)
    return out_arr


def ordered_product(const cplx[:, :, ::1] U):
    """Return ``U[n-1] @ ... @ U[1] @ U[0]``."""
    cdef int n = U.shape[0]
    cdef int N = U.shape[1]
    cdef int j, i, m, l
    cdef cplx acc
    res_arr = np.eye(N, dtype=np.complex128)
    tmp_arr = np.empty((N, N), dtype=np.complex128)
    cdef cplx[:, ::1] res = res_arr
    cdef cplx[:, ::1] tmp = tmp_arr
    with nogil:
        for j in range(n):
            for i in range(N):
                for l in range(N):
                    acc = 0
                    for m in range(N):
                        acc = acc + U[j, i, m] * res[m, l]
                    tmp[i, l] = acc
            for i in range(N):
                for l in range(N):
                    res[i, l] = tmp[i, l]
    return res_arr
