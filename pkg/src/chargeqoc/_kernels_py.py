"""Pure numpy implementation of the inner loops in ``_kernels.pyx``.

Used when the compiled extension is unavailable or when
``CHARGEQOC_PURE_PYTHON=1`` is set. Signatures and return values match the
Cython module exactly.
"""

import numpy as np


def average_kernel(w, dt):
    """``(exp(i x) - 1)/(i x)`` with ``x = (w_m - w_q) dt``, for ``w`` of shape (..., N)."""
    x = (w[..., :, None] - w[..., None, :]) * dt
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + 0.5j * x, (np.sin(x) + 1j * (1.0 - np.cos(x))) / safe)


def krotov_sweep(H0, Hc, g_old, weight, lower, w_old, V_old, chip, psi0, dt):
    n_ctrl, n_steps = g_old.shape
    N = H0.shape[0]
    g_new = np.empty_like(g_old)
    w_out = np.empty((n_steps, N))
    V_out = np.empty((n_steps, N, N))
    psi = np.array(psi0, dtype=complex, copy=True)
    kern = average_kernel(w_old, dt)
    for j in range(n_steps):
        Vj = V_old[j]
        pp = psi @ Vj
        B = (Vj.T @ Hc @ Vj) * kern[j]
        val = np.einsum("km,amq,kq->a", chip[j].conj(), B, pp)
        upd = g_old[:, j] + weight[:, j] * val.imag
        if not np.all(np.isfinite(upd)):
            raise FloatingPointError(f"non-finite control update at segment {j}")
        gj = np.maximum(upd, lower)
        g_new[:, j] = gj
        H = H0 + np.tensordot(gj, Hc, axes=1)
        try:
            w, V = np.linalg.eigh(H)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(f"eigensolver failed at segment {j}") from exc
        w_out[j] = w
        V_out[j] = V
        psi = ((psi @ V) * np.exp(-1j * w * dt)) @ V.T
    return g_new, w_out, V_out, psi


def eigen_chain(w, V, psi0, dt, reverse=False):
    n, N = w.shape
    out = np.empty((n + 1,) + psi0.shape, dtype=complex)
    ph = np.exp((1j if reverse else -1j) * w * dt)
    if not reverse:
        out[0] = psi0
        for j in range(n):
            out[j + 1] = ((out[j] @ V[j]) * ph[j]) @ V[j].T
    else:
        out[n] = psi0
        for j in range(n - 1, -1, -1):
            out[j] = ((out[j + 1] @ V[j]) * ph[j]) @ V[j].T
    return out


def ordered_product(U):
    res = np.eye(U.shape[1], dtype=complex)
    for Uj in U:
        res = Uj @ res
    return res
