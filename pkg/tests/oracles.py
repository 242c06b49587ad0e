"""Independent reference implementations used as test oracles.

These rebuild the Hamiltonians element by element from the charge-state
labels and propagate with ``scipy.linalg.expm``; they share no code with the
package.
"""

import itertools

import numpy as np
from scipy.linalg import expm


def charge_labels(n_min, n_max):
    return list(itertools.product(range(n_min, n_max + 1), repeat=2))


def hamiltonian(n_min, n_max, EC1, EC2, EJ1, EJ2, ng1, ng2, Ecc=0.0, EJJ=0.0):
    labels = charge_labels(n_min, n_max)
    pos = {lab: i for i, lab in enumerate(labels)}
    H = np.zeros((len(labels), len(labels)))
    for (a, b), i in pos.items():
        H[i, i] = (EC1 * (a - ng1) ** 2 + EC2 * (b - ng2) ** 2
                   + Ecc * (a - ng1) * (b - ng2))
        for (c, d), j in pos.items():
            if b == d and abs(a - c) == 1:
                H[i, j] += -EJ1 / 2
            if a == c and abs(b - d) == 1:
                H[i, j] += -EJ2 / 2
            # one Cooper pair hops from one box to the other
            if (c, d) in ((a + 1, b - 1), (a - 1, b + 1)):
                H[i, j] += EJJ / 2
    return H


def embedding_cc(n_min, n_max):
    labels = charge_labels(n_min, n_max)
    pos = {lab: i for i, lab in enumerate(labels)}
    B = np.zeros((len(labels), 4), dtype=complex)
    for col, lab in enumerate([(1, 1), (1, 0), (0, 1), (0, 0)]):
        B[pos[lab], col] = 1.0
    return B


def embedding_pm(n_min, n_max, flip_second):
    labels = charge_labels(n_min, n_max)
    pos = {lab: i for i, lab in enumerate(labels)}
    s2 = -1.0 if flip_second else 1.0
    B = np.zeros((len(labels), 4), dtype=complex)
    # columns |++>, |+->, |-+>, |--> ; qubit-2 sign flipped in the relabelled basis
    for col, (s1, s) in enumerate([(1, 1), (1, -1), (-1, 1), (-1, -1)]):
        for a in (0, 1):
            for b in (0, 1):
                amp = (s1 if a else 1) * ((s * s2) if b else 1) / 2
                B[pos[(a, b)], col] = amp
    return B


G_CC = np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], dtype=complex)


def g_jj(sign):
    s = 1j * sign
    return np.array([[0, 0, 0, 1], [0, s, 0, 0], [0, 0, s, 0], [1, 0, 0, 0]], dtype=complex)


def propagate_piecewise(Hs, dt):
    U = np.eye(Hs[0].shape[0], dtype=complex)
    for H in Hs:
        U = expm(-1j * H * dt) @ U
    return U


def trace_error(U, B, G):
    Ut = B.conj().T @ U @ B
    return 1 - abs(np.trace(G.conj().T @ Ut)) / 4


def jj_baseline(ratio, residual=0.05, n_min=-1, n_max=2, sign=-1):
    """Analytic-scheme error with constant couplings for 0.97 * 2 pi / E_J."""
    EJ = ratio
    H = hamiltonian(n_min, n_max, 1.0, 1.0, EJ, EJ, 0.5, 0.5, residual * EJ, EJ)
    tau = 0.97 * 2 * np.pi / EJ
    U = expm(-1j * H * tau)
    return trace_error(U, embedding_pm(n_min, n_max, True), g_jj(sign))


def cc_baseline(ratio=0.47, ng=(0.391, 0.525), n_min=-1, n_max=2):
    Ecc = 0.1653
    EJ = ratio * Ecc
    EC2 = 0.0777 / 0.0610
    H = hamiltonian(n_min, n_max, 1.0, EC2, EJ, EJ, ng[0], ng[1], Ecc)
    tau = 1.18 * np.pi / EJ
    U = expm(-1j * H * tau)
    return trace_error(U, embedding_cc(n_min, n_max), G_CC)
