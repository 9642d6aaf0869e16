"""Extended-precision arithmetic for long signed Gaussian mixtures.

After ``j`` heralded pulses the mixture weights grow like ``p_c^{-j}`` while the
physical result stays O(1), so the component covariance matrices must be carried
with far more than double precision.  Only 2×2 and 4×4 matrices are involved.
"""

from __future__ import annotations

import mpmath as mp
import numpy as np
from numpy.typing import NDArray

DPS = 40

_X1 = [[0, 1], [1, 0]]


def to_mp(A) -> mp.matrix:
    A = np.asarray(A, dtype=complex)
    return mp.matrix([[mp.mpc(complex(v)) for v in row] for row in A])


def to_np(A: mp.matrix) -> NDArray[np.complex128]:
    return np.array([[complex(A[i, j]) for j in range(A.cols)] for i in range(A.rows)])


def _hermitize(A: mp.matrix) -> mp.matrix:
    return (A + A.H) / 2


def apply_map(K: mp.matrix, N: mp.matrix, Vm: mp.matrix) -> mp.matrix:
    return _hermitize(K * Vm * K.H + N)


def mech_block(V: mp.matrix) -> mp.matrix:
    return mp.matrix([[V[0, 0], V[0, 2]], [V[2, 0], V[2, 2]]])


def condition_t_power(V: mp.matrix, t) -> tuple:
    """``(trace, normalized mech CM)`` of ``Tr_opt[t^{n̂} ρ_V]`` for a 4×4 field CM."""
    n = 4
    eye = mp.eye(n)
    plus = 2 * V + eye
    Rt = mp.matrix(n, n)
    X = mp.matrix([[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]])
    Rt = X * (2 * V - eye) * mp.inverse(plus)
    P0 = 4 / mp.sqrt(mp.det(plus))
    perm = [0, 2, 1, 3]
    R = mp.matrix(n, n)
    for i in range(n):
        for j in range(n):
            R[i, j] = (Rt[perm[i], perm[j]] + Rt[perm[j], perm[i]]) / 2
    Rmm = R[0:2, 0:2]
    Rmc = R[0:2, 2:4]
    Rcm = R[2:4, 0:2]
    Rcc = R[2:4, 2:4]
    X1 = mp.matrix(_X1)
    tX = t * X1
    Kc = mp.eye(2) - Rcc * tX
    P = P0 / mp.sqrt(mp.det(Kc))
    Rp = Rmm + Rmc * tX * mp.inverse(Kc) * Rcm
    XR = X1 * Rp
    trace = P / mp.sqrt(mp.det(mp.eye(2) - XR))
    cm = _hermitize(0.5 * (mp.eye(2) + XR) * mp.inverse(mp.eye(2) - XR))
    return mp.re(trace), cm


def fock_diagonal(cm: mp.matrix, nmax: int) -> list:
    """``<n|ρ|n>`` for a normalized single-mode Gaussian, n ≤ nmax."""
    eye = mp.eye(2)
    X1 = mp.matrix(_X1)
    R = X1 * (2 * cm - eye) * mp.inverse(2 * cm + eye)
    P = 2 / mp.sqrt(mp.det(2 * cm + eye))
    r00, r01, r11 = R[0, 0], (R[0, 1] + R[1, 0]) / 2, R[1, 1]
    size = nmax + 1
    G = [[mp.mpc(0)] * size for _ in range(size)]
    G[0][0] = mp.mpc(1)
    for n in range(2, size):
        G[0][n] = r11 * mp.sqrt(n - 1) * G[0][n - 2] / mp.sqrt(n)
    for m in range(1, size):
        sm = mp.sqrt(m)
        for n in range(size):
            acc = mp.mpc(0)
            if m >= 2:
                acc += r00 * mp.sqrt(m - 1) * G[m - 2][n]
            if n >= 1:
                acc += r01 * mp.sqrt(n) * G[m - 1][n - 1]
            G[m][n] = acc / sm
    return [mp.re(P * G[n][n]) for n in range(size)]
