"""Fock-space matrix elements of Gaussian operators.

A Gaussian operator ``O`` on ``N`` modes is stored as ``(P, R)`` such that

    <m_1..m_N| O |n_1..n_N> = P · G[m_1, n_1, ..., m_N, n_N],

where ``G[k] = √(k!) · [s^k] exp(½ sᵀ R s + bᵀ s)`` are the Fock-normalized
Taylor coefficients of a quadratic exponential in ``s = (β_1^*, α_1, ..., β_N^*, α_N)``.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import NDArray

from qngherald.errors import NumericalError
from qngherald.gaussian import bargmann_matrix, exchange_matrix


def _shift(x: NDArray, axis: int) -> NDArray:
    """``y[k] = √k_axis · x[k - e_axis]`` (zero on the first slice)."""
    y = np.zeros_like(x)
    n = x.shape[axis]
    if n < 2:
        return y
    src = [slice(None)] * x.ndim
    dst = [slice(None)] * x.ndim
    src[axis] = slice(0, n - 1)
    dst[axis] = slice(1, n)
    w = np.sqrt(np.arange(1, n, dtype=float))
    w = w.reshape([-1 if i == axis else 1 for i in range(x.ndim)])
    y[tuple(dst)] = w * x[tuple(src)]
    return y


def fock_coefficients(R: NDArray, shape: tuple[int, ...], b: NDArray | None = None) -> NDArray:
    """Fock-normalized Taylor coefficients of ``exp(½ sᵀ R s + bᵀ s)``.

    ``b`` may carry trailing batch dimensions (``b.shape == (d, *batch)``); the
    result then has shape ``shape + batch``.  The recursion is

        √a · G[a, k'] = b_0 G[a-1, k'] + R_00 √(a-1) G[a-2, k'] + Σ_j R_0j √k_j G[a-1, k'-e_j]

    applied one axis at a time, so it costs O(prod(shape) · d) operations.
    """
    R = np.asarray(R, dtype=complex)
    d = len(shape)
    if R.shape != (d, d):
        raise ValueError(f"R must be {d}×{d}, got {R.shape}")
    if b is None:
        b = np.zeros(d, dtype=complex)
    b = np.asarray(b, dtype=complex)
    batch = b.shape[1:]
    return _coeffs(R, b, tuple(shape), batch)


def _coeffs(R, b, shape, batch):
    if not shape:
        return np.ones(batch, dtype=complex)
    n0 = shape[0]
    out = np.zeros(shape + batch, dtype=complex)
    out[0] = _coeffs(R[1:, 1:], b[1:], shape[1:], batch)
    for a in range(1, n0):
        acc = b[0] * out[a - 1]
        if a >= 2:
            acc = acc + R[0, 0] * math.sqrt(a - 1) * out[a - 2]
        prev = out[a - 1]
        for j in range(1, len(shape)):
            if R[0, j] != 0:
                acc = acc + R[0, j] * _shift(prev, j - 1)
        out[a] = acc / math.sqrt(a)
    return out


# ---------------------------------------------------------------------------
# single-mode helpers


def fock_matrix(P: complex, R: NDArray, nmax: int) -> NDArray[np.complex128]:
    """Density matrix ``<m|O|n>`` (m, n ≤ nmax) of a single-mode Gaussian operator."""
    return P * fock_coefficients(R, (nmax + 1, nmax + 1))


def fock_matrix_from_cm(V: NDArray, nmax: int, trace: float = 1.0) -> NDArray[np.complex128]:
    """Density matrix of a zero-mean single-mode Gaussian with field CM ``V``."""
    P, R = bargmann_matrix(V)
    return trace * fock_matrix(P, R, nmax)


def fock_diagonal_from_cm(V: NDArray, nmax: int, trace: float = 1.0) -> NDArray[np.float64]:
    return np.real(np.diagonal(fock_matrix_from_cm(V, nmax, trace)))


def gaussian_operator_cm(R: NDArray) -> NDArray[np.complex128]:
    """Normalized field CM of a single-mode Gaussian operator with matrix ``R``."""
    X = exchange_matrix(1)
    eye = np.eye(2)
    XR = X @ np.asarray(R, dtype=complex)
    V = 0.5 * (eye + XR) @ np.linalg.inv(eye - XR)
    return (V + V.conj().T) / 2


def gaussian_operator_trace(P: complex, R: NDArray) -> float:
    """``Tr O`` for a single-mode Gaussian operator ``(P, R)``."""
    det = np.linalg.det(np.eye(2) - exchange_matrix(1) @ np.asarray(R, dtype=complex))
    return float(np.real(P / np.sqrt(det)))


# ---------------------------------------------------------------------------
# two-mode: conditioning the optical mode


def condition_on_t_power(P: complex, R: NDArray, t: float) -> tuple[complex, NDArray[np.complex128]]:
    """Apply ``Tr_opt[t^{n̂_opt} · ]`` to a two-mode Gaussian operator.

    ``R`` is in the mode-blocked order ``(β_1^*, α_1, β_2^*, α_2)``.  ``t = 1`` is the
    partial trace; ``t = 0`` is the projection onto the optical vacuum; ``t = 1-η``
    gives the no-click operator of an on-off detector with efficiency ``η``.
    """
    R = np.asarray(R, dtype=complex)
    Rmm, Rmc, Rcm, Rcc = R[:2, :2], R[:2, 2:], R[2:, :2], R[2:, 2:]
    tX = t * exchange_matrix(1)
    K = np.eye(2) - Rcc @ tX
    det = np.linalg.det(K)
    if abs(det) < 1e-300:
        raise NumericalError("optical trace diverges (‖R_cc‖ ≥ 1)")
    Rp = Rmm + Rmc @ tX @ np.linalg.solve(K, Rcm)
    Rp = (Rp + Rp.T) / 2
    return P / np.sqrt(det), Rp


def mech_operator_after_t_power(V: NDArray, t: float) -> tuple[float, NDArray[np.complex128]]:
    """``(trace, normalized mech CM)`` of ``Tr_opt[t^{n̂} ρ]`` for the two-mode state ``V``."""
    from qngherald.gaussian import r_blocks

    rb = r_blocks(V)
    P, Rp = condition_on_t_power(rb.P0, rb.R, t)
    return gaussian_operator_trace(P, Rp), gaussian_operator_cm(Rp)


# ---------------------------------------------------------------------------
# Wigner function of a photon-number-conditioned mechanical operator


def wigner_n2(P0: float, R: NDArray, n2: int, alpha: NDArray) -> NDArray[np.float64]:
    """Unnormalized mech Wigner of ``<n2|ρ|n2>_opt`` at complex points ``alpha``.

    Normalization: ``W(α) = (2/π) Tr[O D(α) Π D(α)^†]`` with ``∫ W d²α = Tr O``.
    """
    R = np.asarray(R, dtype=complex)
    alpha = np.asarray(alpha, dtype=complex)
    Rmm, Rmc, Rcm, Rcc = R[:2, :2], R[:2, 2:], R[2:, :2], R[2:, 2:]
    X = exchange_matrix(1)
    eye = np.eye(2)
    M = eye + X @ Rmm
    Minv = np.linalg.inv(M)
    L = Minv @ (eye - X @ Rmm)
    A = Rcc - Rcm @ Minv @ X @ Rmc
    A = (A + A.T) / 2
    v = np.stack([np.conj(alpha), alpha])  # (2, *grid)
    XL = X @ L
    XL = (XL + XL.T) / 2
    quad = np.einsum("i...,ij,j...->...", v, XL, v)
    z = 2 * np.einsum("ij,j...->i...", Rcm @ Minv, v)
    G = fock_coefficients(A, (n2 + 1, n2 + 1), z)[n2, n2]
    pref = 2 * P0 / (math.pi * np.sqrt(np.linalg.det(M)))
    return np.real(pref * np.exp(-quad) * G)
