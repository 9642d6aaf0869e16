"""Cavityless pulses: position readout through a rectangular temporal mode.

    ẋ = ω_m p,   ṗ = -ω_m x - γ p + ξ + √(4Γ) X_in,
    𝒳_out = 𝒳_in,   𝒴_out = 𝒴_in + √(4Γ/τ) ∫₀^τ x ds.

The mechanics and the two accumulators ``I = ∫x`` and ``𝒳_acc = ∫X_in/√τ`` form a
linear SDE with constant coefficients, so the covariance at ``τ`` follows from one
Van Loan matrix exponential.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from qngherald.cavity import _cosh_sinhc
from qngherald.errors import ConfigError, IntegrationError
from qngherald.gaussian import (
    MechInitState,
    SystemParams,
    fields_to_quadratures,
    mech_initial_cm,
    omega_matrix,
)
from qngherald.lyapunov import PulseMap

# augmented state order
_P, _X, _I, _XA = range(4)


def _mech_drift(params: SystemParams) -> NDArray[np.float64]:
    w, g = params.omega_m, params.gamma
    return np.array([[-g, -w], [w, 0.0]])


def freespace_propagator(params: SystemParams, tau: float) -> NDArray[np.float64]:
    """Damped-oscillator propagator on ``[p, 𝒴, x, 𝒳]`` (identity on the optical slots).

    Closed form ``e^{-γτ/2} [cos Ωτ · I + sin(Ωτ)/Ω · (A + γ/2)]`` with
    ``Ω = ½√(4ω_m² - γ²)``, continued to ``cosh``/``sinh`` when overdamped.
    """
    if tau < 0:
        raise ConfigError("must be >= 0", path="tau")
    A = _mech_drift(params)
    G = cmath.sqrt(params.gamma**2 / 4 - params.omega_m**2)
    c, s = _cosh_sinhc(G, tau)
    m = math.exp(-params.gamma * tau / 2) * (c * np.eye(2) + s * (A + params.gamma / 2 * np.eye(2)))
    M = np.eye(4)
    idx = [0, 2]
    M[np.ix_(idx, idx)] = m
    return M


def _augmented(params: SystemParams, tau: float) -> tuple[NDArray, NDArray]:
    A = np.zeros((4, 4))
    A[:2, :2] = _mech_drift(params)
    A[_I, _X] = 1.0
    D = np.zeros((4, 4))
    G = params.Gamma_ba
    D[_P, _P] = 2 * params.gamma * (params.nbar + 0.5) + 2 * G
    D[_P, _XA] = D[_XA, _P] = math.sqrt(4 * G) / (2 * math.sqrt(tau))
    D[_XA, _XA] = 1 / (2 * tau)
    return A, D


def _van_loan(A: NDArray, D: NDArray, tau: float) -> tuple[NDArray, NDArray]:
    n = A.shape[0]
    H = np.zeros((2 * n, 2 * n))
    H[:n, :n] = -A
    H[:n, n:] = D
    H[n:, n:] = A.T
    E = expm(H * tau)
    Phi = E[n:, n:].T
    Q = Phi @ E[:n, n:]
    return Phi, (Q + Q.T) / 2


def _output_map(params: SystemParams, tau: float, Phi: NDArray, Q: NDArray) -> tuple[NDArray, NDArray]:
    """Quadrature-space ``(K_q, N_q)`` from mech ``[p, x]`` to ``[p, 𝒴, x, 𝒳]``."""
    c = math.sqrt(4 * params.Gamma_ba / tau)
    # outputs as rows over augmented state [p, x, I, 𝒳acc]
    L = np.zeros((4, 4))
    L[0, _P] = 1.0
    L[1, _I] = c
    L[2, _X] = 1.0
    L[3, _XA] = 1.0
    Kq = (L @ Phi)[:, :2]
    Nq = L @ Q @ L.T
    Nq[1, 1] += 0.5  # 𝒴_in
    return Kq, Nq


def pulse_map_freespace(params: SystemParams, tau: float) -> PulseMap:
    """Field-space CM map of one cavityless pulse."""
    if not (np.isfinite(tau) and tau > 0):
        raise ConfigError(f"must be > 0, got {tau!r}", path="tau")
    A, D = _augmented(params, tau)
    Phi, Q = _van_loan(A, D, tau)
    Kq, Nq = _output_map(params, tau, Phi, Q)
    O4, O2 = omega_matrix(2), omega_matrix(1)
    K = O4.conj().T @ Kq @ O2
    N = O4.conj().T @ Nq @ O4
    return PulseMap(K, (N + N.conj().T) / 2, "freespace")


def propagate_freespace(params: SystemParams, tau: float, init: MechInitState) -> NDArray[np.float64]:
    """Quadrature CM over ``[p, 𝒴_out, x, 𝒳_out]`` after a cavityless pulse."""
    V = pulse_map_freespace(params, tau).apply(mech_initial_cm(init))
    Vq = fields_to_quadratures(V)
    Vq[3, 3] = 0.5
    return Vq


def propagate_freespace_ode(params: SystemParams, tau: float, init: MechInitState) -> NDArray[np.float64]:
    """Cross-check: integrate the augmented Lyapunov ODE instead of the exponential."""
    A, D = _augmented(params, tau)
    Vm = fields_to_quadratures(mech_initial_cm(init))  # [p, x]
    C0 = np.zeros((4, 4))
    C0[:2, :2] = Vm

    def rhs(t, y):
        C = y.reshape(4, 4)
        return (A @ C + C @ A.T + D).ravel()

    sol = solve_ivp(rhs, (0, tau), C0.ravel(), method="DOP853", rtol=1e-11, atol=1e-13)
    if not sol.success:
        raise IntegrationError(sol.message)
    C = sol.y[:, -1].reshape(4, 4)
    c = math.sqrt(4 * params.Gamma_ba / tau)
    L = np.zeros((4, 4))
    L[0, _P], L[1, _I], L[2, _X], L[3, _XA] = 1.0, c, 1.0, 1.0
    out = L @ C @ L.T
    out[1, 1] += 0.5
    return (out + out.T) / 2
