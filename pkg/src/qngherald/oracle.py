"""Brute-force validator for heralded states, independent of the Bargmann machinery.

Works entirely in phase space:

* the joint Gaussian Wigner function of the mechanics and ``j`` detected modes is
  multiplied by the Wigner function of ``Π₀(η)`` (a Gaussian) on a subset of the
  optical modes and integrated analytically (Schur complements);
* a click on every detector is assembled by inclusion–exclusion over subsets;
* mechanical Fock matrix elements are overlaps with Laguerre Wigner functions,
  evaluated by Gauss–Hermite (or polar Gauss–Laguerre) quadrature.
"""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.special import eval_genlaguerre, gammaln

from qngherald.errors import ConfigError, NoClickSupport, TruncationError
from qngherald.gaussian import fields_to_quadratures
from qngherald.lyapunov import PulseMap

DEFICIT_MAX = 1e-6


def joint_cm_sequence(init_cm: NDArray, maps: Sequence[PulseMap]) -> NDArray[np.complex128]:
    """Field CM of ``(b, A_1, ..., A_j)`` after applying ``maps`` in order.

    Ordering: ``[b^†, A_1^†, ..., A_j^†, b, A_1, ..., A_j]``.
    """
    V = np.asarray(init_cm, dtype=complex)
    for pm in maps:
        m = V.shape[0] // 2  # modes so far
        n = m + 1
        T = np.zeros((2 * n, 2 * m), dtype=complex)
        # new fields: b† (0), A_old† (1..m-1), A_new† (m), b (n), A_old (n+1..n+m-1), A_new (n+m)
        rows_out = [0, m, n, n + m]  # b†, A_new†, b, A_new
        T[np.ix_(rows_out, [0, m])] = pm.K
        for i in range(1, m):
            T[i, i] = 1.0
            T[n + i, m + i] = 1.0
        Nfull = np.zeros((2 * n, 2 * n), dtype=complex)
        Nfull[np.ix_(rows_out, rows_out)] = pm.N
        V = T @ V @ T.conj().T + Nfull
        V = (V + V.conj().T) / 2
    return V


def _noclick_factor(eta: float) -> float:
    """``c`` in ``W_Π₀(ξ) = exp(-c|ξ|²/2) / (π(2-η))`` (xp measure)."""
    return 2 * eta / (2 - eta)


def conditioned_gaussians(
    V: NDArray, eta: float | Sequence[float], condition: bool = True
) -> list[tuple[float, NDArray[np.float64]]]:
    """Signed ``(weight, mech xp covariance)`` terms of the unnormalized mech Wigner.

    With ``condition=False`` the optical modes are simply traced out.
    """
    Vq = fields_to_quadratures(V)
    n = Vq.shape[0] // 2
    j = n - 1
    etas = [eta] * j if np.isscalar(eta) else list(eta)
    if len(etas) != j:
        raise ConfigError("need one efficiency per detected mode", path="eta")
    m_idx = [0, n]  # p, x of the mechanics
    mm = Vq[np.ix_(m_idx, m_idx)]
    if not condition:
        return [(1.0, mm)]
    terms = []
    for S in itertools.chain.from_iterable(itertools.combinations(range(j), k) for k in range(j + 1)):
        sign = (-1) ** len(S)
        live = [k for k in S if etas[k] > 0]
        if not live:
            terms.append((sign * 1.0, mm))
            continue
        o_idx = [1 + k for k in live] + [n + 1 + k for k in live]
        c = np.array([_noclick_factor(etas[k]) for k in live] * 2)
        pref = np.prod([2 / (2 - etas[k]) for k in live])
        oo = Vq[np.ix_(o_idx, o_idx)]
        mo = Vq[np.ix_(m_idx, o_idx)]
        A = oo + np.diag(1 / c)
        prob = pref / math.sqrt(np.linalg.det(np.eye(len(o_idx)) + c[:, None] * oo))
        cov = mm - mo @ np.linalg.solve(A, mo.T)
        terms.append((sign * prob, (cov + cov.T) / 2))
    return terms


def _op_wigner_poly(alpha: NDArray, nmax: int) -> NDArray[np.complex128]:
    """``F[m, n](α)`` with ``W_{|m><n|}(α) = F[m, n] · e^{-2|α|²}`` (α measure)."""
    r2 = 4 * np.abs(alpha) ** 2
    F = np.zeros((nmax + 1, nmax + 1) + alpha.shape, dtype=complex)
    for m in range(nmax + 1):
        for n in range(nmax + 1):
            if m >= n:
                k, d, z = n, m - n, 2 * np.conj(alpha)
            else:
                k, d, z = m, n - m, 2 * alpha
            coef = math.exp(0.5 * (gammaln(k + 1) - gammaln(k + d + 1)))
            F[m, n] = (2 / math.pi) * (-1) ** k * coef * z**d * eval_genlaguerre(k, d, r2)
    return F


def _gaussian_fock_hermite(cov: NDArray, nmax: int, order: int) -> NDArray[np.complex128]:
    """``<m|ρ|n>`` of the normalized Gaussian with xp covariance ``cov`` ([p, x])."""
    Lam = np.linalg.inv(cov) + 2 * np.eye(2)
    L = np.linalg.cholesky(Lam)
    u, w = np.polynomial.hermite.hermgauss(order)
    U1, U2 = np.meshgrid(u, u, indexing="ij")
    Wt = np.outer(w, w)
    Linv_T = np.linalg.inv(L).T
    xi = math.sqrt(2) * np.einsum("ij,j...->i...", Linv_T, np.stack([U1, U2]))
    p, x = xi[0], xi[1]
    alpha = (x + 1j * p) / math.sqrt(2)
    jac = 2 / np.prod(np.diag(L))
    norm = 1 / (2 * math.pi * math.sqrt(np.linalg.det(cov)))
    F = _op_wigner_poly(alpha, nmax)
    # <m|ρ|n> = π ∫ W_xp(ξ) W_{|n><m|}(α(ξ)) dξ
    return math.pi * norm * jac * np.einsum("nmij,ij->mn", F, Wt)


def _gaussian_fock_polar(cov: NDArray, nmax: int, order: int) -> NDArray[np.float64]:
    """Diagonal only: polar Gauss–Laguerre in ``r²`` times a uniform angle rule."""
    Ci = np.linalg.inv(cov)
    t, wt = np.polynomial.laguerre.laggauss(order)
    nth = 4 * order
    th = 2 * math.pi * np.arange(nth) / nth
    out = np.zeros(nmax + 1)
    norm = 1 / (2 * math.pi * math.sqrt(np.linalg.det(cov)))
    for a in th:
        e = np.array([math.sin(a), math.cos(a)])  # [p, x]
        s = 0.5 * e @ Ci @ e + 1.0  # exponent coefficient for r²
        r2 = t / s
        alpha2 = r2 / 2
        for n in range(nmax + 1):
            f = (2 / math.pi) * (-1) ** n * eval_genlaguerre(n, 0, 4 * alpha2)
            # ∫ r dr = ½ ∫ d(r²)
            out[n] += 0.5 * np.sum(wt * f) / s * (2 * math.pi / nth)
    return math.pi * norm * out


def gaussian_fock_matrix(cov: NDArray, nmax: int, method: str = "hermite", order: int | None = None):
    order = order or (nmax + 24)
    if method == "hermite":
        return _gaussian_fock_hermite(cov, nmax, order)
    if method == "polar":
        return np.diag(_gaussian_fock_polar(cov, nmax, order)).astype(complex)
    raise ConfigError(f"unknown quadrature {method!r}", path="method")


def fock_oracle(
    V: NDArray,
    eta: float | Sequence[float] = 1.0,
    ntrunc: int = 40,
    *,
    condition: bool = True,
    method: str = "hermite",
    max_deficit: float = DEFICIT_MAX,
) -> NDArray[np.complex128]:
    """Mechanical density matrix (``ntrunc+1`` square) after clicks on all detected modes.

    ``V`` is a field CM over ``(b, A_1, ..., A_j)``; see :func:`joint_cm_sequence`.
    Each retained element is exact whatever ``ntrunc`` is; ``max_deficit`` only bounds
    the probability left above the cut.
    """
    if ntrunc < 20:
        raise ConfigError("oracle truncation must be >= 20", path="ntrunc")
    terms = conditioned_gaussians(np.asarray(V), eta, condition)
    total = sum(w for w, _ in terms)
    if total <= 1e-12:
        raise NoClickSupport(f"click probability {total:.3e} vanishes")
    rho = sum(w * gaussian_fock_matrix(cov, ntrunc, method) for w, cov in terms) / total
    deficit = 1 - np.real(np.trace(rho))
    if abs(deficit) > max_deficit:
        raise TruncationError(f"oracle trace deficit {deficit:.2e} at ntrunc={ntrunc}")
    return rho
