"""Optical readout of a heralded mechanical state by a second, red-detuned pulse."""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np
from numpy.typing import NDArray
from scipy.special import gammaln

from qngherald import hiprec
from qngherald.bargmann import fock_diagonal_from_cm
from qngherald.cavity import PulseSpec, effective_rate
from qngherald.engines import Engine, pulse_map
from qngherald.errors import ConfigError, NumericalError, TruncationError
from qngherald.gaussian import Detuning, SystemParams, mode_block
from qngherald.herald import ConditionalState

NORM_TOL = 1e-8
NEG_TOL = 1e-8


@dataclass(frozen=True)
class PhotonStats:
    """Photon-count distribution ``p(0..N)`` or density matrix ``p_{ij}`` of the readout mode."""

    p: NDArray
    eta_applied: float = 1.0

    @property
    def is_matrix(self) -> bool:
        return np.ndim(self.p) == 2

    @property
    def diagonal(self) -> NDArray[np.float64]:
        return np.real(np.diagonal(self.p)) if self.is_matrix else np.asarray(self.p, dtype=float)

    def __getitem__(self, n: int) -> float:
        return float(self.diagonal[n])


def _check_eta(eta: float) -> None:
    if not (0.0 <= eta <= 1.0):
        raise ConfigError(f"must lie in [0, 1], got {eta!r}", path="eta")


def _loss_matrix(eta: float, size: int) -> NDArray[np.float64]:
    # B[i, k] = C(k, i) η^i (1-η)^{k-i}, in log space so tiny η cannot overflow
    if eta == 1.0:
        return np.eye(size)
    if eta == 0.0:
        B = np.zeros((size, size))
        B[0] = 1.0
        return B
    i, k = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    with np.errstate(invalid="ignore"):
        logb = gammaln(k + 1) - gammaln(i + 1) - gammaln(np.abs(k - i) + 1) + i * math.log(eta) + (k - i) * math.log1p(-eta)
    return np.where(i <= k, np.exp(logb), 0.0)


def loss_map(stats: PhotonStats, eta: float) -> PhotonStats:
    """Pass the readout light through a beam splitter of transmissivity ``eta``."""
    _check_eta(eta)
    if stats.is_matrix:
        return PhotonStats(loss_map_matrix(stats.p, eta), stats.eta_applied * eta)
    p = np.asarray(stats.p, dtype=float)
    return PhotonStats(_loss_matrix(eta, p.size) @ p, stats.eta_applied * eta)


def loss_map_matrix(rho: NDArray, eta: float) -> NDArray[np.complex128]:
    """Loss channel on a Fock-basis density matrix, including coherences."""
    _check_eta(eta)
    rho = np.asarray(rho, dtype=complex)
    size = rho.shape[0]
    out = np.zeros_like(rho)
    if eta == 0:
        out[0, 0] = np.trace(rho)
        return out
    lf = gammaln(np.arange(size) + 1)
    for i in range(size):
        for j in range(size):
            lmax = size - max(i, j)
            l = np.arange(lmax)
            logc = 0.5 * (lf[i + l] + lf[j + l] - lf[i] - lf[j]) - lf[l] + 0.5 * (i + j) * math.log(eta)
            if eta < 1:
                logc = logc + l * math.log1p(-eta)
            else:
                logc = np.where(l == 0, logc, -np.inf)
            out[i, j] = np.sum(np.exp(logc) * rho[i + l, j + l])
    return out


def swap_time(params: SystemParams) -> float:
    """Beam-splitter time ``π / (2|G⁻|)`` that swaps mechanics onto the light."""
    G = effective_rate(params, Detuning.RED)
    if abs(G) < 1e-12:
        raise NumericalError("G- vanishes at g = (kappa - gamma)/2: no state swap")
    return math.pi / (2 * abs(G))


def readout_probabilities(
    state: ConditionalState,
    params: SystemParams,
    tau2: float,
    *,
    g: float | None = None,
    eta: float = 1.0,
    nmax: int = 30,
    engine: Engine | str = Engine.RWA,
) -> PhotonStats:
    """Photon-number distribution of the readout pulse, after detector loss ``eta``.

    Each Gaussian component of ``state`` is propagated through a red-detuned pulse
    of length ``tau2`` (coupling ``g``, default the system's); the mechanics is
    traced out and the optical marginals are summed with the signed weights.
    """
    _check_eta(eta)
    pm = pulse_map(params, PulseSpec(tau2, Detuning.RED, g), engine)
    if state.exact is not None:
        with mp.workdps(hiprec.DPS):
            K, N = hiprec.to_mp(pm.K), hiprec.to_mp(pm.N)
            acc = [mp.mpf(0)] * (nmax + 1)
            for w, cm in state.exact:
                V = hiprec.apply_map(K, N, cm)
                opt = mp.matrix([[V[1, 1], V[1, 3]], [V[3, 1], V[3, 3]]])
                acc = [a + w * x for a, x in zip(acc, hiprec.fock_diagonal(opt, nmax))]
            p = np.array([float(a) for a in acc])
    else:
        p = sum(c.weight * fock_diagonal_from_cm(mode_block(pm.apply(c.cm), 1), nmax) for c in state.components)
    p = np.asarray(p, dtype=float)
    if p.min() < -NEG_TOL:
        raise NumericalError(f"negative readout probability {p.min():.3e}")
    if abs(1 - p.sum()) > NORM_TOL:
        raise TruncationError(f"readout distribution sums to {p.sum():.10f} at nmax={nmax}")
    stats = PhotonStats(p)
    return loss_map(stats, eta) if eta < 1 else stats
