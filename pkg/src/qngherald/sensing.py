"""Phase-randomized displacement sensing with Fock-resolving detection."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.typing import NDArray

from qngherald.criteria import displaced_squeezed_elements
from qngherald.errors import ConfigError, TruncationError
from qngherald.herald import FockDistribution

M_DEFAULT = 500
TAIL_MAX = 1e-8
UNDERFLOW = 1e-250


def _as_q(dist) -> NDArray[np.float64]:
    q = np.asarray(dist.q if isinstance(dist, FockDistribution) else dist, dtype=float)
    if q.ndim != 1 or q.min() < -1e-10 or abs(q.sum() - 1) > 1e-6:
        raise ConfigError("probe must be a normalized Fock distribution", path="dist")
    return q


def _output_size(q: NDArray, Nc: float) -> int:
    # displacement spreads |m> over ~2√(m Nc) levels
    return q.size + math.ceil(10 + 5 * Nc + 4 * math.sqrt(q.size * Nc))


def _displacement(Nc: float, nout: int, m: int) -> NDArray[np.float64]:
    # <n|D(√Nc)|k> is real for a real displacement
    return np.real(displaced_squeezed_elements(math.sqrt(Nc), 0.0, nout, m))


def prd_channel(dist, Nc: float) -> NDArray[np.float64]:
    """Output photon statistics after a displacement of energy ``Nc`` with uniformly random phase."""
    if not (np.isfinite(Nc) and Nc >= 0):
        raise ConfigError(f"must be >= 0, got {Nc!r}", path="Nc")
    q = _as_q(dist)
    size = _output_size(q, Nc)
    d = _displacement(Nc, size - 1, q.size - 1)
    p = (d**2) @ q
    if 1 - p.sum() > TAIL_MAX:
        raise TruncationError(f"displaced distribution leaks {1 - p.sum():.2e} beyond n={size - 1}")
    return p


def prd_derivative(dist, Nc: float) -> NDArray[np.float64]:
    """``∂p_f(n|Nc)/∂Nc`` from ``∂D(α)/∂α = (b^† - b) D(α)`` at real ``α = √Nc``."""
    if not (Nc > 0):
        raise ConfigError(f"derivative needs Nc > 0, got {Nc!r}", path="Nc")
    q = _as_q(dist)
    size = _output_size(q, Nc)
    d = _displacement(Nc, size, q.size - 1)
    n = np.arange(size)[:, None]
    dd = np.sqrt(n) * np.vstack([np.zeros((1, q.size)), d[: size - 1]]) - np.sqrt(n + 1) * d[1 : size + 1]
    return (2 * d[:size] * dd) @ q / (2 * math.sqrt(Nc))


def _fisher_from(p: NDArray, dp: NDArray, kmax: int) -> float:
    pk, dk = p[: kmax + 1].copy(), dp[: kmax + 1].copy()
    low = pk < UNDERFLOW
    if low.any():
        warnings.warn(f"merging {int(low.sum())} underflowing bins into the lump term", stacklevel=3)
    keep = ~low
    F = float(np.sum(dk[keep] ** 2 / pk[keep]))
    lump = 1 - pk[keep].sum()
    dlump = -dk[keep].sum()
    if lump > UNDERFLOW:
        F += dlump**2 / lump
    return F


def fisher(dist, Nc: float, kmax: int) -> float:
    """Fisher information about ``Nc`` of the POVM ``{|0>..|kmax>, rest}``.

    ``dist`` is either a probe distribution (analytic derivative) or a callable
    ``Nc -> p_f`` (central differences).
    """
    if kmax < 0:
        raise ConfigError(f"must be >= 0, got {kmax!r}", path="kmax")
    if not (Nc > 0):
        raise ConfigError(f"must be > 0, got {Nc!r}", path="Nc")
    if callable(dist):
        h = max(1e-6, 1e-3 * Nc)
        h = min(h, 0.5 * Nc)
        p = np.asarray(dist(Nc), dtype=float)
        hi, lo = np.asarray(dist(Nc + h)), np.asarray(dist(Nc - h))
        k = min(p.size, hi.size, lo.size)
        dp = (hi[:k] - lo[:k]) / (2 * h)
        return _fisher_from(np.pad(p[:k], (0, max(0, kmax + 1 - k))), np.pad(dp, (0, max(0, kmax + 1 - k))), kmax)
    return _fisher_from(prd_channel(dist, Nc), prd_derivative(dist, Nc), kmax)


def crb(F: float, M: int = M_DEFAULT) -> float:
    """Cramér–Rao error ``(M F)^{-1/2}``; ``inf`` flags a probe with no information."""
    if M < 1:
        raise ConfigError(f"must be >= 1, got {M!r}", path="M")
    if F < 0 or not np.isfinite(F):
        raise ConfigError(f"Fisher information must be finite and >= 0, got {F!r}", path="F")
    return math.inf if F == 0 else 1 / math.sqrt(M * F)


@dataclass(frozen=True)
class SensingResult:
    Nc_grid: NDArray[np.float64]
    F: NDArray[np.float64]
    error: NDArray[np.float64]
    M: int
    kmax: int

    @property
    def unbounded(self) -> NDArray[np.bool_]:
        return ~np.isfinite(self.error)


def sensing_scan(dist, Nc_grid: Sequence[float], kmax: int = 2, M: int = M_DEFAULT) -> SensingResult:
    grid = np.asarray(Nc_grid, dtype=float)
    F = np.array([fisher(dist, float(N), kmax) for N in grid])
    err = np.array([crb(f, M) for f in F])
    return SensingResult(grid, F, err, M, kmax)


def probe_function(dist) -> Callable[[float], NDArray[np.float64]]:
    """``Nc -> p_f(.|Nc)`` closure, handy for the finite-difference route."""
    q = _as_q(dist)
    return lambda Nc: prd_channel(q, Nc)
