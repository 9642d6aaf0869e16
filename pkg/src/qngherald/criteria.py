"""Quantum non-Gaussianity thresholds, witnesses, thermalization and depths."""

from __future__ import annotations

import enum
import functools
import math
import warnings
from dataclasses import dataclass

import mpmath as mp
import numpy as np
from numpy.typing import NDArray
from scipy.linalg import expm
from scipy.optimize import minimize

from qngherald import hiprec
from qngherald.bargmann import fock_coefficients
from qngherald.errors import ConfigError, NumericalError, TruncationError
from qngherald.herald import FOCK, Basis, ConditionalState, FockDistribution, GaussianComponent, PendingClick

THRESHOLD_STARTS = 64
THRESHOLD_SEED = 20240611

# ---------------------------------------------------------------------------
# Gaussian-unitary matrix elements


def displaced_squeezed_elements(alpha: complex, xi: complex, nmax: int, kmax: int | None = None) -> NDArray[np.complex128]:
    """``<m|D(α) S(ξ)|k>`` for ``m ≤ nmax``, ``k ≤ kmax`` (exact, no Fock truncation).

    ``S(ξ) = exp[(ξ^* b² - ξ b^{†2})/2]``.  Uses the generating function
    ``<β|D S|γ> ∝ exp(const + bᵀw + ½ wᵀ A w)`` with ``w = (β^*, γ)``.
    """
    kmax = nmax if kmax is None else kmax
    r = abs(xi)
    e = xi / r if r > 0 else 1.0
    th, sech = math.tanh(r), 1 / math.cosh(r)
    A = np.array([[-e * th, sech], [sech, np.conj(e) * th]])
    b = np.array([alpha + e * th * np.conj(alpha), -sech * np.conj(alpha)])
    const = -0.5 * abs(alpha) ** 2 - 0.5 * e * th * np.conj(alpha) ** 2
    G = fock_coefficients(A, (nmax + 1, kmax + 1), b)
    return np.exp(const) * math.sqrt(sech) * G


def gaussian_fock_overlap(n: int, alpha: complex, xi: complex, c) -> float:
    """``|<n| D(α) S(ξ) Σ_k c_k |k>|²`` for a normalized coefficient vector ``c``."""
    c = np.asarray(c, dtype=complex)
    nc = np.linalg.norm(c)
    if nc == 0:
        raise ConfigError("coefficient vector must be non-zero", path="c")
    row = displaced_squeezed_elements(alpha, xi, n, len(c) - 1)[n]
    return float(abs(row @ (c / nc)) ** 2)


def _objective(n: int, x: NDArray) -> float:
    a, r, th = x
    el = displaced_squeezed_elements(a, r * np.exp(1j * th), n, n - 1)[n]
    return float(np.sum(np.abs(el) ** 2))


@dataclass(frozen=True)
class ThresholdResult:
    n: int
    value: float
    alpha: float
    r: float
    theta: float
    starts: int


@functools.lru_cache(maxsize=32)
def qng_threshold_result(n: int, starts: int = THRESHOLD_STARTS, seed: int = THRESHOLD_SEED) -> ThresholdResult:
    """Largest ``Q_n`` reachable by Gaussian-processed superpositions of ``|0..n-1>``.

    For fixed ``(α, ξ)`` the best superposition is the normalized conjugate of the
    row ``<n|D S|k>_{k<n}``, so the ``c_k`` maximization reduces to the row norm.
    A joint phase rotation removes one parameter, leaving ``α ≥ 0``, ``r ≥ 0`` and
    the squeezing phase; these are searched with Nelder–Mead from random starts.
    """
    if n < 1:
        raise ConfigError("threshold order must be >= 1", path="n")
    if n > 5:
        warnings.warn(f"threshold n={n} lies outside the tabulated range 1..5", stacklevel=2)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(starts):
        x0 = np.array([rng.uniform(0, 2.5), rng.uniform(0, 1.5), rng.uniform(0, 2 * np.pi)])
        res = minimize(
            lambda x: -_objective(n, x) if x[0] >= 0 and x[1] >= 0 else 0.0,
            x0,
            method="Nelder-Mead",
            options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 4000},
        )
        if best is None or res.fun < best.fun:
            best = res
    if best is None or not np.isfinite(best.fun):
        raise NumericalError("threshold optimizer failed for every start")
    a, r, th = best.x
    return ThresholdResult(n, -float(best.fun), float(a), float(r), float(th % (2 * np.pi)), starts)


def qng_threshold(n: int, starts: int = THRESHOLD_STARTS, seed: int = THRESHOLD_SEED) -> float:
    return qng_threshold_result(n, starts, seed).value


# ---------------------------------------------------------------------------
# witnesses


@dataclass(frozen=True)
class WitnessVerdict:
    n: int
    q: float
    threshold: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.q - self.threshold


def qng_witness(dist: FockDistribution, n: int, threshold: float | None = None) -> WitnessVerdict:
    if n > dist.nmax:
        raise ConfigError(f"n={n} exceeds the distribution truncation {dist.nmax}", path="n")
    thr = qng_threshold(n) if threshold is None else threshold
    q = dist[n]
    return WitnessVerdict(n, q, thr, q > thr)


@dataclass(frozen=True)
class NonclassicalityVerdict:
    ineq1: bool
    ineq2: bool
    lhs1: float  # Q1² - 2 Q0 Q2
    lhs2: float  # Q0 + Q1²/(2Q2) (e^{2Q2/Q1} - 1) - 1

    @property
    def any(self) -> bool:
        return self.ineq1 or self.ineq2


def nonclassicality(Q0: float, Q1: float, Q2: float) -> NonclassicalityVerdict:
    """Two Fock-probability criteria; either one being true certifies nonclassicality."""
    for name, v in (("Q0", Q0), ("Q1", Q1), ("Q2", Q2)):
        if not (-1e-12 <= v <= 1 + 1e-12):
            raise ConfigError(f"must lie in [0, 1], got {v!r}", path=name)
    lhs1 = Q1 * Q1 - 2 * Q0 * Q2
    if Q2 <= 0:
        s = Q0 + Q1 - 1  # Q2 → 0 limit
    elif Q1 <= 0:
        s = math.inf
    else:
        x = 2 * Q2 / Q1
        s = (Q0 + Q1 * math.expm1(x) / x - 1) if x < 700 else math.inf
    return NonclassicalityVerdict(lhs1 > 0, s > 0, lhs1, s)


@dataclass(frozen=True)
class WitnessReport:
    qng: tuple[WitnessVerdict, ...]
    nonclassical: NonclassicalityVerdict
    basis: str = "fock"

    def passed(self, n: int) -> bool:
        return next(v.passed for v in self.qng if v.n == n)


def witness_report(dist: FockDistribution, orders=(1, 2, 3, 4, 5)) -> WitnessReport:
    verdicts = tuple(qng_witness(dist, n) for n in orders if n <= dist.nmax)
    nc = nonclassicality(max(dist[0], 0.0), max(dist[1], 0.0), max(dist[2], 0.0))
    return WitnessReport(verdicts, nc, dist.basis.kind)


# ---------------------------------------------------------------------------
# thermalization

NMAX_DEFAULT = 60
TOP_MAX = 1e-10  # top-level population that triggers a doubling
TOP_ERROR = 1e-6
NMAX_CAP = 480


def _sector_generator(k: int, nmax: int, gamma: float, nbar: float) -> NDArray[np.float64]:
    """Tridiagonal generator acting on ``ρ_{n, n+k}``, ``n = 0..nmax-k``, with truncated ladder operators."""
    size = nmax - k + 1
    up = gamma * (nbar + 1)
    dn = gamma * nbar
    n = np.arange(size)
    m = n + k
    bbdag = np.where(np.arange(nmax + 1) < nmax, np.arange(nmax + 1) + 1.0, 0.0)
    diag = -0.5 * up * (n + m) - 0.5 * dn * (bbdag[n] + bbdag[m])
    sup = up * np.sqrt((n[:-1] + 1.0) * (m[:-1] + 1.0))
    sub = dn * np.sqrt(n[1:] * m[1:].astype(float))
    return np.diag(diag) + np.diag(sup, 1) + np.diag(sub, -1)


def lindblad_evolve(rho: NDArray, gamma: float, nbar: float, t: float, nmax: int | None = None) -> NDArray[np.complex128]:
    """Thermalize a Fock-basis density matrix for time ``t``.

    ``dρ/dt = γ(n̄+1) D[b]ρ + γ n̄ D[b^†]ρ``.  Each off-diagonal sector ``ρ_{n,n+k}``
    evolves independently under a tridiagonal generator and is propagated by an exact
    matrix exponential; empty sectors are skipped.
    The truncation doubles while the top level holds more than ``TOP_MAX``.
    """
    rho = np.asarray(rho, dtype=complex)
    if gamma < 0 or nbar < 0 or t < 0:
        raise ConfigError("gamma, nbar and t must be >= 0")
    nmax = max(nmax or 0, rho.shape[0] - 1)
    while True:
        R = np.zeros((nmax + 1, nmax + 1), dtype=complex)
        s = rho.shape[0]
        R[:s, :s] = rho
        out = np.zeros_like(R)
        for k in range(nmax + 1):
            idx = np.arange(nmax - k + 1)
            v = R[idx, idx + k]
            if not v.any():
                continue
            out[idx, idx + k] = expm(_sector_generator(k, nmax, gamma, nbar) * t) @ v
            if k:
                out[idx + k, idx] = np.conj(out[idx, idx + k])
        top = abs(out[nmax, nmax])
        if top <= TOP_MAX:
            return out
        if nmax >= NMAX_CAP:
            if top > TOP_ERROR:
                raise TruncationError(f"population {top:.2e} reaches the top Fock level {nmax}")
            return out
        nmax = min(2 * nmax, NMAX_CAP)


def thermalize(state: ConditionalState, gamma: float, nbar: float, t: float) -> ConditionalState:
    """Same channel as :func:`lindblad_evolve`, applied to each Gaussian component.

    On covariance matrices the thermal channel reads ``V -> e^{-γt} V + (1 - e^{-γt})(n̄ + ½) I``.
    """
    if gamma < 0 or nbar < 0 or t < 0:
        raise ConfigError("gamma, nbar and t must be >= 0")
    e = math.exp(-gamma * t)
    add = (1 - e) * (nbar + 0.5)
    comps = tuple(GaussianComponent(c.weight, e * c.cm + add * np.eye(2)) for c in state.components)
    pending = None
    if state.pending is not None:
        s = np.diag([math.sqrt(e), 1.0, math.sqrt(e), 1.0])
        N = np.diag([add, 0.0, add, 0.0])
        pending = tuple(PendingClick(p.weight, s @ p.V @ s + N, p.eta) for p in state.pending)
    exact = None
    if state.exact is not None:
        with mp.workdps(hiprec.DPS):
            em = mp.exp(-mp.mpf(gamma) * mp.mpf(t))
            am = (1 - em) * (mp.mpf(nbar) + mp.mpf(1) / 2)
            exact = tuple((w, em * cm + am * mp.eye(2)) for w, cm in state.exact)
    return ConditionalState(comps, state.norm, pending, state.pending_norm, exact)


# ---------------------------------------------------------------------------
# depth


class WitnessKind(str, enum.Enum):
    QNG = "qng"
    NONCLASSICAL = "nonclassical"


@dataclass(frozen=True)
class Witness:
    kind: WitnessKind = WitnessKind.QNG
    n: int = 1

    def __post_init__(self):
        if not isinstance(self.kind, WitnessKind):
            object.__setattr__(self, "kind", WitnessKind(self.kind))

    def holds(self, q: NDArray) -> bool:
        q = np.real(q)
        if self.kind is WitnessKind.QNG:
            return bool(q[self.n] > qng_threshold(self.n))
        return nonclassicality(*(float(np.clip(v, 0, 1)) for v in q[:3])).any

    def __str__(self) -> str:
        return f"QNG({self.n})" if self.kind is WitnessKind.QNG else "Nonclassical"


@dataclass(frozen=True)
class DepthResult:
    d: float
    witness: str
    bracket: tuple[float, float]
    passed_initially: bool = True
    unbounded: bool = False
    gamma: float = 1.0
    nbar: float = 100.0


def fock_state_matrix(n: int, nmax: int = NMAX_DEFAULT) -> NDArray[np.complex128]:
    rho = np.zeros((nmax + 1, nmax + 1), dtype=complex)
    rho[n, n] = 1.0
    return rho


def depth(
    state: ConditionalState | NDArray,
    witness: Witness,
    *,
    basis: Basis = FOCK,
    method: str = "auto",
    gamma: float = 1.0,
    nbar: float = 100.0,
    nmax: int = NMAX_DEFAULT,
    rtol: float = 1e-4,
    d_max: float = 20.0,
) -> DepthResult:
    """Thermal quanta ``d = γ n̄ t*`` absorbed before ``witness`` stops holding.

    ``method="lindblad"`` evolves the Fock-basis density matrix; ``"gaussian"``
    thermalizes each mixture component and is required for squeezed-Fock witnesses.
    """
    if gamma <= 0 or nbar <= 0:
        raise ConfigError("depth needs gamma > 0 and nbar > 0")
    if method not in ("auto", "lindblad", "gaussian"):
        raise ConfigError(f"unknown method {method!r}", path="method")
    is_state = isinstance(state, ConditionalState)
    if method == "auto":
        method = "gaussian" if is_state and basis.r != 0 else "lindblad"
    if method == "gaussian" and not is_state:
        raise ConfigError("the gaussian route needs a ConditionalState", path="method")
    if method == "lindblad" and basis.r != 0:
        raise ConfigError("squeezed-basis depth needs the gaussian route", path="method")
    rate = gamma * nbar

    if method == "lindblad":
        rho = state.density_matrix(nmax) if is_state else np.asarray(state, dtype=complex)

        def holds(t: float) -> bool:
            r = lindblad_evolve(rho, gamma, nbar, t, nmax)
            return witness.holds(np.real(np.diagonal(r)))

    else:

        def holds(t: float) -> bool:
            return witness.holds(thermalize(state, gamma, nbar, t).fock_diagonal(nmax, basis))

    if not holds(0.0):
        return DepthResult(0.0, str(witness), (0.0, 0.0), False, False, gamma, nbar)
    lo, hi = 0.0, 0.05 / rate
    while holds(hi):
        lo, hi = hi, 2 * hi
        if hi * rate > d_max:
            return DepthResult(math.inf, str(witness), (lo, math.inf), True, True, gamma, nbar)
    while (hi - lo) > rtol * hi:
        mid = 0.5 * (lo + hi)
        if holds(mid):
            lo = mid
        else:
            hi = mid
    return DepthResult(rate * 0.5 * (lo + hi), str(witness), (lo, hi), True, False, gamma, nbar)
