"""Click-conditioned mechanical states.

The no-click element ``Π₀(η) = Σ (1-η)^n |n><n| = (1-η)^{n̂}`` of an on-off detector
is itself a Gaussian operator.  Conditioning a two-mode Gaussian state on a click
therefore gives an exact signed mixture of two mechanical Gaussians,

    ρ_click = [Tr_opt ρ - Tr_opt(Π₀ ρ)] / p_c,

and repeated pulses just keep splitting every component in two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath as mp
import numpy as np
from numpy.typing import NDArray

from qngherald import hiprec
from qngherald.bargmann import (
    fock_coefficients,
    fock_diagonal_from_cm,
    fock_matrix_from_cm,
    mech_operator_after_t_power,
    wigner_n2,
)
from qngherald.cavity import PulseSpec
from qngherald.engines import Engine, pulse_map
from qngherald.errors import ConfigError, NoClickSupport, NumericalError, TruncationError
from qngherald.fullqle import CouplingProfile
from qngherald.gaussian import (
    MechInitState,
    SystemParams,
    exchange_matrix,
    fields_to_quadratures,
    mech_initial_cm,
    mode_block,
    r_blocks,
    squeeze_transform,
)

CLICK_MIN = 1e-12
PRUNE = 1e-10
SERIES_TAIL = 1e-12
TAIL_MAX = 1e-6


# ---------------------------------------------------------------------------
# value types


@dataclass(frozen=True)
class Basis:
    """Measurement basis: plain Fock states or squeezed Fock states ``S(ξ)|n>``."""

    r: float = 0.0
    phi: float = 0.0

    @property
    def kind(self) -> str:
        return "fock" if self.r == 0 else "squeezed"

    @classmethod
    def squeezed(cls, r: float, phi: float = 0.0) -> "Basis":
        return cls(float(r), float(phi))


FOCK = Basis()


@dataclass(frozen=True)
class FockDistribution:
    q: NDArray[np.float64]
    basis: Basis = FOCK

    @property
    def nmax(self) -> int:
        return len(self.q) - 1

    def __getitem__(self, n: int) -> float:
        return float(self.q[n]) if n < len(self.q) else 0.0

    @property
    def mean(self) -> float:
        return float(np.arange(len(self.q)) @ self.q)

    @classmethod
    def fock_state(cls, n: int, nmax: int = 40) -> "FockDistribution":
        q = np.zeros(nmax + 1)
        q[n] = 1.0
        return cls(q)

    @classmethod
    def thermal(cls, n0: float, nmax: int = 40) -> "FockDistribution":
        k = np.arange(nmax + 1)
        return cls(n0**k / (1 + n0) ** (k + 1))


@dataclass(frozen=True)
class GaussianComponent:
    weight: float
    cm: NDArray[np.complex128]


@dataclass(frozen=True)
class PendingClick:
    """Final click not yet expanded into Gaussians: ``w · Tr_opt[(1-Π₀(η)) ρ_V]``."""

    weight: float
    V: NDArray[np.complex128]
    eta: float


@dataclass(frozen=True)
class ConditionalState:
    """Heralded mechanical state as a signed mixture of zero-mean Gaussians.

    ``pending`` optionally keeps the last click in unexpanded form; Fock-space
    quantities are then summed over the detected photon number, which avoids
    the cancellation between the large signed weights of the mixture.
    """

    components: tuple[GaussianComponent, ...]
    norm: float = 1.0  # probability of the heralding pattern
    pending: tuple[PendingClick, ...] | None = field(default=None, compare=False)
    pending_norm: float = 1.0
    exact: tuple | None = field(default=None, compare=False)  # (weight, cm) pairs in mpmath

    @classmethod
    def gaussian(cls, cm: NDArray) -> "ConditionalState":
        return cls((GaussianComponent(1.0, np.asarray(cm, dtype=complex)),))

    @property
    def weights(self) -> NDArray[np.float64]:
        return np.array([c.weight for c in self.components])

    def mean_occupation(self) -> float:
        return float(sum(c.weight * (c.cm[0, 0].real - 0.5) for c in self.components))

    def transformed(self, T: NDArray) -> "ConditionalState":
        """Apply the single-mode Gaussian unitary with field matrix ``T`` to every component."""
        comps = tuple(GaussianComponent(c.weight, T @ c.cm @ T.conj().T) for c in self.components)
        pending = None
        if self.pending is not None:
            T4 = np.eye(4, dtype=complex)
            T4[np.ix_([0, 2], [0, 2])] = T
            pending = tuple(PendingClick(p.weight, T4 @ p.V @ T4.conj().T, p.eta) for p in self.pending)
        exact = None
        if self.exact is not None:
            with mp.workdps(hiprec.DPS):
                Tm = hiprec.to_mp(T)
                exact = tuple((w, Tm * cm * Tm.H) for w, cm in self.exact)
        return ConditionalState(comps, self.norm, pending, self.pending_norm, exact)

    def in_basis(self, basis: Basis) -> "ConditionalState":
        if basis.r == 0:
            return self
        return self.transformed(squeeze_transform(basis.r, basis.phi))

    def _use_series(self, method: str) -> bool:
        if method not in ("auto", "series", "mixture"):
            raise ConfigError(f"unknown method {method!r}", path="method")
        if method == "series" and self.pending is None:
            raise ConfigError("state carries no click series", path="method")
        return self.pending is not None and method != "mixture"

    def density_matrix(self, nmax: int, basis: Basis = FOCK, method: str = "auto") -> NDArray[np.complex128]:
        st = self.in_basis(basis)
        if st._use_series(method):
            acc = sum(p.weight * _click_operator_fock(p.V, p.eta, nmax, diag=False) for p in st.pending)
            return acc / st.pending_norm
        return sum(c.weight * fock_matrix_from_cm(c.cm, nmax) for c in st.components)

    def fock_diagonal(self, nmax: int, basis: Basis = FOCK, method: str = "auto") -> NDArray[np.float64]:
        st = self.in_basis(basis)
        if st._use_series(method):
            acc = sum(p.weight * _click_operator_fock(p.V, p.eta, nmax) for p in st.pending)
            return acc / st.pending_norm
        if st.exact is not None and method == "auto":
            with mp.workdps(hiprec.DPS):
                acc = [mp.mpf(0)] * (nmax + 1)
                for w, cm in st.exact:
                    d = hiprec.fock_diagonal(cm, nmax)
                    acc = [a + w * x for a, x in zip(acc, d)]
                return np.array([float(a) for a in acc])
        return sum(c.weight * fock_diagonal_from_cm(c.cm, nmax) for c in st.components)

    def wigner(self, alpha) -> NDArray[np.float64]:
        """``W(α) = (2/π) Tr[ρ D(α) Π D(α)^†]``, normalized so that ``∫W d²α = 1``."""
        alpha = np.asarray(alpha, dtype=complex)
        out = np.zeros(alpha.shape)
        for c in self.components:
            out += c.weight * gaussian_wigner(c.cm, alpha)
        return out


def gaussian_wigner(Vm: NDArray, alpha) -> NDArray[np.float64]:
    """Wigner function of a zero-mean single-mode Gaussian (α measure)."""
    alpha = np.asarray(alpha, dtype=complex)
    Vq = fields_to_quadratures(Vm)  # [p, x]
    xi = np.sqrt(2) * np.stack([alpha.imag, alpha.real])
    Vi = np.linalg.inv(Vq)
    e = np.einsum("i...,ij,j...->...", xi, Vi, xi)
    return np.exp(-0.5 * e) / (math.pi * math.sqrt(np.linalg.det(Vq)))


# ---------------------------------------------------------------------------
# conditioning


def wigner_conditional(V: NDArray, n2: int, alpha) -> NDArray[np.float64]:
    """Unnormalized mech Wigner conditioned on exactly ``n2`` output photons.

    Its integral over ``α`` is the probability of counting ``n2`` photons.
    """
    if n2 < 0:
        raise ConfigError("photon number must be >= 0", path="n2")
    rb = r_blocks(V)
    if np.linalg.norm(exchange_matrix(1) @ rb.Rmm, 2) >= 1:
        raise NumericalError("‖X R_mm‖ ≥ 1: Gaussian integral diverges (unphysical input)")
    return wigner_n2(rb.P0, rb.R, n2, alpha)


def noclick_cm(V: NDArray, eta: float) -> tuple[NDArray[np.complex128], float]:
    """Mech CM conditioned on no click, and the no-click probability."""
    _check_eta(eta)
    prob, cm = mech_operator_after_t_power(V, 1.0 - eta)
    return cm, prob


def click_probability(V: NDArray, eta: float) -> float:
    return 1.0 - noclick_cm(V, eta)[1]


def click_state(V: NDArray, eta: float = 1.0) -> ConditionalState:
    """Mechanical state conditioned on an on-off detector click."""
    cm0, p0 = noclick_cm(V, eta)
    pc = 1.0 - p0
    if pc <= CLICK_MIN:
        raise NoClickSupport(f"click probability {pc:.3e} is below {CLICK_MIN:g}")
    Vm = mode_block(V, 0)
    comps = (GaussianComponent(1.0 / pc, Vm), GaussianComponent(-p0 / pc, cm0))
    return ConditionalState(comps, pc, (PendingClick(1.0, np.asarray(V, dtype=complex), eta),), pc)


def _optical_cutoff(V: NDArray, tail: float) -> int:
    """Smallest ``N`` with optical marginal ``P(n > N) < tail``."""
    Vo = mode_block(V, 1)
    n = 8
    while n <= 512:
        rest = 1.0 - np.cumsum(fock_diagonal_from_cm(Vo, n))
        if rest[-1] < tail:
            return int(np.argmax(rest < tail))
        n *= 2
    raise TruncationError("optical photon-number series does not converge")


def _click_operator_fock(V: NDArray, eta: float, nmax: int, tail: float = SERIES_TAIL, diag: bool = True):
    """Fock matrix of ``Σ_{n2} [1-(1-η)^{n2}] <n2|ρ_V|n2>`` (unnormalized)."""
    n2max = max(_optical_cutoff(V, tail), 1)
    rb = r_blocks(V)
    G = fock_coefficients(rb.R, (nmax + 1, nmax + 1, n2max + 1, n2max + 1))
    k = np.arange(n2max + 1)
    w = 1.0 - (1.0 - eta) ** k
    block = rb.P0 * np.einsum("mnkk,k->mn", G, w)
    return np.real(np.diagonal(block)) if diag else block


def click_series_fock(V: NDArray, eta: float, nmax: int, tail: float = SERIES_TAIL, basis: Basis = FOCK):
    """Representation (b): ``Q_n = Σ_{n2} [1-(1-η)^{n2}] <n, n2|ρ|n, n2> / p_c``.

    Returns ``(q, p_c)`` using four-index Fock coefficients of the joint state.
    """
    _check_eta(eta)
    V = np.asarray(V, dtype=complex)
    if basis.r != 0:
        T = np.eye(4, dtype=complex)
        T[np.ix_([0, 2], [0, 2])] = squeeze_transform(basis.r, basis.phi)
        V = T @ V @ T.conj().T
    pc = click_probability(V, eta)
    if pc <= CLICK_MIN:
        raise NoClickSupport(f"click probability {pc:.3e} is below {CLICK_MIN:g}")
    return _click_operator_fock(V, eta, nmax, tail * pc) / pc, pc


def click_series_wigner(V: NDArray, eta: float, alpha, tail: float = SERIES_TAIL) -> NDArray[np.float64]:
    """Representation (b) of the normalized click Wigner function."""
    n2max = max(_optical_cutoff(V, tail), 1)
    pc = click_probability(V, eta)
    if pc <= CLICK_MIN:
        raise NoClickSupport(f"click probability {pc:.3e} is below {CLICK_MIN:g}")
    out = 0.0
    for n2 in range(1, n2max + 1):
        out = out + (1.0 - (1.0 - eta) ** n2) * wigner_conditional(V, n2, alpha)
    return out / pc


def _check_eta(eta: float) -> None:
    if not (0.0 <= eta <= 1.0):
        raise ConfigError(f"must lie in [0, 1], got {eta!r}", path="eta")


# ---------------------------------------------------------------------------
# Fock probabilities


def phonon_probabilities(state: ConditionalState, nmax: int = 40, basis: Basis = FOCK) -> FockDistribution:
    """``Q_n`` of a conditional state in the Fock or squeezed-Fock basis."""
    q = np.asarray(state.fock_diagonal(nmax, basis), dtype=float)
    if q[-1] > TAIL_MAX or q.sum() < 1 - 1e-4:
        raise TruncationError(f"Fock truncation nmax={nmax} too small (Q_nmax={q[-1]:.2e}); increase nmax")
    if q.min() < -1e-8:
        raise NumericalError(f"negative probability {q.min():.3e} in conditional state")
    return FockDistribution(q, basis)


def optimal_squeeze_basis(state: ConditionalState, n: int = 1, phi: float = 0.0, nmax: int = 40) -> Basis:
    """Anti-squeezing strength maximizing ``Q_n`` at fixed phase."""
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(
        lambda r: -state.fock_diagonal(nmax, Basis(r, phi))[n], bounds=(0.0, 2.0), method="bounded",
        options={"xatol": 1e-6},
    )
    return Basis(float(res.x), phi)


# ---------------------------------------------------------------------------
# pulse sequences


def heralded_state(
    params: SystemParams,
    pulse: PulseSpec,
    init: MechInitState,
    eta: float = 1.0,
    engine: Engine | str = Engine.RWA,
    profile: CouplingProfile | None = None,
) -> ConditionalState:
    """Propagate one pulse and condition on a click."""
    V = pulse_map(params, pulse, engine, profile).apply(mech_initial_cm(init))
    return click_state(V, eta)


def multipulse(
    pulses: Sequence[PulseSpec],
    params: SystemParams,
    init: MechInitState,
    eta: float | Sequence[float] = 1.0,
    engine: Engine | str = Engine.RWA,
    profile: CouplingProfile | None = None,
) -> ConditionalState:
    """Condition on a click after every pulse of a sequence."""
    if not pulses:
        raise ConfigError("pulse list must be non-empty", path="pulses")
    etas = [eta] * len(pulses) if np.isscalar(eta) else list(eta)
    if len(etas) != len(pulses):
        raise ConfigError("need one efficiency per pulse", path="eta")
    if len(pulses) == 1:
        V = pulse_map(params, pulses[0], engine, profile).apply(mech_initial_cm(init))
        return click_state(V, etas[0])
    with mp.workdps(hiprec.DPS):
        comps = [(mp.mpf(1), hiprec.to_mp(mech_initial_cm(init)))]
        total = mp.mpf(1)
        for pulse, e in zip(pulses, etas):
            _check_eta(e)
            pm = pulse_map(params, pulse, engine, profile)
            K, N = hiprec.to_mp(pm.K), hiprec.to_mp(pm.N)
            new = []
            for w, cm in comps:
                V = hiprec.apply_map(K, N, cm)
                p0, cm0 = hiprec.condition_t_power(V, mp.mpf(1) - mp.mpf(e))
                new.append((w, hiprec.mech_block(V)))
                new.append((-w * p0, cm0))
            pc = mp.fsum(w for w, _ in new)
            if pc <= CLICK_MIN:
                raise NoClickSupport(f"joint click probability {float(pc):.3e} vanishes")
            total *= pc
            comps = [(w / pc, cm) for w, cm in new if abs(w / pc) >= PRUNE]
            s = mp.fsum(w for w, _ in comps)
            comps = [(w / s, cm) for w, cm in comps]
        flat = tuple(GaussianComponent(float(w), hiprec.to_np(cm)) for w, cm in comps)
        return ConditionalState(flat, float(total), exact=tuple(comps))
