"""RWA pulse dynamics of the mechanics coupled to a driven cavity.

Red detuning realizes the beam splitter ``g(a^† b + a b^†)``, blue detuning the
two-mode squeezer ``g(a b + a^† b^†)``.  The cavity output is collected in the
temporal mode ``A_out = ∫ f_out(s) a_out(s) ds`` with ``a_out = √(2κ) a - a_in``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import quad
from scipy.linalg import expm

from qngherald.errors import ConfigError
from qngherald.gaussian import Detuning, MechInitState, SystemParams, mech_initial_cm
from qngherald.lyapunov import PulseMap, diffusion, integrate_pulse_map

QUAD_TOL = 1e-12


@dataclass(frozen=True)
class PulseSpec:
    """One optomechanical pulse; ``detuning=None`` inherits it from the system."""

    tau: float
    detuning: Detuning | None = None
    g: float | None = None

    def __post_init__(self):
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ConfigError(f"must be > 0, got {self.tau!r}", path="tau")
        if self.detuning is not None and not isinstance(self.detuning, Detuning):
            object.__setattr__(self, "detuning", Detuning(self.detuning))
        if self.g is not None and not (np.isfinite(self.g) and self.g >= 0):
            raise ConfigError(f"must be >= 0, got {self.g!r}", path="g")

    def resolve(self, params: SystemParams) -> SystemParams:
        """System parameters with this pulse's detuning and coupling applied."""
        changes = {}
        if self.detuning is not None:
            changes["detuning"] = self.detuning
        if self.g is not None:
            changes["g"] = self.g
        return params.replace(**changes) if changes else params


def effective_rate(params: SystemParams, detuning: Detuning | None = None) -> complex:
    """``G± = √(±g² + (κ-γ)²/4)``; purely imaginary for strongly coupled red pulses."""
    det = detuning or params.detuning
    return cmath.sqrt(det.sign * params.g**2 + (params.kappa - params.gamma) ** 2 / 4)


def drift_matrix(params: SystemParams, detuning: Detuning | None = None) -> NDArray[np.complex128]:
    """4×4 RWA drift on ``[b^†, a^†, b, a]``."""
    det = detuning or params.detuning
    g, k, gm = params.g, params.kappa, params.gamma
    D = np.diag([-gm, -k, -gm, -k]).astype(complex)
    if det is Detuning.RED:
        D[0, 1] = D[1, 0] = 1j * g
        D[2, 3] = D[3, 2] = -1j * g
    else:
        D[0, 3] = D[1, 2] = 1j * g
        D[2, 1] = D[3, 0] = -1j * g
    return D


def propagator(params: SystemParams, tau: float, detuning: Detuning | None = None) -> NDArray[np.complex128]:
    """``M±(τ) = exp(D± τ)``."""
    if tau < 0:
        raise ConfigError("must be >= 0", path="tau")
    return expm(drift_matrix(params, detuning) * tau)


def _cosh_sinhc(G: complex, t: float) -> tuple[float, float]:
    """``cosh(G t)`` and ``sinh(G t)/G`` continued to imaginary and zero ``G``."""
    if abs(G.imag) > abs(G.real):
        w = abs(G.imag)
        return math.cos(w * t), (math.sin(w * t) / w if w > 0 else t)
    w = G.real
    if w == 0:
        return 1.0, t
    return math.cosh(w * t), math.sinh(w * t) / w


def propagator_closed_form(params: SystemParams, tau: float, detuning: Detuning | None = None) -> NDArray[np.complex128]:
    """Closed-form elements of ``M±(τ)``.

    Uses ``M = e^{-(κ+γ)τ/2} [cosh(Gτ) I + sinh(Gτ)/G · (D + (κ+γ)/2 I)]``, which
    gives the coefficient ``(κ-γ)/(2G)`` on the diagonal.
    """
    D = drift_matrix(params, detuning)
    G = effective_rate(params, detuning)
    c, s = _cosh_sinhc(G, tau)
    half = (params.kappa + params.gamma) / 2
    return math.exp(-half * tau) * (c * np.eye(4) + s * (D + half * np.eye(4)))


# ---------------------------------------------------------------------------
# temporal modes


@dataclass(frozen=True)
class TemporalModes:
    tau: float
    s: NDArray[np.float64]
    f_in: NDArray[np.float64]
    f_out: NDArray[np.float64]
    gain: float
    degenerate: bool
    kernel: Callable[[float], float]
    norm: float

    def f_out_at(self, s: float) -> float:
        return self.kernel(s) / self.norm

    def f_in_at(self, s: float) -> float:
        return self.kernel(self.tau - s) / self.norm


def mode_kernel(params: SystemParams, detuning: Detuning | None = None) -> Callable[[float], float]:
    """Unnormalized output-mode shape ``e^{-(κ+γ)s/2} sinh(G s)/G``."""
    G = effective_rate(params, detuning)
    half = (params.kappa + params.gamma) / 2

    def k(s: float) -> float:
        return math.exp(-half * s) * _cosh_sinhc(G, s)[1]

    return k


def temporal_modes(params: SystemParams, pulse: PulseSpec, n_grid: int = 201) -> TemporalModes:
    """Sampled input/output modes and the amplification gain ``𝒢`` of a pulse."""
    p = pulse.resolve(params)
    tau = pulse.tau
    k = mode_kernel(p)
    norm_sq, _ = quad(lambda s: k(s) ** 2, 0.0, tau, epsabs=0.0, epsrel=QUAD_TOL, limit=200)
    norm = math.sqrt(norm_sq)
    gain = 1.0 + 2 * p.kappa * p.g**2 * norm_sq
    s = np.linspace(0.0, tau, n_grid)
    f_out = np.array([k(x) for x in s]) / norm
    f_in = np.array([k(tau - x) for x in s]) / norm
    return TemporalModes(tau, s, f_in, f_out, gain, p.g == 0, k, norm)


# ---------------------------------------------------------------------------
# CM propagation


def _augmented_rwa_drift(p: SystemParams, f: Callable[[float], float]) -> Callable[[float], NDArray]:
    D4 = drift_matrix(p)
    base = np.zeros((6, 6), dtype=complex)
    src = [0, 1, 3, 4]  # [b†, a†, b, a] inside z
    base[np.ix_(src, src)] = D4
    sq2k = math.sqrt(2 * p.kappa)

    def drift(t: float) -> NDArray:
        D = base.copy()
        ft = f(t)
        D[2, 1] = sq2k * ft
        D[5, 4] = sq2k * ft
        return D

    return drift


def pulse_map_rwa(params: SystemParams, pulse: PulseSpec, modes: TemporalModes | None = None) -> PulseMap:
    """Linear CM map of one RWA pulse."""
    p = pulse.resolve(params)
    modes = modes or temporal_modes(params, pulse)
    f = modes.f_out_at
    return integrate_pulse_map(
        _augmented_rwa_drift(p, f), diffusion(p.kappa, p.gamma, p.nbar, f), pulse.tau, engine="rwa"
    )


def propagate_rwa(params: SystemParams, pulse: PulseSpec, init: MechInitState) -> NDArray[np.complex128]:
    """Two-mode CM of ``[b(τ), A_out(τ)]`` after an RWA pulse."""
    return pulse_map_rwa(params, pulse).apply(mech_initial_cm(init))


def propagate_rwa_quadrature(
    params: SystemParams, pulse: PulseSpec, init: MechInitState, order: int = 96
) -> NDArray[np.complex128]:
    """Independent route: explicit input-output kernels integrated by Gauss–Legendre.

    ``b(τ) = M_b(τ) r(0) + ∫ M_b(τ-s) N r_in(s) ds`` and
    ``A = ∫ f(s) [√(2κ) a(s) - a_in(s)] ds`` are written as
    ``o = c r(0) + ∫ h(s') r_in(s') ds'``; the CM follows from the noise correlators.
    """
    p = pulse.resolve(params)
    tau = pulse.tau
    modes = temporal_modes(params, pulse)
    D = drift_matrix(p)
    lam, U = np.linalg.eig(D)
    Uinv = np.linalg.inv(U)

    def M(t):
        return (U * np.exp(lam * t)) @ Uinv

    Nn = np.diag(np.sqrt([2 * p.gamma, 2 * p.kappa, 2 * p.gamma, 2 * p.kappa]))
    sq2k = math.sqrt(2 * p.kappa)
    x, w = np.polynomial.legendre.leggauss(order)

    def nodes(a, b):
        return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w

    # rows of r = [b†, a†, b, a]; outputs o = [b†, A†, b, A]
    sel_b = np.zeros((2, 4)); sel_b[0, 0] = sel_b[1, 2] = 1
    sel_a = np.zeros((2, 4)); sel_a[0, 1] = sel_a[1, 3] = 1
    ss, ws = nodes(0.0, tau)
    c_A = sum(wi * modes.f_out_at(si) * sq2k * sel_a @ M(si) for si, wi in zip(ss, ws))
    c = np.zeros((4, 4), dtype=complex)
    c[[0, 2]] = sel_b @ M(tau)
    c[[1, 3]] = c_A

    def h(sp):
        out = np.zeros((4, 4), dtype=complex)
        out[[0, 2]] = sel_b @ M(tau - sp) @ Nn
        if sp < tau:
            si, wi = nodes(sp, tau)
            acc = sum(wj * modes.f_out_at(sj) * sq2k * sel_a @ M(sj - sp) for sj, wj in zip(si, wi))
            out[[1, 3]] = acc @ Nn
        out[[1, 3]] -= modes.f_out_at(sp) * sel_a
        return out

    # noise correlators ½<r_in r_in† + r_in† r_in> per unit time
    Sig = np.diag([p.nbar + 0.5, 0.5, p.nbar + 0.5, 0.5])
    V0 = np.zeros((4, 4), dtype=complex)
    Vm = mech_initial_cm(init)
    V0[np.ix_([0, 2], [0, 2])] = Vm
    V0[1, 1] = V0[3, 3] = 0.5
    V = c @ V0 @ c.conj().T
    for si, wi in zip(ss, ws):
        H = h(si)
        V = V + wi * H @ Sig @ H.conj().T
    return (V + V.conj().T) / 2
