"""Value types and covariance-matrix algebra shared by all engines.

Conventions
-----------
Field ordering for ``N`` bosonic modes is ``[a_1^†, ..., a_N^†, a_1, ..., a_N]``
and the field covariance matrix is

    V_jk = ½ <u_j u_k^† + u_k^† u_j>,

so the vacuum is ``I/2``.  Quadrature ordering is ``[p_1, ..., p_N, x_1, ..., x_N]``
with ``a = (x + i p)/√2``; the two are related by ``V_q = Ω V Ω^†``.

For the heralding problem mode 1 is the mechanical oscillator ``b`` and mode 2
the optical temporal mode ``A_out``, i.e. ``u = [b^†, A^†, b, A]`` and
``u_q = [p, Y, x, X]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from qngherald.errors import ConfigError, NumericalError, UnphysicalStateError

HERMITIAN_TOL = 1e-10
PHYSICAL_TOL = 1e-9


class Detuning(str, enum.Enum):
    """Drive detuning: ``RED`` is the beam-splitter, ``BLUE`` the two-mode squeezer."""

    RED = "red"
    BLUE = "blue"

    @property
    def sign(self) -> int:
        return 1 if self is Detuning.BLUE else -1


def _nonneg(name: str, value: float) -> None:
    if not np.isfinite(value) or value < 0:
        raise ConfigError(f"must be finite and >= 0, got {value!r}", path=name)


@dataclass(frozen=True)
class SystemParams:
    """Rates of one scenario, in units of a common reference rate."""

    kappa: float = 1.0
    gamma: float = 0.0
    nbar: float = 0.0
    g: float = 0.02
    omega_m: float = 0.0
    Gamma_ba: float = 0.0
    detuning: Detuning = Detuning.BLUE

    def __post_init__(self):
        for name in ("kappa", "gamma", "nbar", "g", "omega_m", "Gamma_ba"):
            _nonneg(name, getattr(self, name))
        if not isinstance(self.detuning, Detuning):
            object.__setattr__(self, "detuning", Detuning(self.detuning))

    @property
    def heating(self) -> float:
        """Thermal heating rate γ n̄."""
        return self.gamma * self.nbar

    def replace(self, **changes) -> "SystemParams":
        from dataclasses import replace

        return replace(self, **changes)

    @classmethod
    def with_heating(cls, heating: float, gamma: float = 1e-6, **kw) -> "SystemParams":
        """Build parameters from a heating rate γ n̄ at (small) fixed damping γ."""
        _nonneg("heating", heating)
        if gamma <= 0:
            raise ConfigError("gamma must be > 0 when fixing the heating rate", path="gamma")
        return cls(gamma=gamma, nbar=heating / gamma, **kw)


@dataclass(frozen=True)
class MechInitState:
    """Squeezed thermal initial state of the mechanics."""

    n0: float = 0.0
    r: float = 0.0
    phi0: float = 0.0

    def __post_init__(self):
        _nonneg("n0", self.n0)
        _nonneg("r", self.r)
        if not (0.0 <= self.phi0 < 2 * math.pi) or not np.isfinite(self.phi0):
            raise ConfigError(f"must lie in [0, 2π), got {self.phi0!r}", path="phi0")


# ---------------------------------------------------------------------------
# basis transforms


def omega_matrix(n_modes: int) -> NDArray[np.complex128]:
    """Unitary Ω mapping field ordering to quadrature ordering."""
    eye = np.eye(n_modes)
    return np.block([[1j * eye, -1j * eye], [eye, eye]]) / math.sqrt(2)


def exchange_matrix(n_modes: int) -> NDArray[np.float64]:
    """``X = Ω^T Ω``: swaps the creation and annihilation halves."""
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return np.block([[zero, eye], [eye, zero]])


def symplectic_form(n_modes: int) -> NDArray[np.float64]:
    """σ_jk = -i[u_j, u_k] for the ``[p..., x...]`` quadrature ordering."""
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return np.block([[zero, -eye], [eye, zero]])


def _n_modes(V: NDArray) -> int:
    V = np.asarray(V)
    if V.ndim != 2 or V.shape[0] != V.shape[1] or V.shape[0] % 2:
        raise ConfigError(f"covariance matrix must be square with even size, got {V.shape}")
    return V.shape[0] // 2


def is_hermitian(V: NDArray, tol: float = HERMITIAN_TOL) -> bool:
    V = np.asarray(V)
    scale = max(1.0, float(np.max(np.abs(V))))
    return bool(np.max(np.abs(V - V.conj().T)) <= tol * scale)


def fields_to_quadratures(V: NDArray) -> NDArray[np.float64]:
    """Field CM → real symmetric quadrature CM."""
    V = np.asarray(V, dtype=complex)
    n = _n_modes(V)
    if not is_hermitian(V):
        raise ConfigError("field covariance matrix is not Hermitian")
    om = omega_matrix(n)
    Vq = om @ V @ om.conj().T
    if np.max(np.abs(Vq.imag)) > 1e-9 * max(1.0, np.max(np.abs(Vq))):
        raise ConfigError("field covariance matrix lacks the creation/annihilation symmetry")
    Vq = Vq.real
    return (Vq + Vq.T) / 2


def quadratures_to_fields(Vq: NDArray) -> NDArray[np.complex128]:
    """Inverse of :func:`fields_to_quadratures`."""
    Vq = np.asarray(Vq, dtype=float)
    om = omega_matrix(_n_modes(Vq))
    V = om.conj().T @ Vq @ om
    return (V + V.conj().T) / 2


@dataclass(frozen=True)
class PhysicalityVerdict:
    ok: bool
    min_eigenvalue: float

    def __bool__(self) -> bool:
        return self.ok


def check_physical(Vq: NDArray, tol: float = PHYSICAL_TOL) -> PhysicalityVerdict:
    """Uncertainty-principle test ``V_q + iσ/2 ⪰ 0`` on a quadrature CM."""
    Vq = np.asarray(Vq, dtype=float)
    n = _n_modes(Vq)
    ev = np.linalg.eigvalsh(Vq + 0.5j * symplectic_form(n))
    lam = float(ev.min())
    return PhysicalityVerdict(lam >= -tol, lam)


def require_physical(V: NDArray, what: str = "state") -> None:
    """Raise :class:`UnphysicalStateError` unless the field CM ``V`` is physical."""
    verdict = check_physical(fields_to_quadratures(V))
    if not verdict.ok:
        raise UnphysicalStateError(f"{what} violates the uncertainty principle (min eig {verdict.min_eigenvalue:.3e})")


# ---------------------------------------------------------------------------
# initial state


def mech_initial_cm(init: MechInitState) -> NDArray[np.complex128]:
    """2×2 field CM of the squeezed thermal mechanics in ``[b^†, b]`` order."""
    n0, r, phi = init.n0, init.r, init.phi0
    occ = n0 * math.cosh(2 * r) + math.sinh(r) ** 2  # <b^† b>
    bb = -(n0 + 0.5) * np.exp(1j * phi) * math.sinh(2 * r)  # <b b>
    return np.array([[occ + 0.5, np.conj(bb)], [bb, occ + 0.5]], dtype=complex)


def embed_modes(blocks: list[NDArray]) -> NDArray[np.complex128]:
    """Direct sum of single-mode 2×2 field CMs into one field-ordered CM."""
    n = len(blocks)
    V = np.zeros((2 * n, 2 * n), dtype=complex)
    for k, blk in enumerate(blocks):
        idx = [k, n + k]
        V[np.ix_(idx, idx)] = blk
    return V


def make_initial_cm(init: MechInitState) -> NDArray[np.complex128]:
    """4×4 field CM: squeezed thermal mechanics ⊗ optical vacuum."""
    return embed_modes([mech_initial_cm(init), 0.5 * np.eye(2)])


def mode_block(V: NDArray, k: int) -> NDArray[np.complex128]:
    """2×2 reduced field CM of mode ``k``."""
    n = _n_modes(V)
    idx = [k, n + k]
    return np.asarray(V)[np.ix_(idx, idx)]


def mean_occupation(Vm: NDArray) -> float:
    """<b^† b> from a single-mode field CM."""
    return float(np.real(Vm[0, 0])) - 0.5


def squeeze_transform(r: float, phi: float) -> NDArray[np.complex128]:
    """Field-space matrix ``T`` with ``V -> T V T^†`` implementing ρ -> S^†(ξ) ρ S(ξ).

    ``S(ξ) = exp[(ξ^* b² - ξ b^{†2})/2]``, ``ξ = r e^{iφ}``; applying this to the
    squeezed thermal initial state with the same ``(r, φ)`` returns the thermal state.
    """
    ch, sh = math.cosh(r), math.sinh(r)
    e = np.exp(1j * phi)
    return np.array([[ch, np.conj(e) * sh], [e * sh, ch]], dtype=complex)


# ---------------------------------------------------------------------------
# Bargmann (R-matrix) representation


@dataclass(frozen=True)
class RBlocks:
    """Blocks of ``R = P R̃ P^T`` in the variable order ``(β_1^*, α_1, β_2^*, α_2)``."""

    Rmm: NDArray[np.complex128]
    Rmc: NDArray[np.complex128]
    Rcm: NDArray[np.complex128]
    Rcc: NDArray[np.complex128]
    P0: float

    @property
    def R(self) -> NDArray[np.complex128]:
        return np.block([[self.Rmm, self.Rmc], [self.Rcm, self.Rcc]])


def bargmann_matrix(V: NDArray) -> tuple[complex, NDArray[np.complex128]]:
    """``(P0, R̃)`` with ``R̃ = X (2V - I)(2V + I)^{-1}`` and ``P0 = 2^N / √det(2V + I)``.

    The density-matrix elements of the Gaussian state are Taylor coefficients of
    ``P0 exp(½ s̃^T R̃ s̃)`` with ``s̃ = (β^*_1..β^*_N, α_1..α_N)``.
    """
    V = np.asarray(V, dtype=complex)
    n = _n_modes(V)
    eye = np.eye(2 * n)
    plus = 2 * V + eye
    cond = np.linalg.cond(plus)
    if not np.isfinite(cond) or cond > 1e13:
        raise NumericalError("2V + I is singular: covariance matrix is unphysical")
    R = exchange_matrix(n) @ (2 * V - eye) @ np.linalg.inv(plus)
    R = (R + R.T) / 2
    P0 = 2**n / np.sqrt(np.linalg.det(plus))
    return complex(P0), R


def cm_from_bargmann(R: NDArray) -> NDArray[np.complex128]:
    """Inverse map: normalized CM ``½ (I + XR)(I - XR)^{-1}``."""
    R = np.asarray(R, dtype=complex)
    n = R.shape[0] // 2
    XR = exchange_matrix(n) @ R
    eye = np.eye(2 * n)
    V = 0.5 * (eye + XR) @ np.linalg.inv(eye - XR)
    return (V + V.conj().T) / 2


def r_blocks(V: NDArray) -> RBlocks:
    """Split the two-mode Bargmann matrix into mechanical/optical blocks."""
    if _n_modes(V) != 2:
        raise ConfigError("r_blocks expects a two-mode (4×4) covariance matrix")
    P0, Rt = bargmann_matrix(V)
    perm = [0, 2, 1, 3]  # (β1*, β2*, α1, α2) -> (β1*, α1, β2*, α2)
    R = Rt[np.ix_(perm, perm)]
    return RBlocks(R[:2, :2], R[:2, 2:], R[2:, :2], R[2:, 2:], float(P0.real))


# ---------------------------------------------------------------------------
# physical inputs -> rates

HBAR = 1.054571817e-34
C_LIGHT = 299792458.0
EPS0 = 8.8541878128e-12


@dataclass(frozen=True)
class Particle:
    radius: float  # m
    density: float  # kg / m^3
    permittivity: float  # relative

    @property
    def volume(self) -> float:
        return 4.0 / 3.0 * math.pi * self.radius**3

    @property
    def mass(self) -> float:
        return self.density * self.volume

    @property
    def eps_c(self) -> float:
        e = self.permittivity
        return 3 * (e - 1) / (e + 2)


@dataclass(frozen=True)
class Tweezer:
    power: float  # W
    waist: float  # m
    wavelength: float = 1064e-9  # m
    cross_section: float | None = None  # m^2, defaults to π W^2 / 2

    @property
    def area(self) -> float:
        return self.cross_section if self.cross_section else math.pi * self.waist**2 / 2


@dataclass(frozen=True)
class Cavity:
    waist: float  # m
    length: float  # m
    frequency: float | None = None  # rad/s, defaults to the tweezer frequency

    @property
    def mode_volume(self) -> float:
        return math.pi * self.waist**2 * self.length / 4


def derive_physical_rates(
    particle: Particle,
    tweezer: Tweezer,
    cavity: Cavity | None = None,
    *,
    kappa: float = 0.0,
    gamma: float = 0.0,
    nbar: float = 0.0,
    detuning: Detuning = Detuning.BLUE,
    free_space: bool | None = None,
) -> SystemParams:
    """Trap frequency and coupling rates (rad/s) from particle and beam properties.

    With a cavity the coherent-scattering rate ``g`` is returned; without one the
    measurement-backaction rate ``Gamma_ba``.  ``kappa``, ``gamma`` and ``nbar`` are
    passed through unchanged.
    """
    for name, val in (
        ("particle.radius", particle.radius),
        ("particle.density", particle.density),
        ("tweezer.power", tweezer.power),
        ("tweezer.waist", tweezer.waist),
        ("tweezer.wavelength", tweezer.wavelength),
    ):
        if not val > 0:
            raise ConfigError("must be > 0", path=name)
    if not particle.permittivity > 1:
        raise ConfigError("must be > 1", path="particle.permittivity")
    if free_space is None:
        free_space = cavity is None
    if not free_space and cavity is None:
        raise ConfigError("cavity block required for cavity coupling rates", path="cavity")

    eps_c = particle.eps_c
    u_tw = 4 * tweezer.power / (math.pi * C_LIGHT * tweezer.area)  # ε0 E_tw^2
    omega_m = math.sqrt(eps_c / (particle.density * tweezer.waist**2)) * math.sqrt(u_tw)
    x_zpf = math.sqrt(HBAR / (2 * particle.mass * omega_m))
    omega_l = 2 * math.pi * C_LIGHT / tweezer.wavelength

    g = 0.0
    Gamma = 0.0
    if not free_space:
        assert cavity is not None
        if not (cavity.waist > 0 and cavity.length > 0):
            raise ConfigError("cavity waist and length must be > 0", path="cavity")
        omega_c = cavity.frequency or omega_l
        k = omega_c / C_LIGHT
        G = eps_c * particle.volume * math.sqrt(u_tw) * math.sqrt(omega_c / (2 * HBAR * cavity.mode_volume))
        g = G * k * x_zpf
    else:
        # squared-amplitude form: Γ = (7/5) (k x_zpf)^2 × photon scattering rate
        k = omega_l / C_LIGHT
        alpha = EPS0 * eps_c * particle.volume
        s_vac = 7 * math.pi * HBAR * omega_l**3 / (15 * EPS0 * (2 * math.pi * C_LIGHT) ** 3)
        e_tw_sq = 4 * tweezer.power / (math.pi * EPS0 * C_LIGHT * tweezer.area)
        Gamma = 2 * math.pi * (alpha * k * x_zpf / HBAR) ** 2 * s_vac * e_tw_sq
    return SystemParams(
        kappa=kappa, gamma=gamma, nbar=nbar, g=g, omega_m=omega_m, Gamma_ba=Gamma, detuning=detuning
    )
