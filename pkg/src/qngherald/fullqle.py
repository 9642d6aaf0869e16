"""Pulse dynamics beyond the rotating-wave approximation.

Keeps the counter-rotating terms of the linearized coupling in the interaction
picture, so the drift acquires ``e^{±2iω_m t}`` phases, and optionally ramps the
coupling as ``g(t) = ḡ (1 - e^{-κt})``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from qngherald.cavity import PulseSpec, temporal_modes
from qngherald.errors import ConfigError
from qngherald.gaussian import Detuning, MechInitState, SystemParams, mech_initial_cm, require_physical
from qngherald.lyapunov import PulseMap, diffusion, integrate_pulse_map

SIDEBAND_MIN = 3.0
COUPLING_MAX = 0.1


class ProfileKind(str, enum.Enum):
    CONSTANT = "constant"
    EXP_RAMP = "exp_ramp"


@dataclass(frozen=True)
class CouplingProfile:
    kind: ProfileKind = ProfileKind.CONSTANT
    gbar: float | None = None  # None: take g from the system parameters

    def __post_init__(self):
        if not isinstance(self.kind, ProfileKind):
            object.__setattr__(self, "kind", ProfileKind(self.kind))
        if self.gbar is not None and not (np.isfinite(self.gbar) and self.gbar >= 0):
            raise ConfigError(f"must be >= 0, got {self.gbar!r}", path="gbar")

    def function(self, gbar: float, kappa: float) -> Callable[[float], float]:
        if self.kind is ProfileKind.CONSTANT:
            return lambda t: gbar
        return lambda t: gbar * (1.0 - math.exp(-kappa * t))


def _full_drift(p: SystemParams, g: Callable[[float], float], f: Callable[[float], float]):
    w, k, gm = p.omega_m, p.kappa, p.gamma
    sq2k = math.sqrt(2 * k)
    blue = p.detuning is Detuning.BLUE
    # z = [b†, a†, A†, b, a, A]
    base = np.diag([-gm, -k, 0.0, -gm, -k, 0.0]).astype(complex)

    def drift(t: float) -> NDArray:
        D = base.copy()
        gt = g(t)
        e2 = np.exp(2j * w * t)
        if blue:
            # ḃ = -ig(a^† + a e^{2iωt}),  ȧ = -ig(b^† + b e^{-2iωt})
            D[3, 1] = -1j * gt
            D[3, 4] = -1j * gt * e2
            D[4, 0] = -1j * gt
            D[4, 3] = -1j * gt / e2
        else:
            # ḃ = -ig(a + a^† e^{2iωt}),  ȧ = -ig(b + b^† e^{2iωt})
            D[3, 4] = -1j * gt
            D[3, 1] = -1j * gt * e2
            D[4, 3] = -1j * gt
            D[4, 0] = -1j * gt * e2
        # creation rows are the conjugates
        D[0, [0, 1, 3, 4]] = np.conj(D[3, [3, 4, 0, 1]])
        D[1, [0, 1, 3, 4]] = np.conj(D[4, [3, 4, 0, 1]])
        ft = f(t)
        D[2, 1] = D[5, 4] = sq2k * ft
        return D

    return drift


def pulse_map_full(
    params: SystemParams,
    pulse: PulseSpec,
    profile: CouplingProfile | None = None,
    *,
    mode_shape: str = "red",
) -> PulseMap:
    """Linear CM map of one pulse with counter-rotating terms kept.

    ``mode_shape`` picks which RWA temporal mode weights the output: ``"red"``
    (the default, used for both detunings) or ``"same"`` (the pulse's own detuning).
    """
    p = pulse.resolve(params)
    if p.omega_m <= 0:
        raise ConfigError("full-QLE propagation needs omega_m > 0", path="omega_m")
    profile = profile or CouplingProfile()
    gbar = p.g if profile.gbar is None else profile.gbar
    if mode_shape == "red":
        shape_det = Detuning.RED
    elif mode_shape == "same":
        shape_det = p.detuning
    else:
        raise ConfigError(f"unknown mode shape {mode_shape!r}", path="mode_shape")
    modes = temporal_modes(p.replace(g=gbar), PulseSpec(pulse.tau, shape_det))
    f = modes.f_out_at
    max_step = (2 * math.pi / p.omega_m) / 20
    return integrate_pulse_map(
        _full_drift(p, profile.function(gbar, p.kappa), f),
        diffusion(p.kappa, p.gamma, p.nbar, f),
        pulse.tau,
        max_step=max_step,
        engine="full",
    )


def propagate_full(
    params: SystemParams,
    pulse: PulseSpec,
    profile: CouplingProfile | None,
    init: MechInitState,
    *,
    mode_shape: str = "red",
) -> NDArray[np.complex128]:
    V = pulse_map_full(params, pulse, profile, mode_shape=mode_shape).apply(mech_initial_cm(init))
    require_physical(V, "full-QLE output")
    return V


@dataclass(frozen=True)
class RWAValidity:
    sideband_ratio: float
    coupling_ratio: float
    sideband_flag: bool  # True when unresolved
    coupling_flag: bool  # True when too strong
    recommendation: str  # "rwa" or "full"


def rwa_validity_report(params: SystemParams, pulse: PulseSpec | None = None) -> RWAValidity:
    p = pulse.resolve(params) if pulse is not None else params
    side = p.omega_m / p.kappa if p.kappa > 0 else math.inf
    coup = p.g / p.kappa if p.kappa > 0 else math.inf
    s_flag = side < SIDEBAND_MIN
    c_flag = coup > COUPLING_MAX
    return RWAValidity(side, coup, s_flag, c_flag, "full" if (s_flag or c_flag) else "rwa")
