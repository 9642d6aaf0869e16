"""Heralded non-Gaussian motional states of a levitated oscillator.

Two-mode Gaussian covariance-matrix dynamics for red/blue optomechanical
pulses (with and without a cavity), on-off photon heralding, Fock-space
witnesses, thermalization depth and phase-randomized displacement sensing.
"""

from qngherald.gaussian import (
    Detuning,
    MechInitState,
    SystemParams,
    check_physical,
    derive_physical_rates,
    fields_to_quadratures,
    make_initial_cm,
    quadratures_to_fields,
    r_blocks,
)

__version__ = "0.1.0"

__all__ = [
    "Detuning",
    "MechInitState",
    "SystemParams",
    "check_physical",
    "derive_physical_rates",
    "fields_to_quadratures",
    "make_initial_cm",
    "quadratures_to_fields",
    "r_blocks",
    "__version__",
]
