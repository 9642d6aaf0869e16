"""Augmented Lyapunov integration for linear pulse maps.

Every engine reduces a pulse to an affine map on the mechanical covariance matrix,

    V_out = K V_m K^† + N,

with ``K`` (4×2) and ``N`` (4×4) in the field ordering ``[b^†, A^†, b, A]``.  The map
is obtained by integrating, for a 6-field vector ``z = [b^†, a^†, A^†, b, a, A]``
(``a`` intracavity, ``A`` the accumulated output temporal mode),

    dΦ/dt = D(t) Φ,              Φ(0) = I,
    dW/dt = D(t) W + W D(t)^† + F(t),   W(0) = cavity vacuum only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import solve_ivp

from qngherald.errors import IntegrationError

RTOL = 1e-10
ATOL = 1e-12

# indices in z = [b†, a†, A†, b, a, A]
IDX_OUT = [0, 2, 3, 5]
IDX_MECH = [0, 3]


@dataclass(frozen=True)
class PulseMap:
    """Affine CM map of one pulse: mech 2×2 CM in, two-mode 4×4 CM out."""

    K: NDArray[np.complex128]
    N: NDArray[np.complex128]
    engine: str = "rwa"

    def apply(self, Vm: NDArray) -> NDArray[np.complex128]:
        V = self.K @ np.asarray(Vm, dtype=complex) @ self.K.conj().T + self.N
        return (V + V.conj().T) / 2

    @property
    def mech_K(self) -> NDArray[np.complex128]:
        """2×2 block acting on the mechanics alone (rows b^†, b)."""
        return self.K[[0, 2]]

    @property
    def mech_N(self) -> NDArray[np.complex128]:
        return self.N[np.ix_([0, 2], [0, 2])]


def diffusion(kappa: float, gamma: float, nbar: float, f: Callable[[float], float]) -> Callable[[float], NDArray]:
    """Diffusion matrix ``F(t)`` for the fields ``[b, a, A]`` (both halves identical).

    ``a`` is driven by ``√(2κ) a_in`` and ``A`` by ``-f(t) a_in``, so the two share
    the input vacuum noise.
    """
    sq2k = np.sqrt(2 * kappa)
    therm = 2 * gamma * (nbar + 0.5)

    def F(t: float) -> NDArray:
        ft = f(t)
        blk = np.array(
            [
                [therm, 0.0, 0.0],
                [0.0, kappa, -sq2k * ft / 2],
                [0.0, -sq2k * ft / 2, ft * ft / 2],
            ]
        )
        out = np.zeros((6, 6))
        out[:3, :3] = blk
        out[3:, 3:] = blk
        return out

    return F


def integrate_pulse_map(
    drift: Callable[[float], NDArray],
    F: Callable[[float], NDArray],
    tau: float,
    *,
    max_step: float = np.inf,
    engine: str = "rwa",
    rtol: float = RTOL,
    atol: float = ATOL,
) -> PulseMap:
    """Integrate the augmented system over ``[0, tau]`` and extract ``(K, N)``."""
    W0 = np.zeros((6, 6), dtype=complex)
    W0[1, 1] = W0[4, 4] = 0.5
    if tau == 0:
        Phi, W = np.eye(6, dtype=complex), W0
    else:
        y0 = np.concatenate([np.eye(6, dtype=complex).ravel(), W0.ravel()])

        def rhs(t, y):
            D = drift(t)
            Phi = y[:36].reshape(6, 6)
            W = y[36:].reshape(6, 6)
            dW = D @ W + W @ D.conj().T + F(t)
            return np.concatenate([(D @ Phi).ravel(), dW.ravel()])

        sol = solve_ivp(rhs, (0.0, tau), y0, method="DOP853", rtol=rtol, atol=atol, max_step=max_step)
        if not sol.success:
            raise IntegrationError(f"Lyapunov integration failed: {sol.message}", achieved=rtol)
        Phi = sol.y[:36, -1].reshape(6, 6)
        W = sol.y[36:, -1].reshape(6, 6)
    K = Phi[np.ix_(IDX_OUT, IDX_MECH)]
    N = W[np.ix_(IDX_OUT, IDX_OUT)]
    return PulseMap(K, (N + N.conj().T) / 2, engine)
