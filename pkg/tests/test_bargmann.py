import math

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.special import eval_laguerre, factorial

from qngherald.bargmann import (
    condition_on_t_power,
    fock_coefficients,
    fock_diagonal_from_cm,
    fock_matrix_from_cm,
    mech_operator_after_t_power,
    wigner_n2,
)
from qngherald.gaussian import MechInitState, mech_initial_cm, r_blocks


def ladder(n):
    return np.diag(np.sqrt(np.arange(1, n)), 1)


def tmsv_cm(r):
    c, s = math.cosh(r), math.sinh(r)
    d = s * s + 0.5
    return np.array([[d, 0, 0, c * s], [0, d, c * s, 0], [0, c * s, d, 0], [c * s, 0, 0, d]], dtype=complex)


def test_thermal_diagonal_is_geometric():
    n0 = 0.7
    q = fock_diagonal_from_cm(mech_initial_cm(MechInitState(n0)), 30)
    k = np.arange(31)
    assert np.allclose(q, n0**k / (1 + n0) ** (k + 1), atol=1e-15)


@pytest.mark.parametrize("r,phi", [(0.4, 0.0), (0.9, 1.3)])
def test_squeezed_vacuum_matches_matrix_exponential(r, phi):
    N = 90
    b = ladder(N)
    xi = r * np.exp(1j * phi)
    S = expm((np.conj(xi) * b @ b - xi * b.T @ b.T) / 2)
    psi = S[:, 0]
    ref = np.outer(psi, psi.conj())[:25, :25]
    rho = fock_matrix_from_cm(mech_initial_cm(MechInitState(0.0, r, phi)), 24)
    assert np.abs(rho - ref).max() < 1e-12


def test_squeezed_vacuum_even_populations():
    r = 0.6
    q = fock_diagonal_from_cm(mech_initial_cm(MechInitState(0.0, r)), 20)
    k = np.arange(0, 21, 2)
    ref = np.tanh(r) ** k * factorial(k) / (2 ** (k / 2) * factorial(k / 2)) ** 2 / math.cosh(r)
    assert np.allclose(q[::2], ref, atol=1e-14)
    assert np.allclose(q[1::2], 0, atol=1e-15)


def test_linear_term_gives_coherent_amplitudes():
    beta = 0.3 + 0.4j
    G = fock_coefficients(np.zeros((1, 1)), (12,), np.array([beta]))
    k = np.arange(12)
    assert np.allclose(G, beta**k / np.sqrt(factorial(k)))


@pytest.mark.parametrize("t", [0.0, 0.35, 1.0])
def test_optical_conditioning_of_two_mode_squeezed_vacuum(t):
    r = 0.7
    lam = math.tanh(r) ** 2
    tr, cm = mech_operator_after_t_power(tmsv_cm(r), t)
    assert tr == pytest.approx((1 - lam) / (1 - lam * t), rel=1e-12)
    # conditioned mechanics is thermal with ratio λ t
    ratio = lam * t
    assert cm[0, 0].real - 0.5 == pytest.approx(ratio / (1 - ratio), abs=1e-12)
    assert abs(cm[0, 1]) < 1e-12


def test_conditioning_raw_blocks_trace_one():
    rb = r_blocks(tmsv_cm(0.5))
    P, R = condition_on_t_power(rb.P0, rb.R, 1.0)
    rho = P * fock_coefficients(R, (40, 40))
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("n2", [0, 1, 3])
def test_photon_number_conditioned_wigner(n2):
    r = 0.5
    lam = math.tanh(r) ** 2
    rb = r_blocks(tmsv_cm(r))
    alpha = np.array([0.0, 0.3, 0.2 + 0.5j, -0.8j, 1.1])
    W = wigner_n2(rb.P0, rb.R, n2, alpha)
    a2 = np.abs(alpha) ** 2
    fock_w = (2 / math.pi) * (-1) ** n2 * np.exp(-2 * a2) * eval_laguerre(n2, 4 * a2)
    assert np.allclose(W, (1 - lam) * lam**n2 * fock_w, atol=1e-13)
