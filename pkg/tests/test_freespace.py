import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from qngherald.errors import ConfigError
from qngherald.freespace import (
    freespace_propagator,
    propagate_freespace,
    propagate_freespace_ode,
    pulse_map_freespace,
)
from qngherald.gaussian import MechInitState, SystemParams, check_physical

# quadrature order [p, Y_out, x, X_out]
P, Y, X, XO = range(4)


@pytest.mark.parametrize("omega,gamma", [(1.0, 0.0), (1.0, 0.0054), (0.3, 0.5), (0.2, 1.0)])
def test_damped_propagator(omega, gamma):
    p = SystemParams(omega_m=omega, gamma=gamma)
    A = np.array([[-gamma, -omega], [omega, 0.0]])
    M = freespace_propagator(p, 1.7)
    assert np.allclose(M[np.ix_([P, X], [P, X])], expm(A * 1.7), atol=1e-12)
    assert np.allclose(M[np.ix_([Y, XO], [Y, XO])], np.eye(2))


def test_quarter_period_swaps_quadratures():
    M = freespace_propagator(SystemParams(omega_m=1.0), math.pi / 2)
    assert M[X, P] == pytest.approx(1.0)
    assert M[P, X] == pytest.approx(-1.0)
    assert abs(M[X, X]) < 1e-12


@pytest.mark.parametrize(
    "params,init",
    [
        (SystemParams(omega_m=1.0, gamma=0.0054, nbar=1.0, Gamma_ba=0.0082), MechInitState(0.01)),
        (SystemParams(omega_m=1.0, gamma=0.0054, nbar=10.0, Gamma_ba=0.068), MechInitState(0.01, 0.3, 0.7)),
        (SystemParams(omega_m=0.2, gamma=0.05, nbar=3.0, Gamma_ba=0.5), MechInitState(1.0)),
    ],
)
def test_exponential_matches_ode(params, init):
    for tau in (0.3, 1.0, 6.0):
        assert np.abs(propagate_freespace(params, tau, init) - propagate_freespace_ode(params, tau, init)).max() < 1e-9


def test_no_measurement_no_light():
    Vq = propagate_freespace(SystemParams(omega_m=1.0), 1.3, MechInitState(0.5))
    assert np.allclose(Vq[np.ix_([Y, XO], [Y, XO])], 0.5 * np.eye(2), atol=1e-12)
    assert np.allclose(Vq[np.ix_([P, X], [Y, XO])], 0, atol=1e-12)
    assert np.allclose(Vq[np.ix_([P, X], [P, X])], np.eye(2), atol=1e-12)


@pytest.mark.parametrize("tau", [0.5, 1.0, 3.0])
def test_weak_measurement_records_position(tau):
    # to first order in Γ, Var(Y_out) - 1/2 = (4Γ/τ) Var(∫ x ds) for free rotation
    Gam, n0 = 1e-5, 0.2
    Vq = propagate_freespace(SystemParams(omega_m=1.0, Gamma_ba=Gam), tau, MechInitState(n0))
    var_int = (n0 + 0.5) * (math.sin(tau) ** 2 + (1 - math.cos(tau)) ** 2)
    assert Vq[Y, Y] - 0.5 == pytest.approx(4 * Gam / tau * var_int, rel=1e-3)


def test_mech_light_correlation_scales_with_root_rate():
    init = MechInitState(0.1)
    c = [propagate_freespace(SystemParams(omega_m=1.0, Gamma_ba=G), 1.0, init)[X, Y] for G in (1e-6, 4e-6)]
    assert c[1] / c[0] == pytest.approx(2.0, rel=1e-4)


def test_tau_validation():
    with pytest.raises(ConfigError):
        pulse_map_freespace(SystemParams(omega_m=1.0), 0.0)
    with pytest.raises(ConfigError):
        freespace_propagator(SystemParams(omega_m=1.0), -1.0)


@settings(max_examples=40, deadline=None)
@given(
    omega=st.floats(0.05, 10.0),
    Gam=st.floats(0.0, 0.5),
    tau=st.floats(0.05, 10.0),
    n0=st.floats(0.0, 2.0),
    r=st.floats(0.0, 1.0),
)
def test_undamped_outputs_are_physical(omega, Gam, tau, n0, r):
    p = SystemParams(omega_m=omega, Gamma_ba=Gam)
    assert check_physical(propagate_freespace(p, tau, MechInitState(n0, r))).ok


@settings(max_examples=60, deadline=None)
@given(
    tau=st.floats(0.05, 10.0),
    Gam=st.floats(0.0, 0.1),
    gamma=st.floats(0.0054, 0.054),
    heating=st.floats(0.0, 0.054),
    n0=st.floats(0.0, 0.05),
)
def test_outputs_are_physical_over_experimental_ranges(tau, Gam, gamma, heating, n0):
    # momentum-only damping with a white thermal force is not a completely positive
    # generator; this probes whether the violation surfaces in the heralding CM
    p = SystemParams(omega_m=1.0, gamma=gamma, nbar=heating / gamma, Gamma_ba=Gam)
    assert check_physical(propagate_freespace(p, tau, MechInitState(n0))).ok


def test_positivity_violation_stays_small():
    worst = 0.0
    for Gam in (0.001, 0.01, 0.1):
        for tau in np.linspace(0.05, 10, 25):
            p = SystemParams(omega_m=1.0, gamma=0.054, Gamma_ba=Gam)
            worst = min(worst, check_physical(propagate_freespace(p, tau, MechInitState())).min_eigenvalue)
    assert -0.054**2 < worst
