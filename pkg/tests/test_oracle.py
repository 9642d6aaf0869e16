import math

import numpy as np
import pytest

from qngherald.bargmann import fock_matrix_from_cm
from qngherald.cavity import PulseSpec, pulse_map_rwa
from qngherald.errors import ConfigError, NoClickSupport
from qngherald.gaussian import MechInitState, SystemParams, fields_to_quadratures, mech_initial_cm
from qngherald.herald import heralded_state, multipulse
from qngherald.oracle import fock_oracle, gaussian_fock_matrix, joint_cm_sequence


def test_thermal_vacuum_is_geometric():
    V = joint_cm_sequence(mech_initial_cm(MechInitState(0.5)), [])
    V4 = np.zeros((4, 4), dtype=complex)
    V4[np.ix_([0, 2], [0, 2])] = V
    V4[1, 1] = V4[3, 3] = 0.5
    rho = fock_oracle(V4, 1.0, 40, condition=False)
    k = np.arange(41)
    assert np.allclose(np.diag(rho).real, 0.5**k / 1.5 ** (k + 1), atol=1e-10)


def test_two_quadrature_schemes_agree():
    cov = fields_to_quadratures(mech_initial_cm(MechInitState(0.3, 0.6, 1.1)))
    herm = np.diag(gaussian_fock_matrix(cov, 30, "hermite")).real
    polar = np.diag(gaussian_fock_matrix(cov, 30, "polar")).real
    assert np.abs(herm - polar).max() < 1e-10


def test_oracle_matches_bargmann_off_diagonal():
    V = mech_initial_cm(MechInitState(0.2, 0.5, 0.4))
    rho = gaussian_fock_matrix(fields_to_quadratures(V), 20)
    assert np.abs(rho - fock_matrix_from_cm(V, 20)).max() < 1e-10


def test_vacuum_cannot_be_conditioned():
    with pytest.raises(NoClickSupport):
        fock_oracle(0.5 * np.eye(4), 1.0, 30)


def test_truncation_floor():
    with pytest.raises(ConfigError, match="ntrunc"):
        fock_oracle(0.5 * np.eye(4), 1.0, 10)


def test_efficiency_count_checked():
    pm = pulse_map_rwa(SystemParams(), PulseSpec(2.0))
    V = joint_cm_sequence(mech_initial_cm(MechInitState()), [pm, pm])
    with pytest.raises(ConfigError):
        fock_oracle(V, [1.0], 30)


@pytest.mark.parametrize(
    "params,tau,init,eta",
    [
        (SystemParams(g=0.05), 1.5, MechInitState(0.05), 0.8),
        (SystemParams(g=0.2, detuning="red"), 1.0, MechInitState(0.3, 0.4, 2.0), 1.0),
        (SystemParams.with_heating(0.02, gamma=1e-3, g=0.03), 3.0, MechInitState(0.1), 0.3),
    ],
)
def test_main_path_single_pulse(params, tau, init, eta):
    st = heralded_state(params, PulseSpec(tau), init, eta)
    V = joint_cm_sequence(mech_initial_cm(init), [pulse_map_rwa(params, PulseSpec(tau))])
    ref = np.diag(fock_oracle(V, eta, 40)).real
    assert np.abs(st.fock_diagonal(40) - ref).max() < 1e-6


def test_main_path_mixed_efficiencies():
    p = SystemParams(g=0.03)
    init = MechInitState(0.05)
    pulses = [PulseSpec(2.0), PulseSpec(1.0, detuning="red")]
    st = multipulse(pulses, p, init, eta=[0.9, 0.6])
    V = joint_cm_sequence(mech_initial_cm(init), [pulse_map_rwa(p, q) for q in pulses])
    ref = np.diag(fock_oracle(V, [0.9, 0.6], 40)).real
    assert np.abs(st.fock_diagonal(40) - ref).max() < 1e-6
    assert math.isclose(st.weights.sum(), 1.0, abs_tol=1e-12)
