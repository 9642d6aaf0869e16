import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qngherald.bargmann import fock_diagonal_from_cm, fock_matrix_from_cm
from qngherald.cavity import PulseSpec
from qngherald.errors import ConfigError, NumericalError
from qngherald.gaussian import MechInitState, SystemParams, mech_initial_cm
from qngherald.herald import ConditionalState, heralded_state
from qngherald.readout import PhotonStats, loss_map, loss_map_matrix, readout_probabilities, swap_time

READ = SystemParams(g=0.6, detuning="red")


def single_phonon(heating=0.0, n0=0.01):
    p = SystemParams.with_heating(heating, g=0.02)
    return heralded_state(p, PulseSpec(2.0), MechInitState(n0)), p.replace(g=0.6)


def test_identity_at_unit_efficiency():
    p = np.array([0.2, 0.5, 0.3])
    assert np.allclose(loss_map(PhotonStats(p), 1.0).p, p)


def test_single_photon_loss():
    out = loss_map(PhotonStats(np.array([0.0, 1.0])), 0.7)
    assert out.p == pytest.approx([0.3, 0.7])
    assert out.eta_applied == 0.7


def test_thermal_stays_thermal_under_loss():
    q = fock_diagonal_from_cm(mech_initial_cm(MechInitState(0.2)), 60)
    out = loss_map(PhotonStats(q), 0.7).p
    k = np.arange(61)
    assert np.allclose(out, 0.14**k / 1.14 ** (k + 1), atol=1e-14)


def test_loss_map_rejects_bad_efficiency():
    with pytest.raises(ConfigError):
        loss_map(PhotonStats(np.array([1.0])), 1.2)


@settings(max_examples=50, deadline=None)
@given(
    p=st.lists(st.floats(0.0, 1.0), min_size=2, max_size=25).filter(lambda v: sum(v) > 0.1),
    e1=st.floats(0.0, 1.0),
    e2=st.floats(0.0, 1.0),
)
def test_loss_map_is_stochastic_and_composes(p, e1, e2):
    p = np.array(p) / sum(p)
    once = loss_map(PhotonStats(p), e1).p
    assert once.sum() == pytest.approx(1.0, abs=1e-12)
    assert once.min() >= 0
    twice = loss_map(loss_map(PhotonStats(p), e1), e2).p
    assert np.abs(twice - loss_map(PhotonStats(p), e1 * e2).p).max() < 1e-10


def test_matrix_loss_diagonal_and_coherences():
    rho = fock_matrix_from_cm(mech_initial_cm(MechInitState(0.3, 0.5, 0.2)), 80)
    out = loss_map_matrix(rho, 0.6)
    assert np.allclose(np.diag(out).real, loss_map(PhotonStats(np.diag(rho).real), 0.6).p, atol=1e-13)
    assert np.trace(out).real == pytest.approx(np.trace(rho).real, abs=1e-12)
    assert np.allclose(out, out.conj().T)
    # a Gaussian stays Gaussian: pure loss maps the CM to ηV + (1-η)/2
    V = mech_initial_cm(MechInitState(0.3, 0.5, 0.2))
    ref = fock_matrix_from_cm(0.6 * V + 0.2 * np.eye(2), 30)
    assert np.abs(out[:25, :25] - ref[:25, :25]).max() < 1e-10
    blind = loss_map_matrix(rho, 0.0)
    assert blind[0, 0].real == pytest.approx(np.trace(rho).real)
    assert np.allclose(loss_map_matrix(rho, 1.0), rho)


def test_swap_time():
    assert swap_time(READ) == pytest.approx(math.pi / (2 * math.sqrt(0.11)), rel=1e-12)
    assert swap_time(READ) == pytest.approx(4.736, abs=1e-3)
    assert swap_time(READ.replace(g=1.2)) < swap_time(READ)
    with pytest.raises(NumericalError):
        swap_time(READ.replace(g=0.5))
    with pytest.raises(NumericalError):
        swap_time(SystemParams(g=0.45, gamma=0.1, detuning="red"))


@pytest.mark.parametrize("tau", [0.5, 2.0, 4.736, 9.0])
def test_vacuum_reads_dark(tau):
    vac = ConditionalState.gaussian(mech_initial_cm(MechInitState()))
    p = readout_probabilities(vac, READ, tau).diagonal
    assert p[0] == pytest.approx(1.0, abs=1e-10)
    assert np.abs(p[1:]).max() < 1e-10


def test_zero_coupling_reads_dark():
    st, _ = single_phonon()
    p = readout_probabilities(st, READ, 4.0, g=0.0)
    assert p[0] == pytest.approx(1.0, abs=1e-10)


def test_swap_transfers_single_phonon():
    st, rp = single_phonon()
    p = readout_probabilities(st, rp, swap_time(rp))
    assert p.diagonal.sum() == pytest.approx(1.0, abs=1e-8)
    assert p[1] > 0.9
    taus = np.linspace(0.5, 12.0, 47)
    best = max(readout_probabilities(st, rp, t)[1] for t in taus)
    assert p[1] >= 0.95 * best


@pytest.mark.parametrize("heating", [0.01, 0.06])
def test_heating_puts_optimum_near_swap(heating):
    st, rp = single_phonon(heating)
    ts = swap_time(rp)
    taus = np.linspace(0.5, 12.0, 93)
    v = np.array([readout_probabilities(st, rp, t)[1] for t in taus])
    i = int(np.argmax(v))
    assert 0 < i < len(taus) - 1
    assert ts / 2 <= taus[i] <= 2 * ts


def test_heating_degrades_readout():
    vals = []
    for h in (0.0, 0.01, 0.03, 0.06):
        st, rp = single_phonon(h)
        vals.append(readout_probabilities(st, rp, swap_time(rp))[1])
    assert all(a >= b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("eta", [0.49, 0.45, 0.3])
def test_low_efficiency_hides_single_phonon(eta):
    st, rp = single_phonon(n0=0.0)
    assert readout_probabilities(st, rp, swap_time(rp), eta=eta)[1] < 0.4779


def test_efficiency_folds_in_loss():
    st, rp = single_phonon()
    full = readout_probabilities(st, rp, 4.0)
    lossy = readout_probabilities(st, rp, 4.0, eta=0.8)
    assert np.allclose(lossy.p, loss_map(full, 0.8).p)
    with pytest.raises(ConfigError):
        readout_probabilities(st, rp, 4.0, eta=-0.1)
