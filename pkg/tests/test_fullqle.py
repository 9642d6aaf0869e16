import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qngherald.cavity import PulseSpec, propagate_rwa
from qngherald.errors import ConfigError
from qngherald.fullqle import CouplingProfile, ProfileKind, propagate_full, pulse_map_full, rwa_validity_report
from qngherald.gaussian import MechInitState, SystemParams, check_physical, fields_to_quadratures, mech_initial_cm
from qngherald.herald import click_probability


@pytest.mark.parametrize("det", ["blue", "red"])
def test_resolved_sideband_limit_matches_rwa(det):
    p = SystemParams(g=0.02, omega_m=30.0, detuning=det)
    init = MechInitState(0.1)
    Vf = propagate_full(p, PulseSpec(2.0), None, init, mode_shape="same")
    Vr = propagate_rwa(p, PulseSpec(2.0), init)
    assert np.abs(Vf - Vr).max() < 1e-3


def test_rwa_deviation_shrinks_with_sideband_ratio():
    init = MechInitState(0.1)
    dev = []
    for w in (5.0, 10.0, 30.0):
        p = SystemParams(g=0.05, omega_m=w)
        Vf = propagate_full(p, PulseSpec(2.0), None, init, mode_shape="same")
        dev.append(np.abs(Vf - propagate_rwa(p, PulseSpec(2.0), init)).max())
    assert dev[0] > dev[1] > dev[2]


def test_zero_coupling_is_free_evolution():
    V = propagate_full(SystemParams(g=0.0, omega_m=3.0), PulseSpec(2.0), None, MechInitState())
    assert np.abs(V - 0.5 * np.eye(4)).max() < 1e-10


def test_needs_finite_trap_frequency():
    with pytest.raises(ConfigError, match="omega_m"):
        pulse_map_full(SystemParams(g=0.1), PulseSpec(1.0))
    with pytest.raises(ConfigError, match="mode_shape"):
        pulse_map_full(SystemParams(g=0.1, omega_m=2.0), PulseSpec(1.0), mode_shape="blue")


def test_validity_report():
    ok = rwa_validity_report(SystemParams(g=0.02, omega_m=10.0))
    assert ok.recommendation == "rwa"
    assert not ok.sideband_flag and not ok.coupling_flag
    exp = rwa_validity_report(SystemParams(g=0.62, omega_m=1.96))
    assert exp.recommendation == "full"
    assert exp.sideband_flag and exp.coupling_flag
    assert exp.sideband_ratio == pytest.approx(1.96)
    strong = rwa_validity_report(SystemParams(g=0.02, omega_m=10.0), PulseSpec(1.0, g=0.3))
    assert strong.coupling_flag and not strong.sideband_flag


def test_ramped_coupling_reduces_click_probability():
    p = SystemParams(g=0.05, omega_m=5.0)
    init = MechInitState(0.0)
    flat = pulse_map_full(p, PulseSpec(2.0)).apply(mech_initial_cm(init))
    ramp = pulse_map_full(p, PulseSpec(2.0), CouplingProfile(ProfileKind.EXP_RAMP)).apply(mech_initial_cm(init))
    assert 0 < click_probability(ramp, 1.0) < click_probability(flat, 1.0)


def test_profile_override_of_coupling():
    p = SystemParams(g=0.05, omega_m=5.0)
    a = pulse_map_full(p, PulseSpec(2.0), CouplingProfile(gbar=0.1))
    b = pulse_map_full(p.replace(g=0.1), PulseSpec(2.0))
    assert np.abs(a.N - b.N).max() < 1e-10
    with pytest.raises(ConfigError):
        CouplingProfile(gbar=-1.0)


@settings(max_examples=12, deadline=None)
@given(
    g=st.floats(0.0, 0.7),
    omega=st.floats(0.2, 5.0),
    tau=st.floats(0.2, 4.0),
    n0=st.floats(0.0, 1.0),
    det=st.sampled_from(["blue", "red"]),
)
def test_full_outputs_are_physical(g, omega, tau, n0, det):
    p = SystemParams(g=g, omega_m=omega, gamma=1e-3, nbar=10.0, detuning=det)
    V = pulse_map_full(p, PulseSpec(tau)).apply(mech_initial_cm(MechInitState(n0)))
    assert check_physical(fields_to_quadratures(V)).ok
