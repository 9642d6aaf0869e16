import numpy as np
import pytest

from qngherald.cavity import PulseSpec
from qngherald.gaussian import Detuning, MechInitState, SystemParams
from qngherald.herald import heralded_state

# Reference values produced by the phase-space oracle (qngherald.oracle, ntrunc=40)
# and frozen here; the oracle never touches the Bargmann recursion.
ORACLE_BLUE_Q = (1.324977633579286e-09, 0.9987935805826755, 0.0012052336797945434, 1.1833098942334601e-06)
ORACLE_BLUE_PS = 0.0006089990305102599
ORACLE_BLUE_ETA_HALF_Q = (1.3249386733528855e-09, 0.9984894484237092, 0.0015088153514746221)
ORACLE_RED_MEAN = 0.19998271820528918  # n0 = 0.1, kappa tau = 0.5
ORACLE_TWO_PULSE_Q = (4.314735386387878e-10, 1.627014801950429e-09, 0.9389506828013133, 0.05852968674407835)


@pytest.fixture(scope="session")
def blue_params():
    return SystemParams(kappa=1.0, g=0.02, detuning=Detuning.BLUE)


@pytest.fixture(scope="session")
def added_state(blue_params):
    return heralded_state(blue_params, PulseSpec(2.0), MechInitState(0.0))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
