import sys
from pathlib import Path

import pytest

PACKAGE_DIR = Path(__file__).resolve().parents[1] / "qspeed"
sys.path.insert(0, str(PACKAGE_DIR))

import machine  # noqa: E402
import qsim  # noqa: E402
from formats import load_tm  # noqa: E402


@pytest.fixture(autouse=True)
def default_limits():
    qsim.set_limits(qsim.DEFAULT_MAX_QUBITS, qsim.DEFAULT_NORM_TOLERANCE, qsim.DEFAULT_UNITARY_TOLERANCE)
    yield
    qsim.set_limits(qsim.DEFAULT_MAX_QUBITS, qsim.DEFAULT_NORM_TOLERANCE, qsim.DEFAULT_UNITARY_TOLERANCE)


@pytest.fixture
def rng():
    return qsim.derive_rng(2024)


@pytest.fixture
def sk2():
    return machine.SK2


@pytest.fixture
def machines_dir():
    return PACKAGE_DIR / "machines"


@pytest.fixture
def echo(machines_dir):
    """Writes the program bits one per step and halts a step later, so only p = x prints x."""
    return machine.TuringProgramMachine(load_tm(str(machines_dir / "echo.tm")))


@pytest.fixture
def constant_oracle():
    return qsim.OracleSpec(3, (0,) * 8)


@pytest.fixture
def balanced_oracle():
    return qsim.OracleSpec.from_function(3, lambda x: int(x[0]))


@pytest.fixture
def single_marked():
    return qsim.OracleSpec.marked(4, ["1011"])
