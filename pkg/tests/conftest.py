import json
import random
import sys
from pathlib import Path

import pytest

from pqchain import schemes
from pqchain.chain import PowConfig
from pqchain.demo import logical_clock, run_case_study

GOLDEN = json.loads((Path(__file__).parent / "golden" / "golden.json").read_text())


@pytest.fixture(scope="session")
def golden():
    return GOLDEN


@pytest.fixture(scope="session")
def dilithium2():
    return schemes.get_scheme("dilithium2")


@pytest.fixture(scope="session")
def p256():
    return schemes.get_scheme("P-256")


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture(scope="session")
def case_study(dilithium2):
    return run_case_study(dilithium2, PowConfig(8), random.Random(7), logical_clock())


def available_ids():
    return [s.param_id for s in schemes.list_schemes()]


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[n])
