import numpy as np
import pytest

from neuromimetic import golden
from neuromimetic.alphabet import build_alphabet, enumerate_patterns
from neuromimetic.emulation import EmulationConfig


@pytest.fixture(scope="session")
def example_cfg():
    return EmulationConfig(golden.EXAMPLE_H, golden.SIMPLE_B, h=0.1)


@pytest.fixture(scope="session")
def example_alphabet():
    return build_alphabet(golden.SIMPLE_B, enumerate_patterns(4))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
