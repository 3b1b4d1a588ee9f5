import numpy as np
import pytest

from mlpeq.network import MlpParams


def random_params(rng, H, n, scale=1.0):
    return MlpParams(rng.normal(scale=scale, size=(H, n)), rng.normal(scale=scale, size=H),
                     rng.normal(size=H), rng.normal())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    if module and module.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in module.RESULTS:
            terminalreporter.write_line(line)
