import numpy as np
import pytest
from hypothesis import settings

from isirelay import SubbandChannel

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def random_channel(rng, n, degraded=False, scale=1.0):
    a_SD = rng.exponential(scale, n)
    a_RD = rng.exponential(scale, n)
    a_SR = a_SD + rng.exponential(2 * scale, n) if degraded else rng.exponential(scale, n)
    return SubbandChannel(a_SR, a_SD, a_RD)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py" in rep.nodeid and rep.when == "call":
                name = rep.nodeid.split("::")[-1]
                lines.append((name, "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, status in sorted(lines, key=lambda x: int(x[0].split("_")[2])):
            terminalreporter.write_line(f"{status}  {name}")
