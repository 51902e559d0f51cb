import json
from pathlib import Path

import numpy as np
import pytest

from pwadc import empc
from pwadc.pwa import PwaFunction

class MpcCache:
    """Explicit MPC laws per horizon, generated once per session."""

    def __init__(self):
        self._f = {}
        self.gen_time = {}

    def __call__(self, N: int) -> PwaFunction:
        if N not in self._f:
            import time
            t0 = time.perf_counter()
            self._f[N] = empc.generate(empc.double_integrator(N))
            self.gen_time[N] = time.perf_counter() - t0
        return self._f[N]

    def put(self, N: int, f: PwaFunction, seconds: float):
        self._f[N] = f
        self.gen_time[N] = seconds


@pytest.fixture(scope="session")
def mpc():
    return MpcCache()


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def load_corpus(name):
    return json.loads((Path(__file__).parent / "fixtures" / name).read_text())


# one "PASS/FAIL criterion k: ..." line per acceptance check, repeated in the summary
CRITERIA: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
