import numpy as np
import pytest

from latgcb import ConfigSpace, Measure, Volume

ACCEPTANCE = {}


def random_pair(rng, k, n, sparse=False):
    space = ConfigSpace(Volume.interval(0, n), k)
    out = []
    for _ in range(2):
        w = rng.dirichlet(np.ones(space.n_states))
        if sparse:
            w[rng.random(space.n_states) < 0.3] = 0.0
            if w.sum() == 0:
                w[0] = 1.0
        out.append(Measure.normalized(space, w))
    return out


def random_measure(rng, space):
    return Measure.normalized(space, rng.dirichlet(np.ones(space.n_states)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def record():
    def _record(criterion, ok, detail=""):
        ACCEPTANCE[criterion] = (bool(ok), detail)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
