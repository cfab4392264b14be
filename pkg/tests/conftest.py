import numpy as np
import pytest

from constraint_inference.gridworld import GridSpec, build_gridworld, default_spec
from constraint_inference.mdp import Mdp
from constraint_inference.sampler import sample_demonstrations

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_mdp(S, r, w=None, T=1):
    S = np.asarray(S, dtype=float)
    r = np.asarray(r, dtype=float)
    if w is None:
        w = np.zeros(S.shape[0])
    return Mdp(S, r, w, T)


@pytest.fixture
def chain():
    """Deterministic 3-state chain 0 -> 1 -> 2 -> 2, one action."""
    S = np.zeros((3, 1, 3))
    S[0, 0, 1] = S[1, 0, 2] = S[2, 0, 2] = 1.0
    return make_mdp(S, [[-1.0], [-2.0], [-0.5]], [0.0, 0.0, 3.0], T=2)


@pytest.fixture(scope="session")
def grid3():
    return build_gridworld(GridSpec(3, 3, slip=0.1, goal=(2, 2), horizon=4))


@pytest.fixture(scope="session")
def experiment():
    spec = default_spec()
    mdp, truth, mapping = build_gridworld(spec)
    demos = sample_demonstrations(mdp, truth, mapping.state(spec.start), 100, seed=0)
    return spec, mdp, truth, mapping, demos
