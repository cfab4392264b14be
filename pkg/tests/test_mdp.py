import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from constraint_inference.gridworld import GridSpec, build_gridworld
from constraint_inference.mdp import Mdp, Trajectory, successors, trajectory_errors, validate_mdp
from constraint_inference.validation import random_mdp


def test_degenerate_mdp_is_valid():
    assert validate_mdp(Mdp(np.ones((1, 1, 1)), [[0.0]], [0.0], 1)) == []


def test_short_row_is_reported():
    report = validate_mdp(Mdp(np.full((1, 1, 1), 0.9), [[0.0]], [0.0], 1))
    assert len(report) == 1
    assert report[0].kind == "row_sum"
    assert (report[0].state, report[0].action) == (0, 0)


def test_range_and_finiteness_violations():
    S = np.zeros((2, 1, 2))
    S[0, 0] = [1.5, -0.5]
    S[1, 0, 1] = 1.0
    report = validate_mdp(Mdp(S, [[np.nan], [0.0]], [0.0, np.inf], 1))
    kinds = sorted(v.kind for v in report)
    assert kinds == ["range", "range", "running_reward", "terminal_reward"]


@pytest.mark.parametrize("w,h,slip", [(1, 1, 0.1), (2, 2, 0.1), (3, 5, 0.0), (15, 15, 0.3)])
def test_generated_gridworlds_validate(w, h, slip):
    mdp, _, _ = build_gridworld(GridSpec(w, h, slip=slip, horizon=3))
    assert validate_mdp(mdp) == []


def test_successors_deterministic_chain(chain):
    assert successors(chain, 0, 0) == [(1, 1.0)]


def test_successors_bounds(chain):
    with pytest.raises(IndexError):
        successors(chain, 3, 0)
    with pytest.raises(IndexError):
        successors(chain, 0, 1)


def test_successors_interior_cell(grid3):
    mdp, _, mapping = grid3
    out = dict(successors(mdp, mapping.state((1, 1)), 0))  # North
    assert out[mapping.state((1, 2))] == pytest.approx(0.9, abs=1e-15)
    others = [p for s, p in out.items() if s != mapping.state((1, 2))]
    assert len(others) == 7
    assert others == pytest.approx([0.1 / 7] * 7, abs=1e-15)


def test_successors_corner_merges_clamped_slips():
    mdp, _, m = build_gridworld(GridSpec(2, 2, slip=0.1, horizon=1))
    # From (0,0) moving North: SE, S, SW, W and NW all leave the grid.
    expected = {m.state((0, 0)): 5 * 0.1 / 7, m.state((1, 0)): 0.1 / 7, m.state((0, 1)): 0.9, m.state((1, 1)): 0.1 / 7}
    got = dict(successors(mdp, m.state((0, 0)), 0))
    assert got.keys() == expected.keys()
    for s in expected:
        assert got[s] == pytest.approx(expected[s], abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_successor_mass_sums_to_one(seed):
    mdp = random_mdp(np.random.default_rng(seed))
    for x in range(mdp.num_states):
        for a in range(mdp.num_actions):
            succ = successors(mdp, x, a)
            states = [s for s, _ in succ]
            assert states == sorted(set(states))
            assert abs(sum(p for _, p in succ) - 1.0) <= 1e-12


def test_dense_accessor_matches_input():
    rng = np.random.default_rng(5)
    S = rng.random((3, 2, 3))
    S /= S.sum(axis=2, keepdims=True)
    mdp = Mdp(S, np.zeros((3, 2)), np.zeros(3), 2)
    assert np.array_equal(mdp.transition_dense(), S)
    assert mdp.prob(2, 1, 0) == S[2, 1, 0]


def test_constructor_rejects_bad_shapes():
    with pytest.raises(ValueError):
        Mdp(np.ones((2, 1, 2)) / 2, np.zeros((3, 1)), np.zeros(2), 1)
    with pytest.raises(ValueError):
        Mdp(np.ones((1, 1, 1)), [[0.0]], [0.0], 0)


def test_arrays_are_read_only(chain):
    with pytest.raises(ValueError):
        chain.running_reward[0, 0] = 5.0


def test_trajectory_shape_and_validity(chain):
    with pytest.raises(ValueError):
        Trajectory([0, 1], [0, 0])
    assert trajectory_errors(chain, Trajectory([0, 1, 2], [0, 0])) == []
    assert trajectory_errors(chain, Trajectory([0, 2, 2], [0, 0])) == ["t=0: S(0,0,2) = 0"]
    assert trajectory_errors(chain, Trajectory([0, 1], [0]))
