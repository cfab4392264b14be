import numpy as np
import pytest
from scipy.stats import chi2

from constraint_inference.constraints import ConstraintSet, feasibility_mask
from constraint_inference.mdp import Mdp, trajectory_errors
from constraint_inference.sampler import sample_demonstrations
from constraint_inference.soft_bellman import policy_from_backup, soft_backup


def test_dominant_action_gives_identical_paths():
    S = np.zeros((3, 2, 3))
    S[:, 0, :] = np.eye(3)[[1, 2, 0]]
    S[:, 1, :] = np.eye(3)
    mdp = Mdp(S, [[0.0, -60.0]] * 3, np.zeros(3), 5)
    demos = sample_demonstrations(mdp, ConstraintSet.unconstrained(3), 0, 20, seed=4)
    assert len({(tr.states, tr.actions) for tr in demos}) == 1
    assert demos[0].states == (0, 1, 2, 0, 1, 2)


def test_zero_demonstrations(chain):
    demos = sample_demonstrations(chain, ConstraintSet.unconstrained(3), 0, 0, seed=1)
    assert len(demos) == 0
    assert demos.metadata["seed"] == 1


def test_same_seed_same_data_and_different_seed_differs(experiment):
    spec, mdp, truth, m, demos = experiment
    again = sample_demonstrations(mdp, truth, m.state(spec.start), 100, seed=0)
    assert [(t.states, t.actions) for t in again] == [(t.states, t.actions) for t in demos]
    other = sample_demonstrations(mdp, truth, m.state(spec.start), 100, seed=1)
    assert [t.states for t in other] != [t.states for t in demos]


def test_prefix_stable_in_n(experiment):
    spec, mdp, truth, m, demos = experiment
    few = sample_demonstrations(mdp, truth, m.state(spec.start), 10, seed=0)
    assert [t.states for t in few] == [t.states for t in demos][:10]


def test_samples_valid_and_feasible(experiment):
    _, mdp, truth, _, demos = experiment
    mask = feasibility_mask(mdp, truth)
    for tr in demos:
        assert trajectory_errors(mdp, tr) == []
        assert all(mask[x, a] for _, x, a, _ in tr.transitions())


def test_action_frequencies_match_policy(experiment):
    _, mdp, truth, _, demos = experiment
    pol = policy_from_backup(mdp, truth, soft_backup(mdp, truth))
    counts = np.zeros(pol.prob.shape)
    for tr in demos:
        for t, x, a, _ in tr.transitions():
            counts[t, x, a] += 1
    visits = counts.sum(axis=2)
    top = np.argsort(visits, axis=None)[::-1][:6]
    observed, expected = [], []
    for flat in top:
        t, x = np.unravel_index(flat, visits.shape)
        n = visits[t, x]
        assert n >= 30
        p = pol.prob[t, x]
        # 3-sigma binomial bound where the normal approximation holds
        ok = (n * p >= 5) & (n * (1 - p) >= 5)
        sigma = np.sqrt(n * p * (1 - p))
        assert np.all(np.abs(counts[t, x] - n * p)[ok] <= 3 * sigma[ok])
        live = p > 0
        observed.extend(counts[t, x, live])
        expected.extend(n * p[live])
        assert np.all(counts[t, x, ~live] == 0)
    stat = np.sum((np.array(observed) - expected) ** 2 / np.array(expected))
    dof = len(observed) - len(top)
    assert chi2.sf(stat, dof) > 1e-3


def test_dead_start_raises():
    S = np.zeros((2, 1, 2))
    S[:, 0, 1] = 1.0
    mdp = Mdp(S, np.zeros((2, 1)), np.zeros(2), 2)
    with pytest.raises(RuntimeError):
        sample_demonstrations(mdp, ConstraintSet([1.0, 0.0]), 0, 1, seed=0)
