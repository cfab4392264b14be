import numpy as np
import pytest

from constraint_inference.constraints import CandidateConstraint, ConstraintSet, feasibility_mask
from constraint_inference.inference import (
    demos_feasible,
    generate_candidates,
    greedy_infer,
    score_candidates,
)
from constraint_inference.mdp import DemonstrationSet, Mdp, Trajectory


def brute_eligibility(mdp, demos):
    """States whose tightest admissible threshold is below one, plus unsampled actions."""
    S = mdp.transition_dense()
    rows = {(x, a) for tr in demos for _, x, a, _ in tr.transitions()}
    states = set()
    for target in range(mdp.num_states):
        demo_mass = max((S[x, a, target] for x, a in rows), default=0.0)
        floor = max((S[x, :, target].min() for x in range(mdp.num_states) if (S[x, :, target] > 0).any()), default=0.0)
        if max(demo_mass, floor) < 1:
            states.add(target)
    actions = set(range(mdp.num_actions)) - {a for _, a in rows}
    return states, actions


def split(cands):
    return {c.target for c in cands if c.kind == "state"}, {c.target for c in cands if c.kind == "action"}


def test_empty_demos_everything_is_a_candidate(grid3):
    mdp, _, _ = grid3
    cands = generate_candidates(mdp, DemonstrationSet([]), ConstraintSet.unconstrained(9))
    states, actions = split(cands)
    assert states == set(range(9))
    assert actions == set(range(9))


def test_all_actions_demonstrated_leaves_no_action_candidates():
    mdp = Mdp(np.ones((1, 3, 1)), [[0.0, 0.0, 0.0]], [0.0], 3)
    demos = DemonstrationSet([Trajectory([0, 0, 0, 0], [0, 1, 2])])
    cands = generate_candidates(mdp, demos, ConstraintSet([1.0]))
    assert split(cands)[1] == set()


def test_experiment_eligibility_mask(experiment):
    _, mdp, _, _, demos = experiment
    cands = generate_candidates(mdp, demos, ConstraintSet.unconstrained(mdp.num_states))
    assert split(cands) == brute_eligibility(mdp, demos)
    for c in cands:
        assert demos_feasible(mdp, c.apply(), demos)


def test_fixed_psi_mode_filters_excluding_candidates(experiment):
    _, mdp, _, _, demos = experiment
    cands = generate_candidates(mdp, demos, ConstraintSet.unconstrained(mdp.num_states), fixed_psi=0.25)
    assert all(c.psi == 0.25 for c in cands if c.kind == "state")
    for c in cands:
        assert demos_feasible(mdp, c.apply(), demos)
    S = mdp.transition_dense()
    rows = {(x, a) for tr in demos for _, x, a, _ in tr.transitions()}
    dropped = set(range(mdp.num_states)) - split(cands)[0]
    for target in dropped:
        assert any(S[x, a, target] > 0.25 for x, a in rows)


def test_zero_iterations_returns_base(experiment):
    _, mdp, _, _, demos = experiment
    base = ConstraintSet.unconstrained(mdp.num_states)
    result = greedy_infer(mdp, demos, base, max_iterations=0)
    assert result.final_constraints == base
    assert result.selected == [] and result.trace == []


def test_single_candidate_world():
    # two actions, action 1 never demonstrated and strictly dominated
    S = np.ones((1, 2, 1))
    demos = DemonstrationSet([Trajectory([0, 0, 0], [0, 0])])
    base = ConstraintSet([1.0])
    # the only state is self-looped by everything, so only the action candidate survives
    mdp = Mdp(S, [[0.0, 0.0]], [0.0], 2)
    result = greedy_infer(mdp, demos, base, max_iterations=3, stop_gain=0.0)
    assert [(s.candidate.kind, s.candidate.target) for s in result.selected] == [("action", 1)]
    assert result.selected[0].score < 0
    assert result.status == "exhausted"


def test_single_candidate_with_no_gain_is_not_selected():
    S = np.ones((1, 2, 1))
    demos = DemonstrationSet([Trajectory([0, 0], [0])])
    mdp = Mdp(S, [[0.0, -800.0]], [0.0], 1)
    result = greedy_infer(mdp, demos, max_iterations=3, stop_gain=1e-3)
    assert result.selected == []
    assert result.status == "converged"


def test_experiment_run_invariants(experiment):
    _, mdp, truth, _, demos = experiment
    result = greedy_infer(mdp, demos, max_iterations=6, stop_gain=0.0)
    truth_states = set(truth.constrained_states())
    picked = {s.candidate.target for s in result.selected[:5] if s.candidate.kind == "state"}
    assert len(picked & truth_states) >= 4
    current = ConstraintSet.unconstrained(mdp.num_states)
    for sel, entry in zip(result.selected, result.trace):
        assert all(c.base == current for c in entry.candidates)
        live = entry.scores[entry.admissible]
        assert np.all(live <= 0)
        assert sel.score == live.min()
        assert sel.gain == pytest.approx(-sel.score / len(demos))
        current = sel.candidate.apply()
        assert demos_feasible(mdp, current, demos)
    assert result.final_constraints == current


def test_tie_break_prefers_lowest_state_then_states():
    # every state is reached the same way, so states 1 and 2 score identically
    S = np.zeros((3, 3, 3))
    for x in range(3):
        S[x, 0, 1] = S[x, 1, 2] = S[x, 2, 0] = 1.0
    mdp = Mdp(S, np.zeros((3, 3)), np.zeros(3), 2)
    demos = DemonstrationSet([Trajectory([0, 0, 0], [2, 2])])
    entry = score_candidates(mdp, demos, ConstraintSet.unconstrained(3), generate_candidates(mdp, demos, ConstraintSet.unconstrained(3)))
    best = entry.best()
    ties = np.flatnonzero(entry.scores == entry.scores[best])
    assert best == ties[0]
    assert len(ties) > 1


def test_rejects_demos_outside_base(experiment):
    _, mdp, _, _, demos = experiment
    tr = demos[0]
    x, a = tr.states[0], tr.actions[0]
    base = ConstraintSet.unconstrained(mdp.num_states).with_action(a)
    with pytest.raises(ValueError):
        greedy_infer(mdp, demos, base, max_iterations=1)
    assert not feasibility_mask(mdp, base)[x, a]


def test_candidate_killing_demo_likelihood_is_inadmissible():
    # the demo's first action may land in state 1, whose only exits re-enter it
    S = np.zeros((3, 2, 3))
    S[0, 0] = [0.0, 0.5, 0.5]
    S[0, 1] = [1.0, 0.0, 0.0]
    S[1, 0] = [0.0, 1.0, 0.0]
    S[1, 1] = [0.0, 1.0, 0.0]
    S[2, :, 2] = 1.0
    mdp = Mdp(S, np.zeros((3, 2)), np.zeros(3), 2)
    demos = DemonstrationSet([Trajectory([0, 2, 2], [0, 0])])
    base = ConstraintSet.unconstrained(3)
    # psi(1) = 0.5 keeps the demo's Phi but leaves state 1 with no action at t=1
    cand = CandidateConstraint.state(base, 1, 0.5)
    entry = score_candidates(mdp, demos, base, [cand])
    assert not entry.admissible[0]
