"""Greedy maximum-likelihood constraint inference.

Each iteration scores every admissible one-step augmentation of the current
constraint set by ``sum over demos of delta_0(x0)`` and folds in the most
negative one, which is the one that most raises the demonstrations'
likelihood.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .constraints import (
    CandidateConstraint,
    ConstraintSet,
    candidate_exclusions,
    feasibility_mask,
    risk_levels,
)
from .f_ratio import candidate_masks, check_augments, delta_tensor
from .mdp import DemonstrationSet, Mdp, check_demonstrations
from .soft_bellman import expected_next, soft_backup

log = logging.getLogger(__name__)

DEFAULT_STOP_GAIN = 0.05


@dataclass
class Selection:
    iteration: int
    candidate: CandidateConstraint
    score: float
    gain: float  # -score / |D|, nats per demonstration


@dataclass
class IterationTrace:
    iteration: int
    candidates: list
    scores: np.ndarray  # one per candidate; -inf where a demonstration becomes impossible
    admissible: np.ndarray  # bool per candidate
    num_demos: int

    def best(self):
        """Index of the winning candidate, or None if nothing is admissible."""
        if not self.admissible.any():
            return None
        masked = np.where(self.admissible, self.scores, np.inf)
        return int(np.argmin(masked))


@dataclass
class InferenceResult:
    selected: list[Selection]
    final_constraints: ConstraintSet
    trace: list[IterationTrace] = field(default_factory=list)
    status: str = "max_iterations"


def generate_candidates(
    mdp: Mdp,
    demos: DemonstrationSet,
    current: ConstraintSet,
    fixed_psi: float | None = None,
) -> list[CandidateConstraint]:
    """All single-step augmentations of ``current`` that keep every demonstration.

    State candidates carry the data-driven risk level, or ``fixed_psi`` when
    given. Action candidates are the actions never demonstrated. Order is
    states by index, then actions by index.
    """
    _, xs, acts, _ = demos.state_action_arrays()
    demo_rows = np.unique(xs * mdp.num_actions + acts)
    if fixed_psi is None:
        levels = risk_levels(mdp, demos)
    else:
        levels = np.full(mdp.num_states, float(fixed_psi))

    out = []
    for x in range(mdp.num_states):
        if not levels[x] < current.psi[x]:
            continue
        cand = CandidateConstraint.state(current, x, levels[x])
        if np.isin(candidate_exclusions(mdp, cand), demo_rows).any():
            continue
        out.append(cand)
    used = set(acts.tolist())
    for a in range(mdp.num_actions):
        if a not in current.forbidden_actions and a not in used:
            out.append(CandidateConstraint.action(current, a))
    return out


def _demo_survival(mdp: Mdp, delta: np.ndarray, demos: DemonstrationSet) -> np.ndarray:
    """False for candidates under which some demonstrated action has zero probability."""
    ts, xs, acts, _ = demos.state_action_arrays()
    ok = np.ones(delta.shape[2], dtype=bool)
    if not len(ts):
        return ok
    ok &= np.isfinite(delta[ts, xs, :]).all(axis=0)
    rows = xs * mdp.num_actions + acts
    for t in np.unique(ts):
        sel = rows[ts == t]
        d = expected_next(mdp, delta[t + 1])[sel]
        ok &= np.isfinite(d).all(axis=0)
    return ok


def score_candidates(mdp: Mdp, demos: DemonstrationSet, base: ConstraintSet, candidates) -> IterationTrace:
    check_augments(base, candidates)
    result = soft_backup(mdp, base)
    masks = candidate_masks(mdp, result.mask[0], candidates)
    delta = delta_tensor(mdp, result, masks)
    starts = np.asarray(demos.start_states(), dtype=np.int64)
    scores = delta[0, starts, :].sum(axis=0) if len(starts) else np.zeros(len(candidates))
    admissible = _demo_survival(mdp, delta, demos)
    return IterationTrace(0, list(candidates), scores, admissible, len(demos))


def demos_feasible(mdp: Mdp, c: ConstraintSet, demos: DemonstrationSet) -> bool:
    _, xs, acts, _ = demos.state_action_arrays()
    return bool(feasibility_mask(mdp, c)[xs, acts].all())


def greedy_infer(
    mdp: Mdp,
    demos: DemonstrationSet,
    base: ConstraintSet | None = None,
    max_iterations: int = 10,
    stop_gain: float = DEFAULT_STOP_GAIN,
    fixed_psi: float | None = None,
) -> InferenceResult:
    """Add one constraint per iteration until the per-demo gain drops below ``stop_gain``."""
    if base is None:
        base = ConstraintSet.unconstrained(mdp.num_states)
    base.check_against(mdp)
    check_demonstrations(mdp, demos)
    if not demos_feasible(mdp, base, demos):
        raise ValueError("demonstrations are infeasible under the base constraint set")

    current = base
    selected, trace = [], []
    status = "max_iterations"
    n = max(len(demos), 1)
    for it in range(max_iterations):
        candidates = generate_candidates(mdp, demos, current, fixed_psi)
        entry = score_candidates(mdp, demos, current, candidates)
        entry.iteration = it
        trace.append(entry)
        k = entry.best()
        if k is None:
            status = "exhausted"
            break
        score = float(entry.scores[k])
        gain = -score / n
        if gain < stop_gain:
            status = "converged"
            break
        cand = candidates[k]
        selected.append(Selection(it, cand, score, gain))
        current = cand.apply()
        log.info("iteration %d: %s, gain %.4f nats/demo", it, cand.label(), gain)
        if not demos_feasible(mdp, current, demos):
            raise AssertionError(f"selected {cand.label()} excludes a demonstration")
    return InferenceResult(selected, current, trace, status)
