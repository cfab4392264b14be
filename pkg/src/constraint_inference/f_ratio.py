"""Partition-mass ratios for a batch of candidate constraints in one backward pass.

For a candidate ``C+`` tightening a base set ``C0``, ``delta[t, x]`` is
``V_{C+,t}(x) - V_{C0,t}(x)``, the log of the fraction of soft partition mass
that survives the extra constraint. It satisfies

    delta_t(x) = log sum_{a feasible under C+} P_C0(a | x) * exp(E_{x'} delta_{t+1}(x'))

with ``delta_T = 0``, so every candidate reuses the base ``Q`` and ``V``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .constraints import CandidateConstraint, ConstraintSet, candidate_exclusions
from .mdp import Mdp
from .soft_bellman import SoftBackupResult, expected_next, soft_backup

# Below this lost fraction, log1p of the loss is accurate; above it the direct
# log-sum of surviving terms is.
_LOSS_SWITCH = 0.5


@dataclass(frozen=True)
class FTable:
    delta: np.ndarray  # (T + 1, X), values in [-inf, 0]
    candidate_id: int


def candidate_masks(mdp: Mdp, base_mask: np.ndarray, candidates: Sequence[CandidateConstraint]) -> np.ndarray:
    """Feasibility under each candidate, shape ``(X, A, K)``."""
    nX, nA = mdp.num_states, mdp.num_actions
    masks = np.repeat(base_mask.reshape(nX * nA, 1), len(candidates), axis=1)
    for k, cand in enumerate(candidates):
        masks[candidate_exclusions(mdp, cand), k] = False
    return masks.reshape(nX, nA, len(candidates))


def check_augments(base: ConstraintSet, candidates: Sequence[CandidateConstraint]):
    for k, cand in enumerate(candidates):
        if cand.base != base or not cand.apply().tightens(base):
            raise ValueError(f"candidate {k} ({cand.label()}) does not augment the base constraint set")


def delta_step(logp: np.ndarray, d: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """One backward step of the log-ratio recursion.

    Args:
        logp: base log-policy ``(X, A)``, ``-inf`` off the base-feasible set.
        d: ``E_{x'} delta_{t+1}(x')`` per candidate, ``(X, A, K)``.
        masks: candidate feasibility ``(X, A, K)``.
    """
    p = np.exp(logp)[..., None]
    kept = np.where(masks, -np.expm1(d), 1.0)
    loss = np.sum(p * kept, axis=1)
    with np.errstate(divide="ignore"):
        direct = logsumexp(np.where(masks, logp[..., None] + d, -np.inf), axis=1)
        small = np.log1p(-np.minimum(loss, _LOSS_SWITCH))
    return np.where(loss <= _LOSS_SWITCH, small, direct)


def delta_tensor(mdp: Mdp, base_result: SoftBackupResult, masks: np.ndarray) -> np.ndarray:
    """Run the ratio recursion for every candidate column; returns ``(T + 1, X, K)``."""
    T, nX, nA = mdp.horizon, mdp.num_states, mdp.num_actions
    K = masks.shape[2]
    delta = np.zeros((T + 1, nX, K))
    for t in range(T - 1, -1, -1):
        v = base_result.v[t]
        live = np.isfinite(v)
        with np.errstate(invalid="ignore"):
            logp = np.where(base_result.mask[t] & live[:, None], base_result.q[t] - np.where(live, v, 0.0)[:, None], -np.inf)
        d = expected_next(mdp, delta[t + 1]).reshape(nX, nA, K)
        step = delta_step(logp, d, masks)
        # a state already dead under the base keeps ratio 1 by convention
        delta[t] = np.where(live[:, None], step, 0.0)
    return delta


def combined_backup(mdp: Mdp, base: ConstraintSet, candidates: Sequence[CandidateConstraint]):
    """Base soft backup plus one ``FTable`` per candidate, from a single sweep."""
    check_augments(base, candidates)
    result = soft_backup(mdp, base)
    masks = candidate_masks(mdp, result.mask[0], candidates)
    delta = delta_tensor(mdp, result, masks)
    delta.setflags(write=False)
    return result, [FTable(delta=delta[:, :, k], candidate_id=k) for k in range(len(candidates))]


def f_at_start(table: FTable, x0: int) -> float:
    """Log ratio at ``t = 0``; ``-inf`` if the candidate removes all behaviour from ``x0``."""
    if not 0 <= x0 < table.delta.shape[1]:
        raise IndexError(f"state {x0} out of range")
    return float(table.delta[0, x0])
