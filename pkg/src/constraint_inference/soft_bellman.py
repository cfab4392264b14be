"""Maximum-causal-entropy soft Bellman backup and the induced Boltzmann policy.

All quantities are kept in log space. ``-inf`` in ``V`` marks a state with no
feasible continuation; any action with positive probability of reaching such
a state gets ``Q = -inf`` and therefore zero policy mass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .constraints import ConstraintSet, feasibility_mask
from .mdp import Mdp, Trajectory


@dataclass(frozen=True)
class SoftBackupResult:
    """``v`` has shape ``(T + 1, X)``; ``q`` and ``mask`` have shape ``(T, X, A)``.

    ``q`` holds ``r + E[V_{t+1}]`` for every pair, feasible or not; ``mask`` is
    the feasibility indicator the backup summed over.
    """

    v: np.ndarray
    q: np.ndarray
    mask: np.ndarray


@dataclass(frozen=True)
class Policy:
    prob: np.ndarray  # (T, X, A)
    dead_ends: list = field(default_factory=list)  # (t, x) rows with no mass


def expected_next(mdp: Mdp, values: np.ndarray) -> np.ndarray:
    """``sum_x' S(x, a, x') * values[x']`` per flat row, with ``-inf`` propagation.

    ``values`` may be ``(X,)`` or ``(X, K)``. A row touching a ``-inf`` entry
    with positive probability evaluates to ``-inf``; zero-probability entries
    never contribute.
    """
    finite = np.isfinite(values)
    out = mdp.kernel @ np.where(finite, values, 0.0)
    if not finite.all():
        hits = mdp.kernel @ (~finite).astype(float)
        out = np.where(hits > 0, -np.inf, out)
    return out


def masked_logsumexp(q: np.ndarray, mask: np.ndarray, axis: int = -1) -> np.ndarray:
    terms = np.where(mask, q, -np.inf)
    with np.errstate(divide="ignore"):
        return logsumexp(terms, axis=axis)


def soft_backup(mdp: Mdp, c: ConstraintSet) -> SoftBackupResult:
    c.check_against(mdp)
    T, nX, nA = mdp.horizon, mdp.num_states, mdp.num_actions
    mask = feasibility_mask(mdp, c)
    v = np.empty((T + 1, nX))
    q = np.empty((T, nX, nA))
    v[T] = mdp.terminal_reward
    for t in range(T - 1, -1, -1):
        q[t] = mdp.running_reward + expected_next(mdp, v[t + 1]).reshape(nX, nA)
        v[t] = masked_logsumexp(q[t], mask)
    for arr in (v, q, mask):
        arr.setflags(write=False)
    return SoftBackupResult(v=v, q=q, mask=np.broadcast_to(mask, q.shape))


def policy_from_backup(mdp: Mdp, c: ConstraintSet, b: SoftBackupResult) -> Policy:
    """Boltzmann policy ``exp(Q - V)`` restricted to feasible actions."""
    T = mdp.horizon
    live = np.isfinite(b.v[:T])
    with np.errstate(invalid="ignore"):
        logits = np.where(b.mask & live[..., None], b.q - np.where(live, b.v[:T], 0.0)[..., None], -np.inf)
    prob = np.exp(logits)
    sums = prob.sum(axis=2, keepdims=True)
    prob = np.divide(prob, sums, out=np.zeros_like(prob), where=sums > 0)
    dead = [(int(t), int(x)) for t, x in zip(*np.nonzero(sums[..., 0] == 0))]
    prob.setflags(write=False)
    return Policy(prob=prob, dead_ends=dead)


def trajectory_log_likelihood(policy: Policy, mdp: Mdp, traj: Trajectory) -> tuple[float, float]:
    """Return ``(action_loglik, full_loglik)`` of a demonstrated path.

    The full value adds the constraint-independent ``log S`` transition terms.
    """
    if traj.horizon != mdp.horizon:
        raise ValueError(f"trajectory length {traj.horizon} != horizon {mdp.horizon}")
    act = 0.0
    dyn = 0.0
    with np.errstate(divide="ignore"):
        for t, x, a, y in traj.transitions():
            act += np.log(policy.prob[t, x, a])
            dyn += np.log(mdp.prob(x, a, y))
    return float(act), float(act + dyn)
