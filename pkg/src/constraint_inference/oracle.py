"""Brute-force references used to cross-check the production backups.

Nothing here imports the soft-backup or ratio code: the feasibility test, the
value recursion and the path enumeration are written out directly with plain
Python loops over a dense kernel.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .constraints import CandidateConstraint, ConstraintSet
from .mdp import Mdp

_SLACK = 1e-12


def _dense(mdp: Mdp) -> np.ndarray:
    return mdp.kernel.toarray().reshape(mdp.num_states, mdp.num_actions, mdp.num_states)


def _allowed(S, psi, forbidden, x, a) -> bool:
    if a in forbidden:
        return False
    return all(S[x, a, y] <= psi[y] + _SLACK for y in range(S.shape[2]) if psi[y] < 1)


def _log_sum(logs):
    logs = [v for v in logs if v != -math.inf]
    if not logs:
        return -math.inf
    m = max(logs)
    return m + math.log(math.fsum(math.exp(v - m) for v in logs))


def probability_space_values(mdp: Mdp, c: ConstraintSet) -> np.ndarray:
    """Soft values ``V_t(x)`` from partition masses ``Z_t(x)``.

    ``Z_t(x) = sum_a Phi(x, a) exp(r(x, a) + sum_x' S log Z_{t+1}(x'))``. Each
    slice's exponents are shifted by their largest value and the shift is
    carried as a separate scale; this is exact because kernel rows sum to
    one. With one scale per slice, states whose values differ by more than
    ~700 nats underflow to ``-inf``, so this is for moderate instances only.
    """
    S = _dense(mdp)
    nX, nA, T = mdp.num_states, mdp.num_actions, mdp.horizon
    psi, forbidden = list(c.psi), set(c.forbidden_actions)
    r, w = mdp.running_reward, mdp.terminal_reward

    scale = max(w)
    z = [math.exp(w[x] - scale) for x in range(nX)]
    out = np.empty((T + 1, nX))
    out[T] = [scale + math.log(v) if v > 0 else -math.inf for v in z]
    for t in range(T - 1, -1, -1):
        expos = []
        for x in range(nX):
            row = []
            for a in range(nA):
                if not _allowed(S, psi, forbidden, x, a):
                    continue
                expo = r[x, a]
                for y in range(nX):
                    if S[x, a, y] > 0:
                        if z[y] == 0.0:
                            expo = -math.inf
                            break
                        expo += S[x, a, y] * math.log(z[y])
                row.append(expo)
            expos.append(row)
        top = max((e for row in expos for e in row), default=-math.inf)
        if top == -math.inf:
            z = [0.0] * nX
        else:
            z = [math.fsum(math.exp(e - top) for e in row) for row in expos]
            scale += top
        out[t] = [scale + math.log(v) if v > 0 else -math.inf for v in z]
    return out


def enumerate_paths_value(mdp: Mdp, c: ConstraintSet, x0: int) -> float:
    """Log-sum of ``exp(path reward)`` over every feasible action sequence.

    Only defined for deterministic kernels, where the partition mass is a sum
    over paths.
    """
    S = _dense(mdp)
    if not np.all((S == 0) | (S == 1)) or not np.all(S.sum(axis=2) == 1):
        raise ValueError("enumerate_paths_value needs a deterministic kernel")
    nxt = S.argmax(axis=2)
    psi, forbidden = list(c.psi), set(c.forbidden_actions)
    logs = []
    for seq in itertools.product(range(mdp.num_actions), repeat=mdp.horizon):
        x, total = x0, 0.0
        for a in seq:
            if not _allowed(S, psi, forbidden, x, a):
                break
            total += mdp.running_reward[x, a]
            x = nxt[x, a]
        else:
            logs.append(total + mdp.terminal_reward[x])
    return _log_sum(logs)


def two_backup_f(mdp: Mdp, base: ConstraintSet, candidate: CandidateConstraint) -> np.ndarray:
    """Reference log-ratio ``V_{C+} - V_{C0}`` as a ``(T + 1, X)`` table.

    Entries where the base value is ``-inf`` are set to 0.
    """
    v0 = probability_space_values(mdp, base)
    v1 = probability_space_values(mdp, candidate.apply())
    with np.errstate(invalid="ignore"):
        diff = v1 - v0
    return np.where(np.isfinite(v0), diff, 0.0)
