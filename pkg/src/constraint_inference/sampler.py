"""Synthetic expert demonstrations from the soft-optimal Boltzmann policy.

Randomness: trajectory ``i`` of a run with seed ``s`` draws from its own
Philox4x64 stream keyed by ``SeedSequence([s, i])``. Each step consumes two
uniforms, one for the action and one for the successor, both resolved by
inverse-CDF lookup over ascending indices. Aborted attempts keep drawing from
the same stream.
"""

from __future__ import annotations

import numpy as np

from .constraints import ConstraintSet
from .mdp import DemonstrationSet, Mdp, Trajectory
from .soft_bellman import policy_from_backup, soft_backup

GENERATOR = "numpy.Philox(SeedSequence([seed, trajectory_index]))"
MAX_ATTEMPTS = 1000


def trajectory_stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def _pick(cdf: np.ndarray, u: float) -> int:
    i = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    return min(i, len(cdf) - 1)


def sample_demonstrations(mdp: Mdp, c: ConstraintSet, x0: int, n: int, seed: int) -> DemonstrationSet:
    mdp.check_state(x0)
    policy = policy_from_backup(mdp, c, soft_backup(mdp, c))
    cdfs = np.cumsum(policy.prob, axis=2)
    k = mdp.kernel
    trajectories = []
    aborts = 0
    for i in range(n):
        rng = trajectory_stream(seed, i)
        for _ in range(MAX_ATTEMPTS):
            states, actions = [x0], []
            x = x0
            for t in range(mdp.horizon):
                if cdfs[t, x, -1] <= 0:
                    break
                a = _pick(cdfs[t, x], rng.random())
                r = mdp.row(x, a)
                lo, hi = k.indptr[r], k.indptr[r + 1]
                x = int(k.indices[lo + _pick(np.cumsum(k.data[lo:hi]), rng.random())])
                actions.append(a)
                states.append(x)
            if len(actions) == mdp.horizon:
                break
            aborts += 1
        else:
            raise RuntimeError(f"trajectory {i}: dead end reached on every attempt")
        trajectories.append(Trajectory(states, actions))
    meta = {"seed": int(seed), "generator": GENERATOR, "aborts": aborts, "start_state": int(x0)}
    return DemonstrationSet(trajectories, meta)
