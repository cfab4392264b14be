"""Finite-horizon MDP data model.

States and actions are plain index sets ``0..n-1``. The transition kernel is
stored as a CSR matrix of shape ``(num_states * num_actions, num_states)``
where row ``x * num_actions + a`` holds ``S(x, a, .)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

ROW_SUM_TOL = 1e-12


class Violation(NamedTuple):
    kind: str
    state: int
    action: int | None
    detail: str


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


class Mdp:
    """Finite, stationary, finite-horizon MDP.

    Args:
        transition: ``S(x, a, x')`` either as a dense ``(X, A, X)`` array or a
            sparse matrix of shape ``(X * A, X)``.
        running_reward: ``r(x, a)``, shape ``(X, A)``.
        terminal_reward: ``w(x)``, shape ``(X,)``.
        horizon: number of decision epochs ``T >= 1``.
    """

    def __init__(self, transition, running_reward, terminal_reward, horizon: int):
        running_reward = _frozen(running_reward)
        if running_reward.ndim != 2:
            raise ValueError("running_reward must have shape (num_states, num_actions)")
        num_states, num_actions = running_reward.shape
        if sp.issparse(transition):
            kernel = sp.csr_matrix(transition, dtype=float, copy=True)
        else:
            dense = np.asarray(transition, dtype=float)
            if dense.shape != (num_states, num_actions, num_states):
                raise ValueError(
                    f"transition shape {dense.shape} does not match "
                    f"({num_states}, {num_actions}, {num_states})"
                )
            kernel = sp.csr_matrix(dense.reshape(num_states * num_actions, num_states))
        if kernel.shape != (num_states * num_actions, num_states):
            raise ValueError(f"sparse transition has shape {kernel.shape}")
        kernel.eliminate_zeros()
        kernel.sum_duplicates()
        kernel.sort_indices()
        kernel.data.setflags(write=False)

        terminal_reward = _frozen(terminal_reward)
        if terminal_reward.shape != (num_states,):
            raise ValueError("terminal_reward must have shape (num_states,)")
        if int(horizon) != horizon or horizon < 1:
            raise ValueError(f"horizon must be an integer >= 1, got {horizon!r}")

        self.num_states = num_states
        self.num_actions = num_actions
        self.horizon = int(horizon)
        self.kernel = kernel
        self.kernel_csc = kernel.tocsc()
        self.running_reward = running_reward
        self.terminal_reward = terminal_reward

    def __repr__(self):
        return (
            f"Mdp(num_states={self.num_states}, num_actions={self.num_actions}, "
            f"horizon={self.horizon}, nnz={self.kernel.nnz})"
        )

    def row(self, x: int, a: int) -> int:
        return x * self.num_actions + a

    def check_state(self, x):
        if not (0 <= int(x) < self.num_states) or int(x) != x:
            raise IndexError(f"state {x!r} out of range [0, {self.num_states})")

    def check_action(self, a):
        if not (0 <= int(a) < self.num_actions) or int(a) != a:
            raise IndexError(f"action {a!r} out of range [0, {self.num_actions})")

    def prob(self, x: int, a: int, x_next: int) -> float:
        """Dense accessor for ``S(x, a, x')``."""
        self.check_state(x)
        self.check_action(a)
        self.check_state(x_next)
        return float(self.kernel[self.row(x, a), x_next])

    def transition_dense(self) -> np.ndarray:
        return self.kernel.toarray().reshape(
            self.num_states, self.num_actions, self.num_states
        )

    def column(self, x_next: int):
        """Return ``(rows, probs)`` of every (x, a) row with mass on ``x_next``."""
        csc = self.kernel_csc
        lo, hi = csc.indptr[x_next], csc.indptr[x_next + 1]
        return csc.indices[lo:hi], csc.data[lo:hi]

    def is_deterministic(self) -> bool:
        counts = np.diff(self.kernel.indptr)
        return bool(np.all(counts == 1) and np.allclose(self.kernel.data, 1.0, atol=ROW_SUM_TOL))


def successors(mdp: Mdp, x: int, a: int) -> list[tuple[int, float]]:
    """Positive-probability successors of ``(x, a)`` in ascending state order."""
    mdp.check_state(x)
    mdp.check_action(a)
    r = mdp.row(x, a)
    lo, hi = mdp.kernel.indptr[r], mdp.kernel.indptr[r + 1]
    return [
        (int(s), float(p))
        for s, p in zip(mdp.kernel.indices[lo:hi], mdp.kernel.data[lo:hi])
        if p > 0
    ]


def validate_mdp(mdp: Mdp) -> list[Violation]:
    """Collect every stochasticity, range and finiteness violation.

    An empty list means the MDP is valid.
    """
    out = []
    k = mdp.kernel
    nA = mdp.num_actions
    rows = np.repeat(np.arange(k.shape[0]), np.diff(k.indptr))
    bad = ~np.isfinite(k.data) | (k.data < 0) | (k.data > 1)
    for r, s, p in zip(rows[bad], k.indices[bad], k.data[bad]):
        out.append(Violation("range", int(r // nA), int(r % nA), f"S(.,.,{s})={p!r}"))
    sums = np.asarray(k.sum(axis=1)).ravel()
    for r in np.flatnonzero(~(np.abs(sums - 1.0) <= ROW_SUM_TOL)):
        out.append(Violation("row_sum", int(r // nA), int(r % nA), f"sum={sums[r]!r}"))
    for x, a in zip(*np.nonzero(~np.isfinite(mdp.running_reward))):
        out.append(Violation("running_reward", int(x), int(a), "not finite"))
    for x in np.flatnonzero(~np.isfinite(mdp.terminal_reward)):
        out.append(Violation("terminal_reward", int(x), None, "not finite"))
    return out


@dataclass(frozen=True)
class Trajectory:
    """Demonstrated path: ``T + 1`` states and ``T`` actions."""

    states: tuple[int, ...]
    actions: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(int(s) for s in self.states))
        object.__setattr__(self, "actions", tuple(int(a) for a in self.actions))
        if len(self.states) != len(self.actions) + 1:
            raise ValueError(
                f"trajectory has {len(self.states)} states and {len(self.actions)} actions"
            )

    @property
    def horizon(self) -> int:
        return len(self.actions)

    def transitions(self):
        """Yield ``(t, x_t, a_t, x_{t+1})``."""
        for t, a in enumerate(self.actions):
            yield t, self.states[t], a, self.states[t + 1]


@dataclass
class DemonstrationSet:
    trajectories: list[Trajectory]
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    def __getitem__(self, i):
        return self.trajectories[i]

    def start_states(self) -> list[int]:
        return [tr.states[0] for tr in self.trajectories]

    def state_action_arrays(self):
        """Flatten all demonstrated transitions into index arrays ``(t, x, a, x_next)``."""
        ts, xs, acts, nxt = [], [], [], []
        for tr in self.trajectories:
            for t, x, a, y in tr.transitions():
                ts.append(t)
                xs.append(x)
                acts.append(a)
                nxt.append(y)
        as_int = lambda v: np.asarray(v, dtype=np.int64)
        return as_int(ts), as_int(xs), as_int(acts), as_int(nxt)


def trajectory_errors(mdp: Mdp, traj: Trajectory) -> list[str]:
    """Bounds, length and positive-probability checks for one trajectory."""
    errs = []
    if traj.horizon != mdp.horizon:
        errs.append(f"length {traj.horizon} != horizon {mdp.horizon}")
    for s in traj.states:
        if not 0 <= s < mdp.num_states:
            errs.append(f"state {s} out of range")
    for a in traj.actions:
        if not 0 <= a < mdp.num_actions:
            errs.append(f"action {a} out of range")
    if errs:
        return errs
    for t, x, a, y in traj.transitions():
        if mdp.kernel[mdp.row(x, a), y] <= 0:
            errs.append(f"t={t}: S({x},{a},{y}) = 0")
    return errs


def check_demonstrations(mdp: Mdp, demos: Sequence[Trajectory]):
    for i, tr in enumerate(demos):
        errs = trajectory_errors(mdp, tr)
        if errs:
            raise ValueError(f"demonstration {i} invalid: " + "; ".join(errs))
