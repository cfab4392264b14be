"""Chance-constraint hypotheses, the feasibility indicator and risk-level selection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .mdp import Mdp, Trajectory

# Absolute slack on S(x, a, x') <= psi(x'); kernel entries such as 0.1/7 are
# not exactly representable and a psi read back from the kernel must admit them.
PSI_SLACK = 1e-12


class ConstraintSet:
    """Per-state chance thresholds ``psi`` plus a set of forbidden actions.

    ``psi[x] == 1`` leaves ``x`` unconstrained; ``psi[x] == 0`` excludes any
    action with positive probability of entering ``x``.
    """

    __slots__ = ("psi", "forbidden_actions")

    def __init__(self, psi, forbidden_actions: Iterable[int] = ()):
        psi = np.array(psi, dtype=float)
        if psi.ndim != 1:
            raise ValueError("psi must be one-dimensional")
        if np.any(~np.isfinite(psi)) or np.any(psi < 0) or np.any(psi > 1):
            raise ValueError("psi values must lie in [0, 1]")
        psi.setflags(write=False)
        self.psi = psi
        self.forbidden_actions = frozenset(int(a) for a in forbidden_actions)

    @classmethod
    def unconstrained(cls, num_states: int) -> "ConstraintSet":
        return cls(np.ones(num_states))

    @property
    def num_states(self) -> int:
        return len(self.psi)

    def constrained_states(self) -> np.ndarray:
        return np.flatnonzero(self.psi < 1)

    def with_state(self, x: int, psi: float) -> "ConstraintSet":
        new = self.psi.copy()
        new[x] = psi
        return ConstraintSet(new, self.forbidden_actions)

    def with_action(self, a: int) -> "ConstraintSet":
        return ConstraintSet(self.psi, self.forbidden_actions | {int(a)})

    def tightens(self, other: "ConstraintSet") -> bool:
        """True if every constraint of ``other`` is at least as strict here."""
        return bool(np.all(self.psi <= other.psi)) and other.forbidden_actions <= self.forbidden_actions

    def check_against(self, mdp: Mdp):
        if self.num_states != mdp.num_states:
            raise ValueError(f"psi has length {self.num_states}, MDP has {mdp.num_states} states")
        bad = [a for a in self.forbidden_actions if not 0 <= a < mdp.num_actions]
        if bad:
            raise ValueError(f"forbidden actions out of range: {sorted(bad)}")

    def __eq__(self, other):
        if not isinstance(other, ConstraintSet):
            return NotImplemented
        return np.array_equal(self.psi, other.psi) and self.forbidden_actions == other.forbidden_actions

    def __repr__(self):
        cs = {int(x): float(self.psi[x]) for x in self.constrained_states()}
        return f"ConstraintSet(psi={cs}, forbidden_actions={sorted(self.forbidden_actions)})"

    def to_json(self) -> dict:
        return {"psi": [float(p) for p in self.psi], "forbidden_actions": sorted(self.forbidden_actions)}

    @classmethod
    def from_json(cls, obj: dict) -> "ConstraintSet":
        return cls(obj["psi"], obj.get("forbidden_actions", ()))


@dataclass(frozen=True)
class CandidateConstraint:
    """One-step augmentation of ``base``: lower psi at a state, or forbid an action."""

    kind: str  # "state" or "action"
    target: int
    base: ConstraintSet
    psi: float | None = None

    def __post_init__(self):
        if self.kind == "state":
            if self.psi is None:
                raise ValueError("state candidate needs a psi value")
            if not self.psi < self.base.psi[self.target]:
                raise ValueError(
                    f"state candidate must lower psi at {self.target} "
                    f"({self.psi} >= {self.base.psi[self.target]})"
                )
        elif self.kind == "action":
            if self.target in self.base.forbidden_actions:
                raise ValueError(f"action {self.target} already forbidden")
        else:
            raise ValueError(f"unknown candidate kind {self.kind!r}")

    @classmethod
    def state(cls, base, x, psi):
        return cls("state", int(x), base, float(psi))

    @classmethod
    def action(cls, base, a):
        return cls("action", int(a), base)

    def apply(self) -> ConstraintSet:
        if self.kind == "state":
            return self.base.with_state(self.target, self.psi)
        return self.base.with_action(self.target)

    def sort_key(self):
        return (0 if self.kind == "state" else 1, self.target)

    def label(self) -> str:
        if self.kind == "state":
            return f"state {self.target} (psi={self.psi:.6g})"
        return f"action {self.target}"


def feasibility_mask(mdp: Mdp, c: ConstraintSet) -> np.ndarray:
    """Boolean ``(X, A)`` array of the indicator over all state-action pairs."""
    k = mdp.kernel
    rows = np.repeat(np.arange(k.shape[0]), np.diff(k.indptr))
    violating = k.data > c.psi[k.indices] + PSI_SLACK
    ok = np.ones(k.shape[0], dtype=bool)
    ok[rows[violating]] = False
    mask = ok.reshape(mdp.num_states, mdp.num_actions)
    if c.forbidden_actions:
        mask[:, sorted(c.forbidden_actions)] = False
    return mask


def candidate_exclusions(mdp: Mdp, cand: CandidateConstraint) -> np.ndarray:
    """Flat ``x * A + a`` rows newly ruled out by the candidate's extra constraint."""
    if cand.kind == "action":
        return np.arange(mdp.num_states) * mdp.num_actions + cand.target
    rows, probs = mdp.column(cand.target)
    return rows[probs > cand.psi + PSI_SLACK]


def phi_indicator(mdp: Mdp, c: ConstraintSet, x: int, a: int) -> bool:
    mdp.check_state(x)
    mdp.check_action(a)
    if a in c.forbidden_actions:
        return False
    r = mdp.row(x, a)
    lo, hi = mdp.kernel.indptr[r], mdp.kernel.indptr[r + 1]
    nxt = mdp.kernel.indices[lo:hi]
    return bool(np.all(mdp.kernel.data[lo:hi] <= c.psi[nxt] + PSI_SLACK))


def feasible_actions(mdp: Mdp, c: ConstraintSet, x: int) -> set[int]:
    mdp.check_state(x)
    return {a for a in range(mdp.num_actions) if phi_indicator(mdp, c, x, a)}


def precursor_floor(mdp: Mdp, target: int) -> float:
    """Smallest psi at ``target`` that leaves every precursor state an action.

    Max over states with some action reaching ``target`` of the min over all
    actions of the probability of reaching it. Zero if nothing reaches it.
    """
    mdp.check_state(target)
    rows, probs = mdp.column(target)
    if len(rows) == 0:
        return 0.0
    nA = mdp.num_actions
    reach = np.zeros((mdp.num_states, nA))
    reach[rows // nA, rows % nA] = probs
    precursors = np.unique(rows // nA)
    return float(reach[precursors].min(axis=1).max())


def demonstrated_mass(mdp: Mdp, demos: Iterable[Trajectory], target: int) -> float:
    """Largest one-step probability of entering ``target`` along any demonstrated transition."""
    rows = {mdp.row(x, a) for tr in demos for _, x, a, _ in tr.transitions()}
    if not rows:
        return 0.0
    col = mdp.kernel[sorted(rows)][:, target]
    return float(col.max()) if col.nnz else 0.0


def select_risk_level(mdp: Mdp, demos: Iterable[Trajectory], target: int) -> float:
    """Tightest psi at ``target`` that keeps every demonstration and every precursor feasible."""
    mdp.check_state(target)
    return max(demonstrated_mass(mdp, demos, target), precursor_floor(mdp, target))


def risk_levels(mdp: Mdp, demos) -> np.ndarray:
    """Vectorised ``select_risk_level`` over all target states."""
    _, xs, acts, _ = demos.state_action_arrays()
    demo_max = np.zeros(mdp.num_states)
    if len(xs):
        rows = np.unique(xs * mdp.num_actions + acts)
        sub = mdp.kernel[rows]
        demo_max = np.asarray(sub.max(axis=0).todense()).ravel()
    floors = np.array([precursor_floor(mdp, x) for x in range(mdp.num_states)])
    return np.maximum(demo_max, floors)
