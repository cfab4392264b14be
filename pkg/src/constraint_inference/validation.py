"""Seeded property checks comparing the production backups with the oracles.

Each ``check_*`` function returns a :class:`CheckReport`. The ratio routine
under test is injectable so a deliberately broken backup can be shown to fail.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .constraints import CandidateConstraint, ConstraintSet, feasibility_mask
from .f_ratio import combined_backup
from .mdp import Mdp
from .oracle import enumerate_paths_value, probability_space_values, two_backup_f
from .soft_bellman import policy_from_backup, soft_backup

THEOREM_TOL = 1e-9
ENUM_RTOL = 1e-9
NORM_TOL = 1e-9
MONO_SLACK = 1e-12
RANGE_SLACK = 1e-12


@dataclass
class CheckReport:
    name: str
    passed: bool
    trials: int
    worst: float = 0.0
    seconds: float = 0.0
    failures: list = field(default_factory=list)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.trials} trials, worst={self.worst:.3g}, {self.seconds:.2f}s"


def random_mdp(rng: np.random.Generator, max_states=6, max_actions=3, max_horizon=4, deterministic=False) -> Mdp:
    nX = int(rng.integers(2, max_states + 1))
    nA = int(rng.integers(1, max_actions + 1))
    T = int(rng.integers(1, max_horizon + 1))
    if deterministic:
        S = np.zeros((nX, nA, nX))
        nxt = rng.integers(0, nX, size=(nX, nA))
        S[np.arange(nX)[:, None], np.arange(nA)[None, :], nxt] = 1.0
    else:
        S = rng.random((nX, nA, nX)) * (rng.random((nX, nA, nX)) < 0.6)
        empty = S.sum(axis=2) == 0
        S[empty, rng.integers(0, nX)] = 1.0
        S /= S.sum(axis=2, keepdims=True)
    return Mdp(S, rng.normal(size=(nX, nA)), rng.normal(size=nX), T)


def random_base(rng: np.random.Generator, mdp: Mdp) -> ConstraintSet:
    psi = np.ones(mdp.num_states)
    for x in range(mdp.num_states):
        if rng.random() < 0.25:
            psi[x] = rng.choice([0.0, rng.random()])
    forbidden = [a for a in range(mdp.num_actions) if mdp.num_actions > 1 and rng.random() < 0.15]
    return ConstraintSet(psi, forbidden)


def random_candidate(rng: np.random.Generator, mdp: Mdp, base: ConstraintSet) -> CandidateConstraint:
    free_actions = [a for a in range(mdp.num_actions) if a not in base.forbidden_actions]
    states = np.flatnonzero(base.psi > 0)
    if free_actions and (len(states) == 0 or rng.random() < 0.3):
        return CandidateConstraint.action(base, int(rng.choice(free_actions)))
    x = int(rng.choice(states))
    psi = float(rng.choice([0.0, rng.random() * base.psi[x]]))
    return CandidateConstraint.state(base, x, psi)


def default_ratio(mdp, base, candidates):
    _, tables = combined_backup(mdp, base, candidates)
    return [t.delta for t in tables]


def check_theorem(trials=100, seed=0, ratio_fn: Callable = default_ratio) -> CheckReport:
    """One-pass ratios against two independent backups at every finite (t, x)."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst, failures = 0.0, []
    for i in range(trials):
        mdp = random_mdp(rng)
        base = random_base(rng, mdp)
        cands = [random_candidate(rng, mdp, base) for _ in range(3)]
        deltas = ratio_fn(mdp, base, cands)
        for cand, delta in zip(cands, deltas):
            ref = two_backup_f(mdp, base, cand)
            fin = np.isfinite(ref)
            if not np.array_equal(fin, np.isfinite(delta)):
                failures.append((i, cand.label(), "finiteness pattern differs"))
                continue
            if fin.any():
                err = float(np.max(np.abs(delta[fin] - ref[fin])))
                worst = max(worst, err)
                if err > THEOREM_TOL:
                    failures.append((i, cand.label(), err))
    return CheckReport("theorem-1 equivalence", not failures, trials, worst, time.perf_counter() - t0, failures)


def check_enumeration(trials=50, seed=1) -> CheckReport:
    """Deterministic kernels: soft V_0 against exhaustive path enumeration."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst, failures = 0.0, []
    for i in range(trials):
        mdp = random_mdp(rng, deterministic=True)
        c = random_base(rng, mdp)
        v0 = soft_backup(mdp, c).v[0]
        for x in range(mdp.num_states):
            ref = enumerate_paths_value(mdp, c, x)
            if np.isinf(ref) or np.isinf(v0[x]):
                if ref != v0[x]:
                    failures.append((i, x, ref, v0[x]))
                continue
            err = abs(v0[x] - ref) / max(1.0, abs(ref))
            worst = max(worst, err)
            if err > ENUM_RTOL:
                failures.append((i, x, err))
    return CheckReport("deterministic enumeration", not failures, trials, worst, time.perf_counter() - t0, failures)


def check_policy(trials=150, seed=0) -> CheckReport:
    """Policy rows sum to one on live states and vanish on infeasible actions.

    Replays the instance streams of the two checks above.
    """
    t0 = time.perf_counter()
    worst, failures = 0.0, []
    streams = [(np.random.default_rng(seed), False, 100), (np.random.default_rng(seed + 1), True, trials - 100)]
    count = 0
    for rng, det, n in streams:
        for _ in range(max(n, 0)):
            mdp = random_mdp(rng, deterministic=det)
            c = random_base(rng, mdp)
            if not det:
                for _ in range(3):
                    random_candidate(rng, mdp, c)
            b = soft_backup(mdp, c)
            pol = policy_from_backup(mdp, c, b)
            mask = feasibility_mask(mdp, c)
            live = np.isfinite(b.v[:-1])
            sums = pol.prob.sum(axis=2)
            err = float(np.max(np.abs(sums[live] - 1.0), initial=0.0))
            worst = max(worst, err)
            if err > NORM_TOL or np.any(pol.prob[:, ~mask] != 0) or np.any(sums[~live] != 0):
                failures.append((count, err))
            count += 1
    return CheckReport("policy normalisation", not failures, count, worst, time.perf_counter() - t0, failures)


def check_monotone_psi(trials=50, seed=2, ratio_fn: Callable = default_ratio) -> CheckReport:
    """Lowering psi at one state never raises the log-ratio at any start state."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    grid = np.linspace(1.0, 0.0, 21)[1:]
    worst, failures = 0.0, []
    for i in range(trials):
        mdp = random_mdp(rng)
        base = ConstraintSet.unconstrained(mdp.num_states)
        x = int(rng.integers(mdp.num_states))
        cands = [CandidateConstraint.state(base, x, p) for p in grid]
        starts = np.array([d[0] for d in ratio_fn(mdp, base, cands)])  # (len(grid), X)
        with np.errstate(invalid="ignore"):
            rise = np.diff(starts, axis=0)
        rise = np.where(np.isnan(rise), 0.0, rise)
        worst = max(worst, float(rise.max(initial=0.0)))
        if np.any(rise > MONO_SLACK):
            failures.append((i, x, float(rise.max())))
    return CheckReport("psi monotonicity", not failures, trials, worst, time.perf_counter() - t0, failures)


def check_delta_range(trials=100, seed=3, ratio_fn: Callable = default_ratio) -> CheckReport:
    """All ratios at most 0 and terminal rows exactly 0."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst, failures = -np.inf, []
    for i in range(trials):
        mdp = random_mdp(rng)
        base = random_base(rng, mdp)
        cands = [random_candidate(rng, mdp, base) for _ in range(4)]
        for delta in ratio_fn(mdp, base, cands):
            worst = max(worst, float(delta.max()))
            if delta.max() > RANGE_SLACK or np.any(delta[-1] != 0):
                failures.append(i)
    return CheckReport("ratio range", not failures, trials, max(worst, 0.0), time.perf_counter() - t0, failures)


def run_all(ratio_fn: Callable = default_ratio) -> list[CheckReport]:
    return [
        check_theorem(ratio_fn=ratio_fn),
        check_enumeration(),
        check_policy(),
        check_monotone_psi(ratio_fn=ratio_fn),
        check_delta_range(ratio_fn=ratio_fn),
    ]


def probability_space_agreement(mdp: Mdp, c: ConstraintSet) -> float:
    """Largest gap between the log-space and probability-space values."""
    a = soft_backup(mdp, c).v
    b = probability_space_values(mdp, c)
    fin = np.isfinite(a) & np.isfinite(b)
    if not np.array_equal(np.isfinite(a), np.isfinite(b)):
        return np.inf
    return float(np.max(np.abs(a[fin] - b[fin]), initial=0.0))
