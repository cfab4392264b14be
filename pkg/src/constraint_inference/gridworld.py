"""Eight-direction stochastic gridworld with a loiter action.

Cells are ``(col, row)`` with ``row`` growing northwards; state index is
``row * width + col``. Actions 0..7 are the compass moves N, NE, E, SE, S, SW,
W, NW and action 8 is loiter. A move reaches its intended neighbour with
probability ``1 - slip`` and each of the other seven directions' neighbours
with ``slip / 7``. Off-grid targets clamp to the current cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .constraints import ConstraintSet
from .mdp import Mdp

DIRECTIONS = (
    ("N", 0, 1),
    ("NE", 1, 1),
    ("E", 1, 0),
    ("SE", 1, -1),
    ("S", 0, -1),
    ("SW", -1, -1),
    ("W", -1, 0),
    ("NW", -1, 1),
)
ACTION_NAMES = tuple(d[0] for d in DIRECTIONS) + ("LOITER",)
LOITER = 8
NUM_ACTIONS = 9


@dataclass
class GridSpec:
    width: int
    height: int
    slip: float = 0.1
    start: tuple[int, int] = (0, 0)
    goal: tuple[int, int] | None = None
    horizon: int = 30
    true_constraints: list = field(default_factory=list)  # [((col, row), psi), ...]
    step_cost: float = 1.0

    def __post_init__(self):
        self.start = tuple(int(v) for v in self.start)
        if self.goal is None:
            self.goal = (self.width - 1, self.height - 1)
        self.goal = tuple(int(v) for v in self.goal)
        self.true_constraints = [
            (tuple(int(v) for v in cell), float(psi)) for cell, psi in self.true_constraints
        ]

    def errors(self) -> list[str]:
        errs = []
        if self.width < 1 or self.height < 1:
            errs.append("grid must be at least 1x1")
        if not 0 <= self.slip < 1:
            errs.append(f"slip must lie in [0, 1), got {self.slip}")
        if self.horizon < 1:
            errs.append("horizon must be >= 1")
        if self.step_cost <= 0:
            errs.append("step_cost must be positive")
        for name, cell in (("start", self.start), ("goal", self.goal)):
            if not self.in_bounds(cell):
                errs.append(f"{name} {cell} outside the grid")
        for cell, psi in self.true_constraints:
            if not self.in_bounds(cell):
                errs.append(f"constrained cell {cell} outside the grid")
            if not 0 <= psi <= 1:
                errs.append(f"psi {psi} at {cell} outside [0, 1]")
            if cell == self.goal and psi < 1:
                errs.append("goal cell may not be constrained")
            if cell == self.start and psi == 0:
                errs.append("start cell may not be excluded outright")
        return errs

    def in_bounds(self, cell) -> bool:
        c, r = cell
        return 0 <= c < self.width and 0 <= r < self.height

    def to_json(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "slip": self.slip,
            "start": list(self.start),
            "goal": list(self.goal),
            "horizon": self.horizon,
            "step_cost": self.step_cost,
            "true_constraints": [{"cell": list(c), "psi": p} for c, p in self.true_constraints],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GridSpec":
        known = {"width", "height", "slip", "start", "goal", "horizon", "true_constraints", "step_cost"}
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown grid spec keys: {sorted(extra)}")
        for key in ("width", "height"):
            if key not in obj:
                raise ValueError(f"grid spec missing {key!r}")
        return cls(
            width=int(obj["width"]),
            height=int(obj["height"]),
            slip=float(obj.get("slip", 0.1)),
            start=obj.get("start", (0, 0)),
            goal=obj.get("goal"),
            horizon=int(obj.get("horizon", 30)),
            step_cost=float(obj.get("step_cost", 1.0)),
            true_constraints=[(tc["cell"], tc.get("psi", 0.25)) for tc in obj.get("true_constraints", [])],
        )


@dataclass(frozen=True)
class GridMapping:
    width: int
    height: int

    def state(self, cell) -> int:
        c, r = cell
        return int(r) * self.width + int(c)

    def cell(self, x: int) -> tuple[int, int]:
        return int(x) % self.width, int(x) // self.width

    def to_json(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "actions": list(ACTION_NAMES),
            "cells": [{"state": x, "cell": list(self.cell(x))} for x in range(self.width * self.height)],
        }


def _neighbour(spec: GridSpec, cell, direction: int):
    _, dc, dr = DIRECTIONS[direction]
    nxt = (cell[0] + dc, cell[1] + dr)
    return nxt if spec.in_bounds(nxt) else cell


def build_gridworld(spec: GridSpec):
    """Return ``(mdp, ground_truth, mapping)`` for the grid.

    Straight moves cost ``step_cost``, diagonal moves ``sqrt(2) * step_cost``,
    loiter is free at the goal and costs ``step_cost`` elsewhere. Terminal
    reward is zero.
    """
    errs = spec.errors()
    if errs:
        raise ValueError("invalid grid spec: " + "; ".join(errs))
    mapping = GridMapping(spec.width, spec.height)
    nX = spec.width * spec.height
    rows, cols, vals = [], [], []
    reward = np.empty((nX, NUM_ACTIONS))
    for x in range(nX):
        cell = mapping.cell(x)
        for a in range(8):
            mass = {}
            for d in range(8):
                p = 1.0 - spec.slip if d == a else spec.slip / 7.0
                if p == 0:
                    continue
                y = mapping.state(_neighbour(spec, cell, d))
                mass[y] = mass.get(y, 0.0) + p
            for y in sorted(mass):
                rows.append(x * NUM_ACTIONS + a)
                cols.append(y)
                vals.append(mass[y])
            reward[x, a] = -spec.step_cost * (math.sqrt(2.0) if a % 2 else 1.0)
        rows.append(x * NUM_ACTIONS + LOITER)
        cols.append(x)
        vals.append(1.0)
        reward[x, LOITER] = 0.0 if cell == spec.goal else -spec.step_cost
    kernel = sp.csr_matrix((vals, (rows, cols)), shape=(nX * NUM_ACTIONS, nX))
    mdp = Mdp(kernel, reward, np.zeros(nX), spec.horizon)

    psi = np.ones(nX)
    for cell, p in spec.true_constraints:
        psi[mapping.state(cell)] = p
    return mdp, ConstraintSet(psi), mapping


def default_spec() -> GridSpec:
    """9x9 corner-to-corner experiment world.

    Four constrained cells form a wall across the diagonal; the fifth sits on
    the fringe of the region the demonstrator visits. Step cost 3 makes the
    temperature-1 demonstrator actually head for the goal.
    """
    truth = [(3, 5), (4, 4), (5, 3), (5, 4), (2, 6)]
    return GridSpec(
        width=9,
        height=9,
        slip=0.1,
        start=(0, 0),
        goal=(8, 8),
        horizon=30,
        step_cost=3.0,
        true_constraints=[(c, 0.25) for c in truth],
    )
