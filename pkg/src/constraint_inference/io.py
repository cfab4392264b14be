"""JSON and CSV readers/writers for MDPs, demonstrations and inference results."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .constraints import ConstraintSet
from .mdp import DemonstrationSet, Mdp, Trajectory


class SchemaError(ValueError):
    """Malformed input file; the message names the file and location."""


def load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def dump_json(obj, path):
    # sorted keys + repr floats keep output byte-stable across runs
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n")


def _require(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"{where}: missing key {key!r}")
    return obj[key]


def mdp_to_json(mdp: Mdp) -> dict:
    coo = mdp.kernel.tocoo()
    order = np.lexsort((coo.col, coo.row))
    nA = mdp.num_actions
    return {
        "num_states": mdp.num_states,
        "num_actions": nA,
        "horizon": mdp.horizon,
        "transitions": [
            [int(coo.row[i] // nA), int(coo.row[i] % nA), int(coo.col[i]), float(coo.data[i])]
            for i in order
        ],
        "running_reward": [
            [x, a, float(mdp.running_reward[x, a])] for x in range(mdp.num_states) for a in range(nA)
        ],
        "terminal_reward": [float(v) for v in mdp.terminal_reward],
    }


def mdp_from_json(obj: dict, where="mdp") -> Mdp:
    nX = int(_require(obj, "num_states", where))
    nA = int(_require(obj, "num_actions", where))
    T = int(_require(obj, "horizon", where))
    rows, cols, vals = [], [], []
    for i, entry in enumerate(_require(obj, "transitions", where)):
        try:
            x, a, y, p = entry
            x, a, y, p = int(x), int(a), int(y), float(p)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{where}: transitions[{i}] must be [x, a, x', p]") from exc
        if not (0 <= x < nX and 0 <= a < nA and 0 <= y < nX):
            raise SchemaError(f"{where}: transitions[{i}] index out of range: {entry}")
        rows.append(x * nA + a)
        cols.append(y)
        vals.append(p)
    reward = np.zeros((nX, nA))
    for i, entry in enumerate(obj.get("running_reward", [])):
        try:
            x, a, v = entry
            reward[int(x), int(a)] = float(v)
        except (TypeError, ValueError, IndexError) as exc:
            raise SchemaError(f"{where}: running_reward[{i}] must be [x, a, value] in range") from exc
    terminal = obj.get("terminal_reward", [0.0] * nX)
    if len(terminal) != nX:
        raise SchemaError(f"{where}: terminal_reward has {len(terminal)} entries, expected {nX}")
    kernel = sp.csr_matrix((vals, (rows, cols)), shape=(nX * nA, nX))
    try:
        return Mdp(kernel, reward, terminal, T)
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def demos_to_json(demos: DemonstrationSet, horizon: int) -> dict:
    return {
        "horizon": horizon,
        "trajectories": [{"states": list(tr.states), "actions": list(tr.actions)} for tr in demos],
        "metadata": demos.metadata,
    }


def demos_from_json(obj: dict, where="demos") -> DemonstrationSet:
    trajs = []
    for i, entry in enumerate(_require(obj, "trajectories", where)):
        try:
            trajs.append(Trajectory(entry["states"], entry["actions"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{where}: trajectories[{i}]: {exc}") from exc
    horizon = obj.get("horizon")
    for i, tr in enumerate(trajs):
        if horizon is not None and tr.horizon != horizon:
            raise SchemaError(f"{where}: trajectories[{i}] has {tr.horizon} actions, horizon is {horizon}")
    return DemonstrationSet(trajs, dict(obj.get("metadata", {})))


def constraints_from_json(obj: dict, where="constraints") -> ConstraintSet:
    try:
        return ConstraintSet(_require(obj, "psi", where), obj.get("forbidden_actions", ()))
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def _finite_or_none(v):
    return float(v) if math.isfinite(v) else None


def candidate_json(cand) -> dict:
    return {"kind": cand.kind, "target": cand.target, "psi": cand.psi}


def result_to_json(result, mapping=None) -> dict:
    out = {
        "status": result.status,
        "selected": [
            dict(candidate_json(s.candidate), iteration=s.iteration, score=s.score, gain=s.gain)
            for s in result.selected
        ],
        "final_constraints": result.final_constraints.to_json(),
        "trace": [
            {
                "iteration": e.iteration,
                "num_demos": e.num_demos,
                "candidates": [
                    dict(candidate_json(c), score=_finite_or_none(s), admissible=bool(ok))
                    for c, s, ok in zip(e.candidates, e.scores, e.admissible)
                ],
            }
            for e in result.trace
        ],
    }
    if mapping is not None:
        out["grid"] = {"width": mapping.width, "height": mapping.height}
    return out


HEATMAP_COLUMNS = ["candidate_kind", "candidate_target", "col", "row", "psi", "log_F_at_start", "score", "admissible"]


def heatmap_rows(iteration_entry: dict, grid: dict | None):
    """CSV rows for one iteration; ``log_F_at_start`` is the per-demo mean log ratio."""
    n = max(iteration_entry.get("num_demos", 1), 1)
    for c in iteration_entry["candidates"]:
        col = row = ""
        if grid is not None and c["kind"] == "state":
            col, row = c["target"] % grid["width"], c["target"] // grid["width"]
        score = c["score"]
        log_f = "-inf" if score is None else repr(score / n)
        yield [
            c["kind"],
            c["target"],
            col,
            row,
            "" if c["psi"] is None else repr(c["psi"]),
            log_f,
            "-inf" if score is None else repr(score),
            int(c["admissible"]),
        ]


def write_heatmap_csv(path, iteration_entry: dict, grid: dict | None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HEATMAP_COLUMNS)
        w.writerows(heatmap_rows(iteration_entry, grid))


def write_values_csv(path, v: np.ndarray):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "v"])
        for t in range(v.shape[0]):
            for x in range(v.shape[1]):
                w.writerow([t, x, repr(float(v[t, x]))])
