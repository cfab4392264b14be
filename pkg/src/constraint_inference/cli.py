"""Command-line driver: synthesize, infer, validate, export-heatmap.

Exit codes: 0 success, 1 validation failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io
from .gridworld import GridSpec, build_gridworld, default_spec
from .inference import DEFAULT_STOP_GAIN, greedy_infer
from .mdp import validate_mdp
from .sampler import sample_demonstrations
from .soft_bellman import soft_backup
from .validation import run_all

log = logging.getLogger("constraint_inference")


class UsageError(Exception):
    pass


def cmd_synthesize(args) -> int:
    spec = default_spec() if args.spec is None else GridSpec.from_json(io.load_json(args.spec))
    try:
        mdp, truth, mapping = build_gridworld(spec)
    except ValueError as exc:
        raise UsageError(f"{args.spec}: {exc}") from exc
    demos = sample_demonstrations(mdp, truth, mapping.state(spec.start), args.n, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.dump_json(io.mdp_to_json(mdp), out / "mdp.json")
    io.dump_json(io.demos_to_json(demos, mdp.horizon), out / "demos.json")
    io.dump_json(truth.to_json(), out / "ground_truth.json")
    io.dump_json(mapping.to_json(), out / "mapping.json")
    io.dump_json(spec.to_json(), out / "gridspec.json")
    print(f"wrote {len(demos)} demonstrations ({demos.metadata['aborts']} aborted attempts) to {out}")
    return 0


def cmd_infer(args) -> int:
    mdp = io.mdp_from_json(io.load_json(args.mdp), where=str(args.mdp))
    bad = validate_mdp(mdp)
    if bad:
        raise UsageError(f"{args.mdp}: invalid MDP, first violation {bad[0]}")
    demos = io.demos_from_json(io.load_json(args.demos), where=str(args.demos))
    grid = None
    if args.mapping:
        m = io.load_json(args.mapping)
        grid = argparse.Namespace(width=int(m["width"]), height=int(m["height"]))
    try:
        result = greedy_infer(
            mdp,
            demos,
            max_iterations=args.max_iters,
            stop_gain=args.stop_gain,
            fixed_psi=args.fixed_psi,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    out = Path(args.out)
    (out / "trace").mkdir(parents=True, exist_ok=True)
    doc = io.result_to_json(result, grid)
    io.dump_json(doc, out / "result.json")
    for entry in doc["trace"]:
        io.write_heatmap_csv(out / "trace" / f"iter_{entry['iteration']}.csv", entry, doc.get("grid"))
    if args.dump_values:
        io.write_values_csv(out / "values.csv", soft_backup(mdp, result.final_constraints).v)
    for s in result.selected:
        print(f"iter {s.iteration}: {s.candidate.label()}  gain {s.gain:.4f} nats/demo")
    print(f"status: {result.status}")
    return 0


def cmd_validate(args) -> int:
    ok = True
    for path in args.mdp or []:
        mdp = io.mdp_from_json(io.load_json(path), where=str(path))
        bad = validate_mdp(mdp)
        print(f"[{'PASS' if not bad else 'FAIL'}] {path}: {len(bad)} violations")
        for v in bad[:20]:
            print(f"    {v.kind} at x={v.state} a={v.action}: {v.detail}")
        ok &= not bad
    if not args.skip_suite:
        for report in run_all():
            print(report.line())
            ok &= report.passed
    return 0 if ok else 1


def cmd_export_heatmap(args) -> int:
    doc = io.load_json(Path(args.result_dir) / "result.json")
    entries = {e["iteration"]: e for e in doc.get("trace", [])}
    if args.iteration not in entries:
        raise UsageError(f"iteration {args.iteration} not in trace (have {sorted(entries)})")
    path = Path(args.out) if args.out else Path(args.result_dir) / f"heatmap_iter_{args.iteration}.csv"
    io.write_heatmap_csv(path, entries[args.iteration], doc.get("grid"))
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="constraint-inference", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log each inference iteration")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synthesize", help="build a gridworld and sample demonstrations")
    s.add_argument("spec", nargs="?", help="grid spec JSON (default: built-in 9x9 experiment)")
    s.add_argument("--seed", type=int, default=0, help="dataset seed")
    s.add_argument("--n", type=int, default=100, help="number of demonstrations")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_synthesize)

    s = sub.add_parser("infer", help="greedy constraint inference from demonstrations")
    s.add_argument("--mdp", required=True, help="MDP JSON")
    s.add_argument("--demos", required=True, help="demonstration JSON")
    s.add_argument("--max-iters", type=int, default=10, help="hard cap on added constraints")
    s.add_argument("--stop-gain", type=float, default=DEFAULT_STOP_GAIN,
                   help="stop once the best gain falls below this many nats per demonstration")
    s.add_argument("--fixed-psi", type=float, default=None,
                   help="use this threshold for every state candidate instead of the data-driven level")
    s.add_argument("--mapping", default=None, help="grid mapping.json, adds cell coordinates to CSVs")
    s.add_argument("--dump-values", action="store_true", help="write values.csv for the final constraints")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_infer)

    s = sub.add_parser("validate", help="run the oracle property suite and optionally check MDP files")
    s.add_argument("--mdp", action="append", help="MDP JSON to check (repeatable)")
    s.add_argument("--skip-suite", action="store_true", help="only check the given MDP files")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("export-heatmap", help="write one iteration's candidate scores as CSV")
    s.add_argument("result_dir", help="directory written by infer")
    s.add_argument("--iteration", type=int, required=True, help="iteration index (0-based)")
    s.add_argument("--out", default=None, help="CSV path (default: <result_dir>/heatmap_iter_K.csv)")
    s.set_defaults(func=cmd_export_heatmap)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (UsageError, io.SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
