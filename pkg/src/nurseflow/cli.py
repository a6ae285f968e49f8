"""Command-line entry point.

Every command that works on a run writes into ``--run DIR``: a copy of the
instance as ``instance.json`` plus one subdirectory per command (``dp``,
``sp``, ``tp``, ``gns``, ``candidates``, ``select``). ``report`` reads those
subdirectories back. Exit codes: 0 success, 2 usage or configuration error,
3 infeasible model or a limit hit without an incumbent.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .domain.types import Instance, ModelError, Roster
from .evaluation import (
    InfeasibleRosterError,
    compute_EEV,
    coverage_gap_report,
    evaluate_tree,
    evaluate_under_path,
    flexibility_regularity,
    flexibility_to_csv,
    initial_cost,
    reward_distribution,
    roster_from_csv,
    roster_to_csv,
)
from .gns import (
    PolicyParams,
    RewardContext,
    SchedEnv,
    TrainConfig,
    TrainingDivergedError,
    TrainLog,
    expected_path,
    expected_realized_cost,
    sample_candidates,
    select_best,
    train,
)
from .instance_gen import CaseSpec, dumps_instance, generate_case, load_instance, provenance_stamp
from .milp import build_deterministic, build_two_stage_extensive, build_two_stage_tp, decode, node_blocks
from .solver import AdapterError, SolveLimits, solve
from .solver.external import ENV_VAR

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 2, 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


# -- small helpers --------------------------------------------------------------

def _stamp(args: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    return {"tool": "nurseflow", "version": __version__, "command": args.command, "args": cfg}


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n")


def _read_json(path: Path) -> dict:
    return json.loads(path.read_text())


def _load_instance(path) -> Instance:
    try:
        return load_instance(path)
    except FileNotFoundError:
        raise CliError(f"instance file not found: {path}") from None
    except ModelError as e:
        raise CliError(f"invalid instance {path}: {e}") from None


def _run_dir(args, instance_path: Optional[str]) -> tuple[Path, Instance]:
    """Create the run directory and pin its instance copy."""
    run = Path(args.run)
    run.mkdir(parents=True, exist_ok=True)
    pinned = run / "instance.json"
    if instance_path is None:
        if not pinned.exists():
            raise CliError(f"{pinned} is missing; pass an instance file")
        return run, _load_instance(pinned)
    text = Path(instance_path).read_text() if Path(instance_path).exists() else None
    if text is None:
        raise CliError(f"instance file not found: {instance_path}")
    if pinned.exists() and pinned.read_text() != text:
        raise CliError(f"{run} already holds a different instance")
    inst = _load_instance(instance_path)
    if not pinned.exists():
        pinned.write_text(text)
    return run, inst


def _limits(args) -> SolveLimits:
    return SolveLimits(time_limit=args.time_limit, node_limit=args.node_limit, gap_target=args.gap)


def _backend(args) -> Optional[str]:
    return None if args.backend == "bnb" else args.backend


def _solve(system, args):
    try:
        return solve(system, _limits(args), backend=_backend(args))
    except AdapterError as e:
        raise CliError(f"external engine: {e} (set {ENV_VAR})") from None


def _solution_doc(sol) -> dict:
    return {"status": sol.status, "objective": sol.objective, "best_bound": sol.best_bound,
            "gap": sol.gap, "nodes": sol.nodes, "seconds": round(sol.seconds, 3), "backend": sol.backend}


def _dp_roster(inst: Instance, args) -> Roster:
    system = build_deterministic(inst)
    sol = _solve(system, args)
    if not sol.has_solution:
        raise CliError(f"deterministic model: {sol.status}", EXIT_INFEASIBLE)
    return decode(system, sol.values)["rosters"][()]


def _parse_path(text: str, inst: Instance):
    """``expected``, ``leaf:<node id>`` or comma-separated realization indices."""
    if text == "expected":
        return expected_path(inst)
    tree = inst.tree
    if tree is None:
        raise CliError("instance has no scenario tree; only --path expected is available")
    try:
        if text.startswith("leaf:"):
            node = tree.nodes[int(text[5:])]
            if node.stage != tree.num_stages:
                raise CliError(f"node {node.id} is not a leaf")
            return node
        return tree.leaf_of([int(v) for v in text.split(",")])
    except (ValueError, IndexError, KeyError):
        raise CliError(f"cannot read realized path {text!r}") from None


# -- commands -----------------------------------------------------------------

def cmd_generate(args) -> int:
    spec = CaseSpec(args.nurses, args.eta, args.stages, args.seed, days_per_stage=args.days_per_stage,
                    start_weekday=args.start_weekday, requests_per_nurse=args.requests,
                    catalog=args.catalog)
    try:
        inst = generate_case(spec)
    except ModelError as e:
        raise CliError(str(e)) from None
    text = dumps_instance(inst, provenance_stamp(spec))
    out = Path(args.out) if args.out else Path(f"{inst.name}.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    print(out)
    return EXIT_OK


def cmd_solve(args) -> int:
    run, inst = _run_dir(args, args.instance)
    builders = {"dp": build_deterministic, "sp": build_two_stage_extensive, "tp": build_two_stage_tp}
    try:
        system = builders[args.mode](inst)
    except ModelError as e:
        raise CliError(str(e)) from None
    sol = _solve(system, args)
    out = run / args.mode
    out.mkdir(exist_ok=True)
    doc = {"mode": args.mode, **_solution_doc(sol), "provenance": _stamp(args)}
    log = [f"{k}: {doc[k]}" for k in ("mode", "status", "objective", "best_bound", "gap",
                                       "nodes", "seconds", "backend")]
    if not sol.has_solution:
        _write_json(out / "solution.json", doc)
        (out / "solver.log").write_text("\n".join(log) + "\n")
        print(f"{args.mode}: {sol.status} with no incumbent", file=sys.stderr)
        return EXIT_INFEASIBLE
    dec = decode(system, sol.values)
    x0 = dec["rosters"][()]
    (out / "roster.csv").write_text(roster_to_csv(x0, inst))
    costs = {"initial": initial_cost(inst, x0).as_dict()}
    if args.mode == "sp":
        blocks = node_blocks(system)
        recourse = {nid: dec["rosters"][b.tag] for nid, b in blocks.items()}
        for nid, b in blocks.items():
            (out / f"node-{nid}.csv").write_text(roster_to_csv(recourse[nid], inst, b.days[0]))
        costs["expected"] = evaluate_tree(inst, x0, recourse, aggregates=dec["aggregates"]).as_dict()
        eev, ev = compute_EEV(inst, limits=_limits(args), backend=_backend(args))
        _write_json(out / "eev.json", {"EEV": eev.__dict__, "EV": ev.__dict__})
        log.append(f"EEV: {eev.objective} ({eev.status})")
    _write_json(out / "costs.json", costs)
    _write_json(out / "solution.json", doc)
    (out / "solver.log").write_text("\n".join(log) + "\n")
    print(f"{args.mode}: {sol.status} objective {sol.objective!r} gap {sol.gap:.3g}")
    return EXIT_OK


def _context(inst: Instance, initial: Roster, rho: float, offset: str, M: Optional[float] = None):
    try:
        return RewardContext(inst, initial, expected_path(inst), rho=rho, M=M, offset=offset)
    except InfeasibleRosterError as e:
        raise CliError(f"initial roster is infeasible: {e}") from None


def cmd_gns(args) -> int:
    run, inst = _run_dir(args, args.instance)
    if args.initial:
        initial = roster_from_csv(Path(args.initial).read_text(), inst)
    elif (run / "dp" / "roster.csv").exists():
        initial = roster_from_csv((run / "dp" / "roster.csv").read_text(), inst)
    else:
        initial = _dp_roster(inst, args)
    ctx = _context(inst, initial, args.rho, args.offset)
    env = SchedEnv(ctx, T=args.T)
    cfg = TrainConfig(episodes=args.episodes, update_freq=args.update_freq, lr=args.lr,
                      batch=args.batch, T=args.T, seed=args.seed, hidden=args.hidden)
    try:
        params, log = train(env, cfg)
    except ValueError as e:
        raise CliError(str(e)) from None
    except TrainingDivergedError as e:
        raise CliError(f"training diverged: {e}") from None
    out = run / "gns"
    out.mkdir(exist_ok=True)
    params.save(out / "policy.txt")
    (out / "train_log.csv").write_text(log.to_csv())
    (out / "initial.csv").write_text(roster_to_csv(initial, inst))
    _write_json(out / "run.json", {"rho": ctx.rho, "offset": args.offset, "M": ctx.M, "T": env.T,
                                   "hidden": args.hidden, "provenance": _stamp(args)})
    print(f"trained {args.episodes} episodes, T={env.T}, M={ctx.M!r}")
    return EXIT_OK


def _gns_env(run: Path, inst: Instance) -> tuple[SchedEnv, PolicyParams, Roster]:
    gdir = run / "gns"
    missing = [p for p in ("policy.txt", "run.json", "initial.csv") if not (gdir / p).exists()]
    if missing:
        raise CliError("missing policy files in " + str(gdir) + ": " + ", ".join(missing))
    meta = _read_json(gdir / "run.json")
    initial = roster_from_csv((gdir / "initial.csv").read_text(), inst)
    try:
        params = PolicyParams.load(gdir / "policy.txt")
    except (ValueError, IndexError) as e:
        raise CliError(f"unreadable policy file: {e}") from None
    ctx = _context(inst, initial, meta["rho"], meta["offset"], meta["M"])
    return SchedEnv(ctx, T=meta["T"]), params, initial


def cmd_sample(args) -> int:
    run, inst = _run_dir(args, None)
    env, params, _ = _gns_env(run, inst)
    found = sample_candidates(env, params, args.k, args.n_samples, seed=args.seed, greedy=args.greedy)
    out = run / "candidates"
    out.mkdir(exist_ok=True)
    for old in out.glob("candidate-*.csv"):
        old.unlink()
    rows = []
    for c in found:
        (out / f"candidate-{c.rank}.csv").write_text(roster_to_csv(c.roster, inst))
        rows.append({"rank": c.rank, "reward": c.reward, "cost": env.cost(c.state)})
    _write_json(out / "candidates.json", {"candidates": rows, "warning": found.warning,
                                          "messages": found.messages, "distinct": found.distinct,
                                          "provenance": _stamp(args)})
    for m in found.messages:
        print(f"warning: {m}", file=sys.stderr)
    print(f"{len(found)} candidates written to {out}")
    return EXIT_OK


def _candidates(run: Path, inst: Instance) -> list[Roster]:
    cdir = run / "candidates"
    files = sorted(cdir.glob("candidate-*.csv"), key=lambda p: int(p.stem.split("-")[1]))
    if not files:
        raise CliError(f"no candidate rosters in {cdir}")
    return [roster_from_csv(p.read_text(), inst) for p in files]


def cmd_select(args) -> int:
    run, inst = _run_dir(args, None)
    _, _, initial = _gns_env(run, inst)
    cands = _candidates(run, inst)
    path = _parse_path(args.path, inst)
    try:
        pick = select_best(inst, initial, cands, path)
    except ModelError as e:
        raise CliError(str(e), EXIT_INFEASIBLE) from None
    out = run / "select"
    out.mkdir(exist_ok=True)
    (out / "selected.csv").write_text(roster_to_csv(pick.roster, inst))
    _write_json(out / "realized_cost.json", {"candidate": pick.index, "path": args.path,
                                              "cost": pick.cost.as_dict(), "all_costs": list(pick.costs),
                                              "provenance": _stamp(args)})
    print(f"candidate {pick.index} realized cost {pick.cost.total!r}")
    return EXIT_OK


REPORT_INPUTS = ("instance.json", "dp/solution.json", "sp/solution.json", "sp/eev.json",
                 "sp/roster.csv", "tp/solution.json", "gns/train_log.csv")
VSS_COLUMNS = ["run", "instance", "PP", "EEV", "TP", "DP", "VSS_eev", "VSS_tp", "GNS"]


def _report_row(run: Path) -> tuple[dict, Instance, Roster, TrainLog]:
    inst = _load_instance(run / "instance.json")
    obj = {m: float(_read_json(run / m / "solution.json")["objective"]) for m in ("dp", "sp", "tp")}
    eev = float(_read_json(run / "sp" / "eev.json")["EEV"]["objective"])
    gns = math.nan
    if (run / "candidates").is_dir() and (run / "gns" / "initial.csv").exists():
        initial = roster_from_csv((run / "gns" / "initial.csv").read_text(), inst)
        if inst.tree is not None:
            gns = expected_realized_cost(inst, initial, _candidates(run, inst))
    row = {"run": run.name, "instance": inst.name, "PP": obj["sp"], "EEV": eev, "TP": obj["tp"],
           "DP": obj["dp"], "VSS_eev": eev - obj["sp"], "VSS_tp": obj["tp"] - obj["sp"], "GNS": gns}
    roster = roster_from_csv((run / "sp" / "roster.csv").read_text(), inst)
    log = TrainLog.from_csv((run / "gns" / "train_log.csv").read_text())
    return row, inst, roster, log


def cmd_report(args) -> int:
    runs = [Path(r) for r in args.runs]
    missing = [str(r / p) for r in runs for p in REPORT_INPUTS if not (r / p).exists()]
    if missing:
        raise CliError("missing inputs:\n  " + "\n  ".join(missing))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows, cov_lines, crf_lines, rosters, insts = [], [], [], [], []
    for run in runs:
        row, inst, roster, log = _report_row(run)
        rows.append(row)
        rosters.append(roster)
        insts.append(inst)
        gap = coverage_gap_report(roster, inst.demand, inst)
        body = list(csv.reader(io.StringIO(gap.to_csv())))
        if not cov_lines:
            cov_lines.append(["run", *body[0]])
        cov_lines += [[run.name, *r] for r in body[1:]]
        dist = reward_distribution(log.reward)
        if not crf_lines:
            crf_lines.append(["run", "threshold", "crf"])
        crf_lines += [[run.name, repr(float(t)), repr(float(c))] for t, c in zip(dist.thresholds, dist.crf)]
    if len(rows) > 1:
        mean = {"run": "mean", "instance": ""}
        for k in VSS_COLUMNS[2:]:
            mean[k] = float(np.mean([r[k] for r in rows]))
        rows.append(mean)

    def emit(lines) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(lines)
        return buf.getvalue()

    vss = [VSS_COLUMNS] + [[r["run"], r["instance"], *(repr(float(r[k])) for k in VSS_COLUMNS[2:])]
                           for r in rows]
    (out / "vss.csv").write_text(emit(vss))
    (out / "coverage.csv").write_text(emit(cov_lines))
    (out / "flexibility.csv").write_text(flexibility_to_csv(flexibility_regularity(rosters, insts)))
    (out / "crf.csv").write_text(emit(crf_lines))
    print(f"reports written to {out}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------------

def _nonnegative(kind):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if v < 0:
            raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
        return v
    return parse


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--time-limit", type=_nonnegative(float), default=math.inf, help="seconds")
    p.add_argument("--node-limit", type=_nonnegative(int), default=10**9)
    p.add_argument("--gap", type=_nonnegative(float), default=0.0, help="relative gap target")
    p.add_argument("--backend", choices=("bnb", "milp", "external"), default="bnb",
                   help=f"bnb = built-in solver, milp = HiGHS, external = engine from ${ENV_VAR}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nurseflow", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"nurseflow {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded instance file")
    g.add_argument("--nurses", type=int, required=True)
    g.add_argument("--eta", type=_nonnegative(float), required=True, help="demand scale")
    g.add_argument("--stages", type=int, default=2)
    g.add_argument("--seed", type=_nonnegative(int), default=0)
    g.add_argument("--days-per-stage", type=int, default=7)
    g.add_argument("--start-weekday", type=int, default=0)
    g.add_argument("--requests", type=_nonnegative(int), default=2, help="requests per nurse")
    g.add_argument("--catalog", choices=("default", "toy"), default="default")
    g.add_argument("-o", "--out", help="output path (default <name>.json)")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve the deterministic, stochastic or two-phase model")
    s.add_argument("instance")
    s.add_argument("--mode", choices=("dp", "sp", "tp"), required=True)
    s.add_argument("--run", required=True, help="run directory")
    _solver_flags(s)
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("gns", help="train the roster sampler")
    t.add_argument("instance")
    t.add_argument("--run", required=True)
    t.add_argument("--episodes", type=_nonnegative(int), default=1000)
    t.add_argument("--update-freq", type=int, default=4)
    t.add_argument("--batch", type=int, default=None)
    t.add_argument("--lr", type=float, default=0.5)
    t.add_argument("--T", type=int, default=None, help="actions per trajectory")
    t.add_argument("--hidden", type=int, default=32)
    t.add_argument("--seed", type=_nonnegative(int), default=0)
    t.add_argument("--rho", type=float, default=50.0, help="reward temperature")
    t.add_argument("--offset", choices=("empty", "bound"), default="empty", help="reward offset rule")
    t.add_argument("--initial", help="initial roster CSV (default: the run's dp roster, else solve dp)")
    _solver_flags(t)
    t.set_defaults(func=cmd_gns)

    sm = sub.add_parser("sample", help="draw the top-k candidate rosters from a trained sampler")
    sm.add_argument("--run", required=True)
    sm.add_argument("--k", type=int, default=5)
    sm.add_argument("--n-samples", type=int, default=200)
    sm.add_argument("--seed", type=_nonnegative(int), default=0)
    sm.add_argument("--greedy", action="store_true", help="follow the most probable action")
    sm.set_defaults(func=cmd_sample)

    se = sub.add_parser("select", help="pick the cheapest candidate under a realized demand path")
    se.add_argument("--run", required=True)
    se.add_argument("--path", default="expected",
                    help="'expected', 'leaf:<node id>' or realization indices like 0,1")
    se.set_defaults(func=cmd_select)

    r = sub.add_parser("report", help="VSS, coverage, flexibility and reward-distribution reports")
    r.add_argument("runs", nargs="+", help="run directories")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"nurseflow {args.command}: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
