"""Command-line entry points: ``toy2dof``, ``run`` and ``predict``.

Exit codes: 0 success, 1 post-impact bound violated, 2 malformed input,
3 QP infeasible, 4 numerical failure or time budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, toy
from .impact import (
    EndEffectorPartition,
    ImpactConfig,
    ImpactError,
    DegenerateZmpError,
    all_predictions,
    build_distribution,
    predict_zmp_jump,
)
from .model import ModelError, RobotState
from .scenario import CSV_SCHEMA, BudgetExceeded, ScenarioError, _model, load_scenario, run_closed_loop

log = logging.getLogger("impactqp")

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 1, 2, 3, 4
LOG_ENV = "IMPACTQP_LOG_LEVEL"


def _header(kind: str, **extra) -> str:
    tail = "".join(f" {k}={v}" for k, v in extra.items())
    return f"# impactqp-csv schema={CSV_SCHEMA} kind={kind}{tail}\n"


def _fmt(x) -> str:
    return repr(float(x))


# -- toy2dof -----------------------------------------------------------------------


def cmd_toy2dof(args) -> int:
    print(toy.report())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "toy2dof.csv"
    with open(path, "w", newline="") as fh:
        fh.write(_header("toy2dof"))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mode", "status", "qdd_0", "qdd_1", "pre_qd_0", "pre_qd_1", "post_qd_0", "post_qd_1",
                    "vertices"])
        for mode in ("baseline", "impact_aware"):
            r = toy.solve_toy(mode)
            verts = ";".join(f"{v[0]!r}:{v[1]!r}" for v in r.vertices.tolist())
            w.writerow([mode, r.status, *map(_fmt, r.qdd), *map(_fmt, r.pre_impact_velocity),
                        *map(_fmt, r.post_impact_velocity), verts])
    print(f"wrote {path}")
    return EXIT_OK


# -- run ---------------------------------------------------------------------------


def _run_one(name, args):
    sc = load_scenario(name, seed=args.seed)
    return run_closed_loop(sc, mode=args.mode, tol=args.tol, out_dir=args.out)


def cmd_run(args) -> int:
    names = args.scenario
    try:
        if len(names) > 1 and args.jobs > 1:
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                runs = list(pool.map(lambda n: _run_one(n, args), names))
        else:
            runs = [_run_one(n, args) for n in names]
    except ScenarioError as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BudgetExceeded, ImpactError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    code = EXIT_OK
    for run in runs:
        print(f"[{run.scenario}/{run.mode}] status={run.status} events={len(run.events)} "
              f"fallbacks={len(run.fallbacks)} wall={run.wall_time:.2f}s")
        for rec in run.events:
            ev = rec.event
            print(f"  impact t={ev.time:.4f}s {ev.frame} on {ev.surface}: approach {rec.approach_speed:.4f} m/s, "
                  f"aware={rec.aware}, normal force jump {float(ev.normal @ ev.force_jump):.2f} N")
        for c in run.violations:
            print(f"  VIOLATION {c.quantity}[{c.index}] = {c.value:.6g} outside [{c.lower:.6g}, {c.upper:.6g}]")
        if run.status == "infeasible":
            print(f"  infeasible: {run.message}", file=sys.stderr)
            code = EXIT_INFEASIBLE
        elif run.violations and code == EXIT_OK:
            code = EXIT_VIOLATION
    return code


# -- predict -----------------------------------------------------------------------


def _load_state_file(path):
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    if "model" not in doc or "q" not in doc or "impacting" not in doc:
        raise ScenarioError("state file needs 'model', 'q' and 'impacting'")
    model = _model(doc["model"], Path(path).parent)
    q = np.asarray(doc["q"], dtype=float)
    qd = np.asarray(doc.get("qd", np.zeros(model.nv)), dtype=float)
    qdd = np.asarray(doc.get("qdd", np.zeros(model.nv)), dtype=float)
    state = RobotState(q, qd).check(model)
    if qdd.shape != (model.nv,):
        raise ScenarioError(f"qdd must have {model.nv} entries")
    dt = float(doc.get("dt", 0.005))
    duration = float(doc.get("impact_duration", 0.005))
    configs = {name: ImpactConfig(c["normal"], float(c.get("restitution", 0.02)), duration, dt)
               for name, c in doc["impacting"].items()}
    impacting = tuple(configs)
    established = tuple(doc.get("established", ()))
    free = tuple(doc.get("free", [f for f in model.frames if f not in established and f not in impacting]))
    partition = EndEffectorPartition(established, impacting, free)
    for name in partition.all:
        model.frame(name)
    return doc, model, state, qdd, partition, configs


def cmd_predict(args) -> int:
    try:
        doc, model, state, qdd, partition, configs = _load_state_file(args.state)
    except (ScenarioError, ModelError, ImpactError, KeyError, TypeError, ValueError) as exc:
        print(f"error: invalid state file: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        dist = build_distribution(model, state, partition, configs)
    except ImpactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    origin = doc.get("zmp_origin")
    preds = all_predictions(dist, origin)
    rows = []
    for name, d in preds.items():
        value = d.evaluate(qdd, state.qd)
        for i in range(d.rows):
            rows.append([name, i, *map(_fmt, d.J[i]), *map(_fmt, d.C[i]), _fmt(value[i])])
    impulse = preds["contact_force"].scaled(dist.impact_duration)
    value = impulse.evaluate(qdd, state.qd)
    for i in range(impulse.rows):
        rows.append(["impulse", i, *map(_fmt, impulse.J[i]), *map(_fmt, impulse.C[i]), _fmt(value[i])])
    if origin is not None and "wrench" in doc and model.floating:
        W = np.asarray(doc["wrench"], dtype=float)
        try:
            dz = predict_zmp_jump(W, preds["wrench"].evaluate(qdd, state.qd), doc.get("normal", [0, 0, 1]))
            blank = [""] * (2 * model.nv)
            rows.extend(["zmp_jump", i, *blank, _fmt(dz[i])] for i in range(3))
        except DegenerateZmpError as exc:
            print(f"warning: {exc}", file=sys.stderr)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{Path(args.state).stem}_predict.csv"
    with open(path, "w", newline="") as fh:
        fh.write(_header("predict", state=Path(args.state).name, rank=dist.rank))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["quantity", "index", *[f"J_{k}" for k in range(model.nv)], *[f"C_{k}" for k in range(model.nv)],
                    "value"])
        w.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows, distribution rank {dist.rank}/{dist.B.shape[0]})")
    return EXIT_OK


# -- entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="impactqp", description="Impact-aware task-space QP control and simulation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("toy2dof", help="two-joint arm striking a wall, baseline vs impact-aware")
    t.add_argument("--out", default="out", help="output directory (default: out)")
    t.set_defaults(func=cmd_toy2dof)

    r = sub.add_parser("run", help="run closed-loop scenarios")
    r.add_argument("--scenario", action="append", required=True,
                   help="built-in scenario name or JSON path (repeatable)")
    r.add_argument("--out", default="out", help="output directory (default: out)")
    r.add_argument("--seed", type=int, default=0, help="seed for scenario randomisation (default: 0)")
    r.add_argument("--mode", choices=("baseline", "aware"), help="override the scenario controller mode")
    r.add_argument("--tol", type=float, default=1e-3, help="post-impact bound tolerance (default: 1e-3)")
    r.add_argument("--jobs", type=int, default=1, help="worker threads for several scenarios")
    r.set_defaults(func=cmd_run)

    pr = sub.add_parser("predict", help="jump decompositions for one state file")
    pr.add_argument("--state", required=True, help="state JSON file")
    pr.add_argument("--out", default="out", help="output directory (default: out)")
    pr.set_defaults(func=cmd_predict)
    return p


def main(argv=None) -> int:
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if getattr(args, "seed", 0) is not None and getattr(args, "seed", 0) < 0:
        print("error: --seed must be non-negative", file=sys.stderr)
        return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
