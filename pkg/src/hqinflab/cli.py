"""Command-line interface.

    hqinflab run --config experiment.yaml --out results/ [--seed S]
                 [--reps R] [--threads K]
    hqinflab surfaces --config experiment.yaml --out surfaces/
    hqinflab selftest [--seed S] [--criteria 1,3,8]

Exit code 0 iff every verdict passes.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import acceptance
from .config import parse_config
from .experiments import analytic_surfaces, emit, run_experiment
from .fields import Grid


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=int(args.seed))
    if args.reps is not None:
        cfg = dataclasses.replace(cfg, replications=int(args.reps))
    report = run_experiment(cfg, threads=args.threads)
    written = emit(report, args.out)
    for p in report.points:
        status = "pass" if p.passed else "FAIL"
        print(f"  [{status}] {p.label} (t={p.t:g}, y={p.y:g}): "
              f"estimate {p.estimate:.6g}, target {p.target:.6g}")
    print(f"verdict: {'PASS' if report.verdict else 'FAIL'} "
          f"({len(report.points)} points, {report.runtime_s:.1f}s)")
    print("wrote: " + ", ".join(str(w) for w in written))
    return 0 if report.verdict else 1


def _cmd_surfaces(args) -> int:
    cfg = parse_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    surfaces = analytic_surfaces(cfg)
    for name, values in surfaces.items():
        path = out / f"{name}.csv"
        with open(path, "w", newline="") as fh:
            fh.write("label,t,y,value\n")
            for i, t in enumerate(cfg.grid.t):
                for j, y in enumerate(cfg.grid.y):
                    fh.write(f"{name},{t:.12g},{y:.12g},{values[i, j]:.12g}\n")
        print(f"wrote {path}")
    return 0


def _cmd_selftest(args) -> int:
    only = None
    if args.criteria:
        only = {int(c) for c in args.criteria.split(",")}
    seed = acceptance.DEFAULT_SEED if args.seed is None else int(args.seed)
    results = acceptance.run_all(seed=seed, only=only)
    all_ok = True
    for res in results:
        print(res.summary())
        for line in res.lines:
            print(line)
        all_ok &= res.passed
    print(f"\nselftest: {'PASS' if all_ok else 'FAIL'} "
          f"({sum(r.passed for r in results)}/{len(results)} criteria)")
    return 0 if all_ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hqinflab",
        description="Infinite-server queue fields: simulation vs analytic limits")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configured experiment")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config master seed")
    p_run.add_argument("--reps", type=int, default=None,
                       help="override the replication count")
    p_run.add_argument("--threads", type=int, default=1,
                       help="worker processes for replications")
    p_run.set_defaults(fn=_cmd_run)

    p_surf = sub.add_parser("surfaces", help="emit analytic surfaces only")
    p_surf.add_argument("--config", required=True)
    p_surf.add_argument("--out", required=True)
    p_surf.set_defaults(fn=_cmd_surfaces)

    p_self = sub.add_parser("selftest", help="run the acceptance criteria")
    p_self.add_argument("--seed", type=int, default=None)
    p_self.add_argument("--criteria", default=None,
                        help="comma-separated subset, e.g. 1,3,8")
    p_self.set_defaults(fn=_cmd_selftest)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
