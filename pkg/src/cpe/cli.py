"""Command-line harness: lower-bound reports, trial batches, instance generation.

    cpe lb instance.json [--full]
    cpe run --alg naive --delta 0.005 --trials 200 --seed 7 --out r.csv instance.json
    cpe gen disj-sets --k 8 --eps 0.25
    cpe gen or --n 32 --gap 0.2 --special 5
    cpe gen nw --n 100 --m 16
    cpe gen ball --n 64 --r 0.5 --case outside
"""

from __future__ import annotations

import argparse
import json
import sys


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cpe", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_lb = sub.add_parser("lb", help="lower-bound report for an instance file")
    p_lb.add_argument("instance")
    p_lb.add_argument("--full", action="store_true",
                      help="also print the optimal allocation and active constraints")

    p_run = sub.add_parser("run", help="run seeded trials of a sampler")
    p_run.add_argument("instance")
    p_run.add_argument("--alg", required=True)
    p_run.add_argument("--delta", type=float, required=True)
    p_run.add_argument("--trials", type=int, default=100)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--baseline-eps", type=float, default=None,
                       help="per-arm accuracy target for the uniform baseline")
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument("--no-wall", action="store_true",
                       help="zero the wall_ms column for byte-reproducible output")

    p_gen = sub.add_parser("gen", help="emit a standard instance document")
    gen_sub = p_gen.add_subparsers(dest="kind", required=True)

    g = gen_sub.add_parser("disj-sets")
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--eps", type=float, required=True)
    g.add_argument("--out", default=None)

    g = gen_sub.add_parser("or")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--gap", type=float, required=True)
    g.add_argument("--special", type=int, default=None)
    g.add_argument("--out", default=None)

    g = gen_sub.add_parser("nw")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--gap", type=float, default=0.1)
    g.add_argument("--special", type=int, default=0)
    g.add_argument("--out", default=None)

    g = gen_sub.add_parser("ball")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--r", type=float, required=True)
    g.add_argument("--case", choices=("inside", "outside"), default="inside")
    g.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "lb":
            return _cmd_lb(args)
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_gen(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _cmd_lb(args) -> int:
    from .harness import compute_lb_report

    report = compute_lb_report(args.instance)
    sys.stdout.write(report.csv_rows(full=args.full))
    return 0


def _cmd_run(args) -> int:
    from .harness import ExperimentConfig, run_experiment

    config = ExperimentConfig(
        instance_path=args.instance,
        algorithm=args.alg,
        delta=args.delta,
        trials=args.trials,
        seed=args.seed,
        out_path=args.out,
        baseline_eps=args.baseline_eps,
        workers=args.workers,
        timing=not args.no_wall,
    )
    report = run_experiment(config)
    if not args.out:
        sys.stdout.write(report.to_csv())
    q = report.pull_quantiles
    print(f"error_rate={report.error_rate:.4f} pulls_p10={q['p10']:.0f} "
          f"pulls_p50={q['p50']:.0f} pulls_p90={q['p90']:.0f}", file=sys.stderr)
    return 0


def _cmd_gen(args) -> int:
    import numpy as np

    from .formats import instance_document
    from .instances import disj_sets_instance, nw_design, or_instance

    if args.kind == "disj-sets":
        doc = instance_document(disj_sets_instance(args.k, args.eps))
    elif args.kind == "or":
        doc = instance_document(or_instance(args.n, args.gap, args.special))
    elif args.kind == "nw":
        design = nw_design(args.n, args.m, args.seed)
        if not 0 <= args.special < args.m:
            raise ValueError("--special must index a design set")
        means = np.zeros(args.n)
        means[list(design.sets[args.special])] = args.gap
        doc = {"means": means.tolist(),
               "family": {"explicit": [sorted(s) for s in design.sets]}}
    else:  # ball
        means = np.zeros(args.n)
        if args.case == "outside":
            means[0] = args.r
        doc = {"means": means.tolist(),
               "ball": {"u": [0.0] * args.n, "r": args.r}}

    text = json.dumps(doc)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
