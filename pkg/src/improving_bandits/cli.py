"""Command line entry point: ``improving-bandits {run,validate,oracle}``."""

from __future__ import annotations

import argparse
import sys

from ._validation import ConfigurationError
from .curves import InstanceError, OracleBudgetExceeded, allocation_oracle, load_instance, opt_arm, validate_instance
from .harness import ExperimentConfig, policy_guarantee, run_experiment, summarize


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="improving-bandits", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run seeded trials and write one CSV row per trial")
    run.add_argument("--policy", default="rrr", help="rrr | explore_exploit | doubling | always_pull:<arm> | uniform_baseline")
    run.add_argument("--k", type=int, help="number of arms for the hard instance family")
    run.add_argument("--T", type=int, help="horizon")
    run.add_argument("--instance", help="instance JSON file (overrides the hard family)")
    run.add_argument("--random-family", help="draw a random instance of this family per trial (or 'mixed')")
    run.add_argument("--trials", type=int, default=1)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--m", type=float, help="round-robin threshold scale (rrr only)")
    run.add_argument("--t-param", type=float, help="round-robin horizon parameter (rrr only, default T)")
    run.add_argument("--c2", type=float, default=1.0, help="promise constant used for the reported bound")
    run.add_argument("--objective", choices=("sum", "max"), default="sum")
    run.add_argument("--out", help="CSV output path")

    val = sub.add_parser("validate", help="check an instance file for diminishing returns")
    val.add_argument("--instance", required=True)
    val.add_argument("--T", type=int, help="horizon to validate over (default: the file's)")

    orc = sub.add_parser("oracle", help="best single arm and exact best allocation")
    orc.add_argument("--instance", required=True)
    orc.add_argument("--T", type=int, help="horizon (default: the file's)")
    return parser


def _cmd_run(args) -> int:
    if args.instance:
        source = "file"
    elif args.random_family:
        source = "random"
    else:
        source = "hard"
    config = ExperimentConfig(
        policy=args.policy,
        source=source,
        k=args.k,
        T=args.T,
        m=args.m,
        t_param=args.t_param,
        c2=args.c2,
        family=args.random_family or "mixed",
        instance_path=args.instance,
        trials=args.trials,
        base_seed=args.seed,
        out=args.out,
    )
    records = run_experiment(config)
    s = summarize(records)
    print(f"trials={s.n} policy={args.policy}")
    if args.objective == "sum":
        print(f"mean ALG={s.alg_mean:.6g}  95% CI=({s.alg_ci[0]:.6g}, {s.alg_ci[1]:.6g})  median={s.alg_median:.6g}")
        print(f"mean OPT={s.opt_mean:.6g}  OPT/mean ALG={s.ratio_of_means:.6g}  mean OPT/ALG={s.ratio_mean:.6g}")
        bound = policy_guarantee(args.policy, s.opt_mean, records[0].k, args.c2)
        if bound is not None:
            print(f"guaranteed expected ALG >= {bound:.6g}")
    else:
        print(f"mean best pull={s.max_pull_mean:.6g}  mean f*(T)/best pull={s.max_pull_ratio_mean:.6g}")
    if args.out:
        print(f"wrote {len(records)} rows to {args.out}")
    return 0


def _load(path: str, T: int | None):
    inst = load_instance(path, validate=False)
    horizon = T if T is not None else inst.horizon
    return inst, horizon


def _cmd_validate(args) -> int:
    inst, horizon = _load(args.instance, args.T)
    validate_instance(inst, horizon)
    print(f"ok: {inst.k} arms satisfy diminishing returns")
    return 0


def _cmd_oracle(args) -> int:
    inst, horizon = _load(args.instance, args.T)
    if horizon is None:
        raise ConfigurationError("no horizon: pass --T")
    validate_instance(inst, horizon)
    arm, opt = opt_arm(inst, horizon)
    print(f"opt arm {arm}")
    print(f"OPT {opt:.17g}")
    try:
        alloc, value = allocation_oracle(inst, horizon)
    except OracleBudgetExceeded as exc:
        print(f"allocation skipped: {exc}")
    else:
        print(f"allocation ({','.join(map(str, alloc))}) value {value:.17g}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "validate": _cmd_validate, "oracle": _cmd_oracle}[args.command]
    try:
        return handler(args)
    except InstanceError as exc:
        print(f"invalid instance: {exc}", file=sys.stderr)
        return 2
    except (ConfigurationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
