import os
import sys

from torch.utils.tensorboard import SummaryWriter

import scenario
from config import get_parms
from shared.errors import CasimirError, ConfigError
from shared.identities import all_passed, run_identities
from shared.log import setup_logging
from shared.runner import convergence_report, run_scenario, write_csv


def run(args):
    config = scenario.load_config(args.config)
    out_dir = args.out or config.output_dir
    setup_logging(out_dir, level=args.log_level)
    writer = None
    if args.log_to_tensorboard is not None:
        writer = SummaryWriter(os.path.join("tensorboards", args.log_to_tensorboard))
    try:
        report = run_scenario(config, out_dir, threads=args.threads, writer=writer, progress=True)
    finally:
        if writer is not None:
            writer.close()
    for line in report.equivalence:
        print(line)
    print(f"Results: {os.path.join(out_dir, 'results.csv')} ({len(report.results)} rows)")
    return report.exit_code


def converge(args):
    config = scenario.load_config(args.config)
    out_dir = args.out or config.output_dir
    setup_logging(out_dir, level=args.log_level)
    table = convergence_report(config, args.mode, args.steps)
    write_csv(table, os.path.join(out_dir, "convergence.csv"))
    print(table.to_string(index=False))
    return 0 if (table["status"] == "PASS").all() else 2


def identities(args):
    checks = run_identities()
    for check in checks:
        print(check)
    return 0 if all_passed(checks) else 2


def main(argv=None):
    args = get_parms().parse_args(argv)
    try:
        return {"run": run, "converge": converge, "identities": identities}[args.command](args)
    except ConfigError as exc:
        for line, key, message in exc.violations:
            print(f"{args.config}:{line or '-'}: {key}: {message}", file=sys.stderr)
        return 1
    except (CasimirError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
