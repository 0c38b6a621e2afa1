import argparse


# Parameters
def get_parms(prog="casimir-friction"):
    parser = argparse.ArgumentParser(
        prog=prog, description="Casimir friction of two thermal oscillators by several routes"
    )
    parser.add_argument("--log-level", type=str, default="INFO", help="[DEBUG, INFO, WARNING]")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="evaluate every sweep point and the route equivalence")
    run.add_argument("config", type=str, help="scenario file")
    run.add_argument("--out", type=str, default=None, help="output directory (default: output.dir)")
    run.add_argument("--threads", type=int, default=1, help="sweep points evaluated in parallel")
    run.add_argument("--log-to-tensorboard", type=str, default=None)

    converge = commands.add_parser("converge", help="refinement study of one observable")
    converge.add_argument("config", type=str, help="scenario file")
    converge.add_argument(
        "--mode", type=str, required=True, choices=["halve_eta", "add_levels", "halve_tolerance"]
    )
    converge.add_argument("--steps", type=int, default=4)
    converge.add_argument("--out", type=str, default=None)

    commands.add_parser("identities", help="closed-form identity suite")
    return parser
