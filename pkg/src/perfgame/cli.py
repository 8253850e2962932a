"""``perfgame`` command line.

JSON goes to stdout, logs to stderr. Exit codes: 0 ok, 1 domain failure
(assumption violated, no certified solution), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import AssumptionViolation, InnerSolveFailure, NoCertifiedSolution
from .io import GameFileError, game_to_dict, load_game, read_json
from .oracles import SOLVERS, certify_monotone, solve
from .solvers.runner import _ALIASES, ALGORITHMS, SolverConfig, run_solver

log = logging.getLogger("perfgame")

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2

# every flag each subcommand accepts; tests check the parser against this
FLAGS = {
    "oracle": ["--game", "--kind"],
    "certify": ["--game"],
    "solve": ["--game", "--alg", "--config", "--seed", "--iterations", "--step-size", "--reference", "--output"],
    "experiment": ["--config", "--output-dir", "--seed", "--svg"],
    "rideshare-gen": ["--locations", "--price", "--demand", "--seed", "--cross-ratio", "--lam", "--samples", "--output"],
}
GLOBAL_FLAGS = ["--pretty", "--verbose"]

# which equilibrium each method is meant to find
DEFAULT_REFERENCE = {"retrain": "perf_stable", "rgd": "perf_stable", "rsgm": "perf_stable",
                     "sgm": "nash", "dfo": "nash", "agm": "nash"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _floats(text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or comma-separated numbers, got {text!r}") from None
    return vals[0] if len(vals) == 1 else vals


def build_parser():
    p = _Parser(prog="perfgame", description="Multiplayer performative prediction: oracles, solvers, experiments.")
    p.add_argument("--pretty", action="store_true", help="human-readable output instead of JSON")
    p.add_argument("--verbose", "-v", action="count", default=0, help="log progress to stderr (repeat for debug)")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("oracle", help="solve for an equilibrium in closed form")
    s.add_argument("--game", required=True, help="game JSON file")
    s.add_argument("--kind", required=True, choices=sorted(SOLVERS), help="which equilibrium")

    s = sub.add_parser("certify", help="check the strong-monotonicity certificate")
    s.add_argument("--game", required=True, help="game JSON file")

    s = sub.add_parser("solve", help="run one solver")
    s.add_argument("--game", required=True, help="game JSON file")
    s.add_argument("--alg", choices=list(ALGORITHMS) + sorted(_ALIASES), help="algorithm (overrides the config)")
    s.add_argument("--config", help="solver config JSON")
    s.add_argument("--seed", type=int, help="random seed")
    s.add_argument("--iterations", type=int, help="number of iterations")
    s.add_argument("--step-size", type=float, help="constant step size")
    s.add_argument("--reference", choices=sorted(SOLVERS) + ["none"],
                   help="equilibrium to measure error against (default depends on --alg)")
    s.add_argument("--output", help="write the trajectory CSV here")

    s = sub.add_parser("experiment", help="run a multi-seed experiment config")
    s.add_argument("--config", required=True, help="experiment config JSON")
    s.add_argument("--output-dir", help="artifact directory (overrides the config)")
    s.add_argument("--seed", type=int, help="run only this seed")
    s.add_argument("--svg", action="store_true", help="also write an SVG plot")

    s = sub.add_parser("rideshare-gen", help="write a synthetic ride-share game file")
    s.add_argument("--locations", type=int, required=True, help="number of locations m")
    s.add_argument("--price", type=_floats, required=True, help="nominal price (scalar or m values)")
    s.add_argument("--demand", type=_floats, required=True, help="base demand (scalar or m values)")
    s.add_argument("--seed", type=int, default=0, help="random seed")
    s.add_argument("--cross-ratio", type=float, default=0.5, help="cross elasticity / own elasticity magnitude")
    s.add_argument("--lam", type=float, default=1.0, help="price regularization")
    s.add_argument("--samples", type=int, default=1000, help="synthetic demand draws per platform")
    s.add_argument("--output", help="write here instead of stdout")
    return p


def _emit(obj, pretty):
    if pretty:
        for k, v in obj.items():
            if isinstance(v, float):
                v = f"{v:.6g}"
            elif isinstance(v, list) and v and isinstance(v[0], float):
                v = "[" + ", ".join(f"{u:.6g}" for u in v) + "]"
            elif isinstance(v, (dict, list)):
                v = json.dumps(v)
            print(f"{k:<16} {v}")
    else:
        print(json.dumps(obj, sort_keys=True))


def cmd_oracle(args):
    game = load_game(args.game)
    return solve(game, args.kind).to_dict()


def cmd_certify(args):
    game = load_game(args.game)
    return certify_monotone(game).to_dict()


def cmd_solve(args):
    game = load_game(args.game)
    doc = read_json(args.config, "solver config") if args.config else {}
    if not isinstance(doc, dict):
        raise GameFileError("solver config must be a JSON object")
    if args.alg:
        doc["algorithm"] = args.alg
    if "algorithm" not in doc:
        raise GameFileError("no algorithm: pass --alg or put 'algorithm' in --config")
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.iterations is not None:
        doc["iterations"] = args.iterations
    if args.step_size is not None:
        doc["step_size"] = args.step_size
        doc.pop("schedule", None)
    try:
        cfg = SolverConfig.from_dict(doc)
    except (TypeError, ValueError) as e:
        raise GameFileError(f"solver config: {e}") from None
    kind = args.reference or DEFAULT_REFERENCE[cfg.algorithm]
    ref = None if kind == "none" else solve(game, kind).point
    tr = run_solver(game, cfg, reference=ref)[0]
    if args.output:
        from .harness.artifacts import write_trajectory_csv

        write_trajectory_csv(tr, args.output)
    return {
        "algorithm": tr.solver,
        "seed": tr.seed,
        "iterations": tr.iterations,
        "reference_kind": kind,
        "reference": None if ref is None else ref.tolist(),
        "final": tr.final.tolist(),
        "final_error_sq": None if tr.error_sq is None or not tr.error_sq.size else float(tr.error_sq[-1]),
        "diverged": tr.diverged,
        "digest": tr.digest(),
    }


def cmd_experiment(args):
    from .harness.experiment import ExperimentConfig, run_experiment

    cfg = ExperimentConfig.load(args.config)
    if args.svg:
        cfg.svg = True
    seeds = None if args.seed is None else [args.seed]
    res = run_experiment(cfg, output_dir=args.output_dir, seeds=seeds)
    out = {"files": [str(p) for p in res.files], "runs": len(res.trajectories)}
    finals = {}
    for label, (_, mean, std) in res.aggregate.items():
        finals[label] = {"mean": float(mean[-1]), "std": float(std[-1])}
    out["final_error_sq"] = finals
    if "efficiency" in res.report:
        eff = res.report["efficiency"]
        out["poa_ne"], out["poa_ps"] = eff["poa_ne"], eff["poa_ps"]
    return out


def cmd_rideshare(args):
    from .harness.rideshare import gen_rideshare

    try:
        inst = gen_rideshare(args.locations, args.price, args.demand, seed=args.seed,
                             cross_ratio=args.cross_ratio, lam=args.lam, n_samples=args.samples)
    except ValueError as e:
        raise GameFileError(str(e)) from None
    text = json.dumps(game_to_dict(inst.game), indent=1) + "\n"
    if args.output:
        Path(args.output).write_text(text)
        return {"output": args.output, "locations": inst.m}
    sys.stdout.write(text)
    return None


COMMANDS = {
    "oracle": cmd_oracle,
    "certify": cmd_certify,
    "solve": cmd_solve,
    "experiment": cmd_experiment,
    "rideshare-gen": cmd_rideshare,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(
        stream=sys.stderr,
        level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
        format="%(levelname)s %(name)s: %(message)s",
    )
    logging.captureWarnings(True)
    try:
        out = COMMANDS[args.command](args)
    except (GameFileError, FileNotFoundError, IsADirectoryError) as e:
        print(f"perfgame: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (AssumptionViolation, NoCertifiedSolution, InnerSolveFailure) as e:
        print(json.dumps({"error": type(e).__name__, "detail": str(e)}), file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as e:
        print(f"perfgame: error: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    if out is not None:
        _emit(out, args.pretty)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
