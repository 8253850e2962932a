"""Multi-seed experiments driven by a JSON config."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from ..game import compute_constants
from ..io import GameFileError, game_from_dict, load_game, read_json
from ..oracles import SOLVERS, solve
from ..solvers.runner import SolverConfig, run_solver
from .artifacts import aggregate_errors, emit_artifacts, run_label
from .efficiency import efficiency_report

log = logging.getLogger(__name__)

SEED_ENV = "PERFGAME_SEED"
METRICS = ("error", "losses", "efficiency")

EXPERIMENT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["game", "solvers", "seeds"],
    "properties": {
        "game": {"oneOf": [{"type": "string"}, {"type": "object"}]},
        "reference": {"enum": sorted(SOLVERS)},
        "solvers": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["algorithm"],
                "properties": {"name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"}},
            },
        },
        "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "metrics": {"type": "array", "items": {"enum": list(METRICS)}},
        "output_dir": {"type": "string"},
        "x0": {"type": "array", "items": {"type": "number"}},
        "svg": {"type": "boolean"},
        "efficiency_samples": {"type": "integer", "minimum": 2},
        "workers": {"type": "integer", "minimum": 1},
    },
}


@dataclass
class ExperimentConfig:
    game: object  # path or inline game dict
    solvers: list
    seeds: list
    reference: str = "perf_stable"
    metrics: tuple = ("error", "losses")
    output_dir: str | None = None
    x0: list | None = None
    svg: bool = False
    efficiency_samples: int = 100_000
    workers: int = 1
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def from_dict(cls, doc, base_dir=None):
        try:
            jsonschema.validate(doc, EXPERIMENT_SCHEMA)
        except jsonschema.ValidationError as e:
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            raise GameFileError(f"experiment config invalid at {where}: {e.message}") from None
        kw = dict(doc)
        kw["metrics"] = tuple(doc.get("metrics", ("error", "losses")))
        names = [s.get("name") or s["algorithm"] for s in doc["solvers"]]
        if len(set(names)) != len(names):
            raise GameFileError("solver entries need distinct names (add a 'name' field)")
        return cls(base_dir=Path(base_dir) if base_dir else Path.cwd(), **kw)

    @classmethod
    def load(cls, path):
        path = Path(path)
        return cls.from_dict(read_json(path, "experiment config"), base_dir=path.parent)

    def solver_configs(self):
        out = []
        for s in self.solvers:
            s = dict(s)
            name = s.pop("name", None) or s["algorithm"]
            s.pop("seed", None)
            try:
                out.append((name, SolverConfig.from_dict(s)))
            except (TypeError, ValueError) as e:
                raise GameFileError(f"solver {name!r}: {e}") from None
        return out

    def effective_seeds(self):
        env = os.environ.get(SEED_ENV)
        if env:
            try:
                return [int(env)]
            except ValueError:
                raise GameFileError(f"{SEED_ENV} must be an integer, got {env!r}") from None
        return sorted(set(int(s) for s in self.seeds))

    def load_game(self):
        if isinstance(self.game, dict):
            return game_from_dict(self.game)
        p = Path(self.game)
        if not p.is_absolute():
            p = self.base_dir / p
        if not p.exists():
            raise GameFileError(f"game file not found: {p}")
        return load_game(p)


@dataclass
class ExperimentResult:
    trajectories: list
    aggregate: dict
    report: dict
    files: list


def _summary(tr):
    return {
        "solver": run_label(tr),
        "algorithm": tr.solver,
        "seed": tr.seed,
        "iterations": tr.iterations,
        "diverged": tr.diverged,
        "final": tr.final.tolist(),
        "final_error_sq": None if tr.error_sq is None or not tr.error_sq.size else float(tr.error_sq[-1]),
        "digest": tr.digest(),
    }


def run_experiment(cfg, output_dir=None, seeds=None):
    """Run every (solver, seed) pair, then write artifacts if an output dir is set.

    ``seeds`` overrides both the config and the environment. Oracle failures
    propagate (the reference point must exist).
    """
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    game = cfg.load_game()
    seeds = sorted(set(int(s) for s in seeds)) if seeds else cfg.effective_seeds()
    consts = compute_constants(game)
    ref = solve(game, cfg.reference)
    log.info("reference %s at %s", cfg.reference, np.array2string(ref.point, precision=6))
    pairs = cfg.solver_configs()

    def one(item):
        name, sc = item
        if "losses" not in cfg.metrics:
            sc.record_losses = False
        trs = run_solver(game, sc, seeds=seeds, reference=ref.point, x0=cfg.x0, constants=consts)
        for tr in trs:
            tr.config["label"] = name
            if tr.diverged:
                log.warning("%s seed %d diverged; truncated at %d steps", name, tr.seed, tr.error_sq.size)
        return trs

    # runs share no mutable state; results are reduced in (solver, seed) order
    if cfg.workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            batches = list(ex.map(one, pairs))
    else:
        batches = [one(p) for p in pairs]
    trajectories = [t for b in batches for t in b]
    trajectories.sort(key=lambda t: (run_label(t), t.seed))

    report = {
        "reference": {"kind": cfg.reference, "point": ref.point.tolist()},
        "seeds": seeds,
        "runs": [_summary(t) for t in trajectories],
    }
    if "efficiency" in cfg.metrics:
        report["efficiency"] = efficiency_report(game, n_mc=cfg.efficiency_samples, seed=seeds[0]).to_dict()

    agg = aggregate_errors(trajectories)
    files = []
    outdir = output_dir or cfg.output_dir
    if outdir is not None:
        outdir = Path(outdir)
        if not outdir.is_absolute() and output_dir is None:
            outdir = cfg.base_dir / outdir
        files = emit_artifacts(trajectories, report, outdir, svg=cfg.svg)
    return ExperimentResult(trajectories, agg, report, files)
