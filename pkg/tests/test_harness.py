import hashlib
import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from perfgame.game import compute_constants
from perfgame.harness import (
    FULL,
    MYOPIC,
    PARTIAL,
    ExperimentConfig,
    aggregate_errors,
    efficiency_report,
    emit_artifacts,
    gen_rideshare,
    myopic_gradient,
    myopic_study,
    read_aggregate_csv,
    read_trajectory_csv,
    run_experiment,
)
from perfgame.instances import revenue_game, scalar_duopoly
from perfgame.io import GameFileError, game_to_dict
from perfgame.oracles import solve_nash, solve_perf_stable
from perfgame.solvers.runner import SolverConfig, run_solver
from reference import ref_social, scalar_duopoly_symbolic

GOLDEN = Path(__file__).parent / "golden" / "rideshare_efficiency.json"

# ------------------------------------------------------------- efficiency


def test_scalar_efficiency_matches_symbolic():
    sym = scalar_duopoly_symbolic()
    rep = efficiency_report(scalar_duopoly(), n_mc=2000)
    for kind in ("so", "ne", "ps"):
        assert getattr(rep, f"S_{kind}") == pytest.approx(float(sym[f"S_{kind}"]), abs=1e-12)
    assert rep.poa_ne == pytest.approx(float(Fraction(48, 49)), abs=1e-12)
    assert rep.poa_ps == pytest.approx(0.96, abs=1e-12)


def test_no_performative_effects_means_no_inefficiency():
    g = revenue_game([[[0.0]], [[0.0]]], [[[0.0]], [[0.0]]], 2.0, [[1.0], [1.5]], cov=[[[0.2]], [[0.2]]])
    rep = efficiency_report(g, n_mc=5000)
    assert rep.poa_ne == pytest.approx(1.0, abs=1e-12) and rep.poa_ps == pytest.approx(1.0, abs=1e-12)


def test_social_costs_against_reference_route():
    inst = gen_rideshare(3, [10, 15, 12], [80, 40, 60], seed=5, n_samples=50)
    rep = efficiency_report(inst.game, n_mc=1000)
    for kind in ("so", "ne", "ps"):
        x = np.array(rep.points[kind])
        assert getattr(rep, f"S_{kind}") == pytest.approx(ref_social(inst.game, x), rel=1e-9)


@pytest.mark.parametrize("seed", range(6))
def test_social_optimum_is_most_efficient(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 6))
    inst = gen_rideshare(m, rng.uniform(5, 30, m), rng.uniform(20, 200, m), seed=seed,
                         cross_ratio=rng.uniform(0, 0.8), n_samples=100)
    rep = efficiency_report(inst.game, n_mc=20_000, seed=seed)
    assert abs(rep.S_ne) <= abs(rep.S_so) + 1e-9 and abs(rep.S_ps) <= abs(rep.S_so) + 1e-9
    assert 0 < rep.poa_ne <= 1 + 1e-12 and 0 < rep.poa_ps <= 1 + 1e-12
    assert all(rep.within_se(3.0).values())


def test_report_is_byte_stable_and_matches_golden():
    inst = gen_rideshare(4, 10, [120, 90, 60, 150], seed=2024)
    a = efficiency_report(inst.game, seed=0).to_json()
    b = efficiency_report(gen_rideshare(4, 10, [120, 90, 60, 150], seed=2024).game, seed=0).to_json()
    assert a == b
    assert a == GOLDEN.read_text()


def test_player_rows_add_up():
    inst = gen_rideshare(2, 10, 100, seed=0, n_samples=100)
    rep = efficiency_report(inst.game, n_mc=1000)
    for kind in ("so", "ne", "ps"):
        rows = rep.players[kind]
        assert sum(r["loss"] for r in rows) == pytest.approx(getattr(rep, f"S_{kind}"), rel=1e-9)
        for r in rows:
            assert r["revenue"] == pytest.approx(np.dot(r["price"], r["demand"]), rel=1e-9)


# -------------------------------------------------------------- ride-share


def test_rideshare_elasticities():
    inst = gen_rideshare(1, 10, 100)
    assert inst.A_own[0][0, 0] == -15.0
    assert inst.A_other[0][0, 0] == 7.5
    c = compute_constants(inst.game)
    assert inst.game.dims.n == 2 and np.isfinite(c.alpha)


@pytest.mark.parametrize("m", [1, 3, 8])
def test_rideshare_signs(m):
    inst = gen_rideshare(m, np.linspace(5, 20, m), np.linspace(10, 300, m), seed=m)
    for Ao, Ax in zip(inst.A_own, inst.A_other):
        assert np.all(np.diag(Ao) < 0) and np.all(np.diag(Ax) >= 0)
        assert np.count_nonzero(Ao - np.diag(np.diag(Ao))) == 0
    means = [b.mean for b in inst.game.bases]
    assert np.allclose(means, inst.demand, rtol=0.1)


def test_rideshare_is_seeded():
    a = game_to_dict(gen_rideshare(2, 10, 50, seed=3, n_samples=30).game)
    b = game_to_dict(gen_rideshare(2, 10, 50, seed=3, n_samples=30).game)
    c = game_to_dict(gen_rideshare(2, 10, 50, seed=4, n_samples=30).game)
    assert a == b and a != c


@pytest.mark.parametrize("kw", [dict(m=0, p=10, q=10), dict(m=2, p=-1, q=10), dict(m=2, p=10, q=0)])
def test_rideshare_rejects_bad_inputs(kw):
    with pytest.raises(ValueError):
        gen_rideshare(kw["m"], kw["p"], kw["q"])


# ------------------------------------------------------------------ myopic


def test_myopic_gradient_examples():
    assert myopic_gradient(MYOPIC, [1.0], [0.0], [0.0], [[-2.0]], [[0.0]], 1.0)[0] == 1.0
    assert myopic_gradient(PARTIAL, [1.0], [0.0], [0.0], [[-2.0]], [[0.0]], 1.0)[0] == 3.0
    # Full adds -1/2 A_other x_other
    assert myopic_gradient(FULL, [1.0], [2.0], [0.0], [[-2.0]], [[0.5]], 1.0)[0] == 2.5
    with pytest.raises(ValueError):
        myopic_gradient("Lazy", [1.0], [0.0], [0.0], [[-2.0]], [[0.0]], 1.0)


def test_all_full_has_zero_deltas():
    inst = gen_rideshare(2, 10, 20, seed=0, n_samples=50)
    st = myopic_study(inst, (FULL, FULL), eta=0.005, iterations=300, seeds=(0, 1))
    for v in st.delta_price + st.delta_demand + st.delta_revenue:
        assert np.all(np.asarray(v) == 0)
    assert st.delta_total_revenue == [0.0, 0.0]


def test_myopic_study_changes_outcome():
    inst = gen_rideshare(2, 10, 20, seed=0, n_samples=50)
    st = myopic_study(inst, (MYOPIC, FULL), eta=0.005, iterations=500, seeds=(0,))
    assert np.any(np.asarray(st.delta_price[0]) != 0)
    json.dumps(st.to_dict())


def test_myopic_rejects_other_losses():
    with pytest.raises(ValueError, match="revenue"):
        myopic_study(scalar_duopoly(), (FULL, FULL), iterations=5)


# -------------------------------------------------------------- artifacts


def _runs(seeds=(0, 1, 2)):
    g = scalar_duopoly(noise_std=0.3)
    ref = solve_perf_stable(g).point
    out = []
    for name, cfg in (("a", SolverConfig("rsgm", step_size=0.05, iterations=50)),
                      ("b", SolverConfig("rgd", iterations=50))):
        for tr in run_solver(g, cfg, seeds=seeds, reference=ref):
            tr.config["label"] = name
            out.append(tr)
    return out


def test_artifact_file_count(tmp_path):
    files = emit_artifacts(_runs(), {"x": 1}, tmp_path)
    names = sorted(p.name for p in files)
    assert len([n for n in names if "_seed" in n]) == 6
    assert "aggregate.csv" in names and "report.json" in names and len(names) == 8


def test_empty_aggregate_is_header_only(tmp_path):
    emit_artifacts([], {}, tmp_path)
    assert (tmp_path / "aggregate.csv").read_text().strip() == "solver,iter,mean,std"


def test_csv_round_trip_is_exact(tmp_path):
    runs = _runs()
    emit_artifacts(runs, {}, tmp_path)
    agg = aggregate_errors(runs)
    back = read_aggregate_csv(tmp_path / "aggregate.csv")
    for label, (it, mean, std) in agg.items():
        assert np.array_equal(back[label][0], it)
        assert np.array_equal(back[label][1], mean) and np.array_equal(back[label][2], std)
    # recompute mean from the per-run files
    cols = []
    for s in range(3):
        header, data = read_trajectory_csv(tmp_path / f"a_seed{s}.csv")
        assert header == ["iter", "error_sq", "loss_1", "loss_2"]
        cols.append(data[:, 1])
    assert np.array_equal(np.mean(cols, axis=0), agg["a"][1])


def test_aggregate_invariant_to_order():
    runs = _runs()
    a = aggregate_errors(runs)
    b = aggregate_errors(runs[::-1])
    for k in a:
        assert all(np.array_equal(u, v) for u, v in zip(a[k], b[k]))


def test_singleton_statistics():
    runs = [t for t in _runs(seeds=(4,)) if t.config["label"] == "a"]
    _, mean, std = aggregate_errors(runs)["a"]
    assert np.array_equal(mean, runs[0].error_sq) and np.all(std == 0)


def test_unwritable_outdir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        emit_artifacts(_runs(seeds=(0,)), {}, blocker / "sub")


# ------------------------------------------------------------- experiment


def _config(tmp_path, **kw):
    game_path = tmp_path / "game.json"
    game_path.write_text(json.dumps(game_to_dict(scalar_duopoly(noise_std=0.5))))
    doc = {
        "game": "game.json",
        "reference": "perf_stable",
        "solvers": [
            {"name": "rsgm", "algorithm": "rsgm", "step_size": 0.01, "iterations": 10_000, "record_losses": False},
            {"name": "sgm", "algorithm": "sgm", "step_size": 0.01, "iterations": 2000},
        ],
        "seeds": list(range(20)),
        "metrics": ["error", "losses"],
    }
    doc.update(kw)
    p = tmp_path / "exp.json"
    p.write_text(json.dumps(doc))
    return p


def _digest(files):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in files}


def test_experiment_rsgm_example(tmp_path):
    res = run_experiment(ExperimentConfig.load(_config(tmp_path)))
    _, mean, _ = res.aggregate["rsgm"]
    assert mean[-1] <= 1e-3
    assert len(res.trajectories) == 40


def test_experiment_is_deterministic(tmp_path):
    cfg = _config(tmp_path, seeds=[0, 1], workers=2, metrics=["error", "losses", "efficiency"],
                  efficiency_samples=2000)
    a = run_experiment(ExperimentConfig.load(cfg), output_dir=tmp_path / "a").files
    b = run_experiment(ExperimentConfig.load(cfg), output_dir=tmp_path / "b").files
    assert _digest(a) == _digest(b) and len(a) == 2 * 2 + 2


def test_seed_environment_override(tmp_path, monkeypatch):
    cfg = ExperimentConfig.load(_config(tmp_path))
    monkeypatch.setenv("PERFGAME_SEED", "7")
    assert cfg.effective_seeds() == [7]
    res = run_experiment(cfg)
    assert {t.seed for t in res.trajectories} == {7}
    monkeypatch.setenv("PERFGAME_SEED", "x")
    with pytest.raises(GameFileError):
        cfg.effective_seeds()


def test_experiment_nash_reference(tmp_path):
    cfg = _config(tmp_path, reference="nash", seeds=[0],
                  solvers=[{"algorithm": "sgm", "step_size": 0.01, "iterations": 3000}])
    res = run_experiment(ExperimentConfig.load(cfg))
    assert np.allclose(res.report["reference"]["point"], solve_nash(scalar_duopoly()).point)


@pytest.mark.parametrize("bad", [
    {"seeds": []},
    {"colour": 1},
    {"solvers": [{"algorithm": "rsgm"}, {"algorithm": "rsgm"}]},
    {"solvers": [{"algorithm": "rsgm", "bogus": 1}]},
    {"game": "missing.json"},
])
def test_experiment_config_errors(tmp_path, bad):
    with pytest.raises(GameFileError):
        run_experiment(ExperimentConfig.load(_config(tmp_path, **bad)))


def test_svg_is_reproducible(tmp_path):
    pytest.importorskip("matplotlib")
    a = emit_artifacts(_runs(seeds=(0, 1)), {}, tmp_path / "a", svg=True)
    b = emit_artifacts(_runs(seeds=(0, 1)), {}, tmp_path / "b", svg=True)
    assert a[-1].name == "error_curves.svg"
    assert a[-1].read_bytes() == b[-1].read_bytes()
