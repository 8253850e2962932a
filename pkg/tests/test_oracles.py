import numpy as np
import pytest

from perfgame.distributions import FeatureBase
from perfgame.errors import NoCertifiedSolution
from perfgame.game import GameDims, GameInstance, compute_constants
from perfgame.instances import (
    random_affine_instance,
    random_strategic_instance,
    revenue_game,
    scalar_duopoly,
    scalar_monopoly,
)
from perfgame.losses import QuadraticCustom, StrategicPrediction
from perfgame.oracles import (
    certify_monotone,
    projected_residual,
    solve,
    solve_nash,
    solve_perf_stable,
    solve_social_opt,
    spectral_gap,
)
from perfgame.sets import Box, WholeSpace
from perfgame.solvers.steps import retrain_step
from reference import projected_fixed_point, ref_D, ref_G, ref_social, scalar_duopoly_symbolic, solve_affine_root

SYM = scalar_duopoly_symbolic()


def _f(pair):
    return np.array([float(v) for v in pair])


def test_scalar_duopoly_matches_symbolic_derivation():
    g = scalar_duopoly()
    ne, ps, so = solve_nash(g), solve_perf_stable(g), solve_social_opt(g)
    assert np.allclose(ne.point, _f(SYM["ne"]), atol=1e-10) and np.allclose(ne.point, 2 / 7, atol=1e-10)
    assert np.allclose(ps.point, _f(SYM["ps"]), atol=1e-10) and np.allclose(ps.point, 0.4, atol=1e-10)
    assert np.allclose(so.point, _f(SYM["so"]), atol=1e-10) and np.allclose(so.point, 1 / 3, atol=1e-10)
    assert g.social_cost(so.point) == pytest.approx(float(SYM["S_so"]), abs=1e-12)
    assert g.social_cost(so.point) == pytest.approx(-1 / 3, abs=1e-12)
    assert g.social_cost(ne.point) == pytest.approx(-16 / 49, abs=1e-12)
    for rep in (ne, ps, so):
        assert rep.residual <= 1e-10 and rep.solver == "LinearSolve"
    assert (ne.kind, ps.kind, so.kind) == ("Nash", "PerfStable", "SocialOpt")


def test_monopoly_examples():
    g = scalar_monopoly()
    assert solve_nash(g).point[0] == pytest.approx(0.25, abs=1e-12)
    assert solve_perf_stable(g).point[0] == pytest.approx(1 / 3, abs=1e-12)


def test_zero_effect_collapses_all_concepts():
    g = revenue_game([[[0.0]], [[0.0]]], [[[0.0]], [[0.0]]], 1.0, [[0.7], [-1.3]])
    ne, ps, so = (solve(g, k).point for k in ("nash", "perf_stable", "social_opt"))
    assert np.allclose(ne, [0.7, -1.3], atol=1e-12)
    assert np.allclose(ps, ne, atol=1e-12) and np.allclose(so, ne, atol=1e-12)


def test_singular_system_raises_instead_of_guessing():
    with pytest.raises(NoCertifiedSolution):
        solve_nash(scalar_monopoly(a=1.0, lam=2.0))  # lam - 2a = 0
    with pytest.raises(NoCertifiedSolution):
        # social cost Hessian 4 - 2*... made indefinite by a strong cross effect
        solve_social_opt(scalar_duopoly(b=5.0))


def test_unknown_kind():
    with pytest.raises(ValueError):
        solve(scalar_duopoly(), "pareto")


RNG = np.random.default_rng(2024)
RANDOM = [random_affine_instance(RNG, constrained=bool(k % 2)) for k in range(12)]


@pytest.mark.parametrize("game", RANDOM, ids=lambda g: f"{g!r}-{'box' if not g.unconstrained else 'free'}")
def test_oracles_against_independent_route(game):
    d = game.dims.d
    c = compute_constants(game)
    ps = solve_perf_stable(game)
    if game.unconstrained:
        ps_ref = solve_affine_root(lambda x: ref_G(game, x, x), d)
        assert np.allclose(ps.point, ps_ref, atol=1e-8)
    else:
        F = lambda x: ref_G(game, x, x)  # noqa: E731
        assert projected_residual(game.feasible, ps.point, F(ps.point)) <= 1e-9
    # one exact retraining step leaves x^ps in place
    assert np.allclose(retrain_step(game, ps.point, inner_tol=1e-14, constants=c), ps.point, atol=1e-9)
    try:
        ne = solve_nash(game)
    except NoCertifiedSolution:
        return
    if game.unconstrained:
        assert np.allclose(ne.point, solve_affine_root(lambda x: ref_D(game, x), d), atol=1e-8)
    else:
        M = np.linalg.norm(game.D_jac, 2)
        mu = np.linalg.eigvalsh(0.5 * (game.D_jac + game.D_jac.T))[0]
        if mu > 0:
            x_ref = projected_fixed_point(lambda x: ref_D(game, x), game.project, np.zeros(d), mu / M**2)
            assert np.allclose(ne.point, x_ref, atol=1e-8)
    assert projected_residual(game.feasible, ne.point, game.D(ne.point)) <= 1e-9


@pytest.mark.parametrize("game", RANDOM[::2], ids=repr)
def test_linear_and_iterative_agree(game):
    a = solve_perf_stable(game, method="linear").point
    b = solve_perf_stable(game, method="iterative")
    assert b.solver == "FixedPointIteration"
    assert np.allclose(a, b.point, atol=1e-8)


@pytest.mark.parametrize("game", RANDOM, ids=repr)
def test_social_opt_minimizes_reference_social_cost(game):
    try:
        so = solve_social_opt(game).point
    except NoCertifiedSolution:
        return
    rng = np.random.default_rng(5)
    base = ref_social(game, so)
    for _ in range(30):
        x = game.project(so + 0.1 * rng.standard_normal(game.dims.d))
        assert ref_social(game, x) >= base - 1e-10


def test_concept_separation_on_scalar_instance():
    g = scalar_duopoly()
    ps, ne = solve_perf_stable(g).point, solve_nash(g).point
    assert np.linalg.norm(g.G(ps, ps)) <= 1e-9 and np.linalg.norm(g.D(ps)) > 0.1
    assert np.linalg.norm(g.D(ne)) <= 1e-9
    P, Q = g.G(ne, ne), g.H(ne, ne)
    assert np.allclose(P, -Q, atol=1e-9) and np.linalg.norm(P) > 0.1


def test_constrained_oracle_uses_projection():
    g = scalar_duopoly(feasible=[Box([-1.0], [0.3]), Box([-1.0], [0.3])])
    ps = solve_perf_stable(g)
    assert ps.solver == "FixedPointIteration"
    assert np.allclose(ps.point, 0.3, atol=1e-12)  # unconstrained 0.4 is cut at the bound
    ne = solve_nash(g)
    assert np.allclose(ne.point, 2 / 7, atol=1e-10)  # interior, unaffected


# ------------------------------------------------------------- certificates


def _strategic_identity_game():
    d = 2
    rng = np.random.default_rng(0)
    bases = [FeatureBase(rng.standard_normal((5, d, d)), rng.standard_normal((5, d)), 0.1) for _ in range(2)]
    return GameInstance(GameDims((d, d), (d, d)), [WholeSpace(d)] * 2, bases,
                        [np.eye(d), np.eye(d)], [0.5 * np.eye(d), 0.5 * np.eye(d)],
                        [StrategicPrediction(), StrategicPrediction()])


def test_spectral_gap_identity_example():
    g = _strategic_identity_game()
    assert spectral_gap(g) == pytest.approx(0.5, abs=1e-12)
    cert = certify_monotone(g)
    assert cert.spectral_gap == pytest.approx(0.5, abs=1e-12)
    assert cert.h_monotone == "SufficientSpectralCondition"


def test_revenue_certificate_example():
    g = revenue_game([[[-0.25]], [[-0.25]]], [[[0.25]], [[0.25]]], 2.0, [[1.0], [1.0]])
    cert = certify_monotone(g)
    assert cert.rho == pytest.approx(0.25, abs=1e-12)
    assert cert.h_monotone == "ConstantMap" and cert.passed
    assert cert.modulus == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.eigvalsh(0.5 * (g.D_jac + g.D_jac.T))[0] == pytest.approx(2.25, abs=1e-12)


def test_certificate_fails_when_rho_too_large():
    cert = certify_monotone(scalar_duopoly())
    assert cert.rho == pytest.approx(0.7906, abs=1e-4)
    assert not cert.rho_ok and not cert.passed and cert.modulus is None


def test_custom_losses_get_unknown():
    g = RANDOM[0]
    assert certify_monotone(g).h_monotone in ("Unknown", "ConstantMap")
    xx = [[1.0, 0.0]]
    coupled = QuadraticCustom(xx, [[1.0]], [[1.0]], [0.0], [0.0])
    h = revenue_game([[[0.1]], [[0.1]]], [[[0.1]], [[0.1]]], 1.0, [[0.0], [0.0]])
    h2 = GameInstance(h.dims, h.feasible, h.bases, h.A_own, h.A_other, [coupled, h.losses[1]])
    assert certify_monotone(h2).h_monotone == "Unknown"


def test_certificate_soundness_small_sample():
    rng = np.random.default_rng(9)
    checked = 0
    for _ in range(40):
        g = random_strategic_instance(rng, n=int(rng.integers(2, 4)), d=2, m=3, n_features=10)
        cert = certify_monotone(g)
        if not cert.passed:
            continue
        checked += 1
        assert cert.modulus > 0
        X, Y = rng.standard_normal((2000, g.dims.d)), rng.standard_normal((2000, g.dims.d))
        gap = np.sum((g.D(X) - g.D(Y)) * (X - Y), axis=1)
        assert np.all(gap >= cert.modulus * np.sum((X - Y) ** 2, axis=1) - 1e-9)
    assert checked >= 30


def test_report_serializes():
    d = solve_nash(scalar_duopoly()).to_dict()
    assert set(d) == {"kind", "point", "residual", "solver", "iterations"}
    c = certify_monotone(scalar_duopoly()).to_dict()
    assert {"rho", "rho_ok", "h_monotone", "modulus", "spectral_gap"} <= set(c)
