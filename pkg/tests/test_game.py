import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from perfgame.distributions import Deterministic
from perfgame.errors import AssumptionViolation
from perfgame.game import (
    GameDims,
    GameInstance,
    compute_constants,
    h_map,
    performative_grad_map,
    rho_formula,
    sample_distribution,
    static_grad_map,
)
from perfgame.instances import (
    adaptive_benchmark_instance,
    random_affine_instance,
    random_strategic_instance,
    revenue_game,
    scalar_duopoly,
    step_decay_instance,
)
from perfgame.losses import QuadraticCustom, Revenue
from perfgame.sets import WholeSpace
from perfgame.solvers.steps import sampled_directions
from reference import ref_D, ref_expected_losses, ref_G


def _static_revenue(mu=(0.0, 0.0)):
    return revenue_game([[[0.0]], [[0.0]]], [[[0.0]], [[0.0]]], 1.0, [[mu[0]], [mu[1]]])


# ---------------------------------------------------------------- dims


def test_dims_invariants():
    dims = GameDims((2, 1, 3), (1, 4, 2))
    assert dims.n == 3 and dims.d == 6
    x = np.arange(6.0)
    for i in range(3):
        assert dims.block(x, i).size == dims.d_i[i]
        assert np.array_equal(dims.assemble(i, dims.block(x, i), dims.others(x, i)), x)
    assert np.array_equal(np.concatenate([dims.block(x, i) for i in range(3)]), x)
    with pytest.raises(ValueError):
        GameDims((0,), (1,))
    with pytest.raises(ValueError):
        dims.check(np.zeros(5))


def test_shape_mismatch_is_rejected():
    with pytest.raises(ValueError):
        GameInstance(GameDims((1,), (2,)), [WholeSpace(1)], [Deterministic([0.0, 0.0])],
                     [[[1.0]]], [np.zeros((2, 0))], [Revenue(1.0)])


# ---------------------------------------------------------------- sampling


def test_zero_effect_sample_is_base_mean(rng):
    g = revenue_game([np.zeros((2, 2))], [np.zeros((2, 0))], 1.0, [[1.0, 1.0]])
    assert np.array_equal(sample_distribution(g, np.array([5.0, -3.0]), 0, rng), [1.0, 1.0])


def test_sample_mean_follows_location_shift(rng):
    g = scalar_duopoly(noise_std=1.0)
    z = sample_distribution(g, np.array([1.0, 1.0]), 0, rng, size=100_000)[:, 0]
    se = z.std(ddof=1) / np.sqrt(z.size)
    assert abs(z.mean() - 0.5) <= 3 * se


def test_sampling_is_seeded():
    g = scalar_duopoly(noise_std=1.0)
    a = sample_distribution(g, np.zeros(2), 1, np.random.default_rng(3), size=5)
    b = sample_distribution(g, np.zeros(2), 1, np.random.default_rng(3), size=5)
    assert np.array_equal(a, b)


# ------------------------------------------------------------ gradient maps


def test_static_map_without_effects_is_identity():
    g = _static_revenue()
    x, y = np.array([0.7, -1.2]), np.array([3.0, 9.0])
    assert np.allclose(static_grad_map(g, y, x), x)


@pytest.mark.parametrize("y, expected", [((1.0, 1.0), 0.5), ((0.0, 0.0), 0.0)])
def test_static_map_scalar_examples(y, expected):
    g = scalar_duopoly()
    out = static_grad_map(g, np.array(y), np.array([0.5, 0.5]))
    assert np.allclose(out, expected, atol=1e-15)


def test_performative_map_examples():
    g = scalar_duopoly()
    assert np.allclose(performative_grad_map(g, np.zeros(2)), -1.0)
    assert np.allclose(performative_grad_map(g, np.full(2, 2 / 7)), 0.0, atol=1e-15)
    h = _static_revenue((0.3, -0.2))
    x = np.array([1.0, 2.0])
    assert np.allclose(performative_grad_map(h, x), static_grad_map(h, x, x))


def _instances():
    rng = np.random.default_rng(77)
    out = [scalar_duopoly(noise_std=0.5), step_decay_instance(), adaptive_benchmark_instance()]
    out += [random_affine_instance(rng, constrained=bool(k % 2)) for k in range(6)]
    out += [random_strategic_instance(rng, n=3, d=2, m=4) for _ in range(2)]
    return out


INSTANCES = _instances()


@pytest.mark.parametrize("game", INSTANCES, ids=repr)
def test_maps_match_sample_level_reference(game):
    rng = np.random.default_rng(0)
    for _ in range(5):
        x, y = rng.standard_normal(game.dims.d), rng.standard_normal(game.dims.d)
        assert np.allclose(game.G(y, x), ref_G(game, y, x), rtol=1e-10, atol=1e-10)
        assert np.allclose(game.D(x), ref_D(game, x), rtol=1e-10, atol=1e-10)
        assert np.allclose(game.expected_losses(x), ref_expected_losses(game, x), rtol=1e-10, atol=1e-9)


@pytest.mark.parametrize("game", INSTANCES, ids=repr)
def test_decomposition_D_equals_G_plus_H(game):
    rng = np.random.default_rng(1)
    X = rng.standard_normal((20, game.dims.d))
    for x in X:
        assert np.allclose(performative_grad_map(game, x), static_grad_map(game, x, x) + h_map(game, x, x),
                           rtol=0, atol=1e-12)


@pytest.mark.parametrize("game", INSTANCES[:5], ids=repr)
def test_static_map_monte_carlo(game):
    rng = np.random.default_rng(2)
    x, y = rng.standard_normal(game.dims.d), rng.standard_normal(game.dims.d)
    N = 100_000
    g = np.empty((N, game.dims.d))
    for i, loss in enumerate(game.losses):
        z, aux = game.sample(y, i, rng, N)
        sl = game.dims.slices[i]
        g[:, sl] = loss.grad_x(x[sl], x[game.dims.other_index(i)], z, aux)
    se = g.std(axis=0, ddof=1) / np.sqrt(N)
    assert np.all(np.abs(g.mean(0) - game.G(y, x)) <= 3 * se + 1e-12)


@pytest.mark.parametrize("game", INSTANCES, ids=repr)
def test_lipschitz_deviation_of_static_map(game):
    c = compute_constants(game)
    bound = np.sqrt(sum((b * g) ** 2 for b, g in zip(c.beta, c.gamma)))
    rng = np.random.default_rng(3)
    X, Y, Y2 = (rng.standard_normal((10_000, game.dims.d)) * 3 for _ in range(3))
    lhs = np.linalg.norm(game.G(Y, X) - game.G(Y2, X), axis=1)
    assert np.all(lhs <= bound * np.linalg.norm(Y - Y2, axis=1) * (1 + 1e-12) + 1e-12)


def test_expected_gradient_unbiased_at_a_point(rng):
    g = scalar_duopoly(noise_std=0.5)
    x = np.array([0.5, 0.5])
    draws = g.draw_base(rng, 100_000)
    d, _ = sampled_directions(g, np.broadcast_to(x, (100_000, 2)), draws)
    se = d.std(0, ddof=1) / np.sqrt(d.shape[0])
    assert np.all(np.abs(d.mean(0) - 0.25) <= 3 * se)


# ---------------------------------------------------------------- constants


def test_rho_formula():
    assert rho_formula(1.0, (1.0, 1.0), (0.3, 0.4)) == pytest.approx(0.5, abs=1e-15)


def test_scalar_constants():
    c = compute_constants(scalar_duopoly())
    assert c.alpha == pytest.approx(2.0, abs=1e-12)
    assert c.beta == (1.0, 1.0)
    assert np.allclose(c.gamma, np.sqrt(1.25), atol=1e-12)
    assert c.rho == pytest.approx(np.sqrt(2 * (np.sqrt(1.25) / 2) ** 2), abs=1e-12)
    assert c.rho == pytest.approx(0.7906, abs=1e-4)
    assert c.L == pytest.approx(2.0, abs=1e-12)


def test_step_decay_instance_constants():
    c = compute_constants(step_decay_instance())
    assert (c.alpha, c.L, c.sigma) == pytest.approx((1.0, 2.0, 1.0), abs=1e-12)
    assert c.rho == pytest.approx(0.25, abs=1e-12)


def test_zero_effect_constants():
    c = compute_constants(_static_revenue())
    assert c.gamma == (0.0, 0.0) and c.rho == 0.0


@pytest.mark.parametrize("game", INSTANCES, ids=repr)
def test_constant_invariants(game):
    c = compute_constants(game)
    assert c.rho == pytest.approx(c.rho_from_parts(), rel=1e-15)
    for gi, Ab in zip(c.gamma, game.A_bar):
        assert gi == pytest.approx(np.linalg.norm(Ab, 2), rel=1e-14)
    assert c.alpha > 0 and c.L >= c.alpha and c.sigma >= 0 and c.delta_lip >= 0
    if game.separable:
        assert c.rho_separable is not None and c.rho_separable >= 0


def test_sigma_bounds_gradient_variance_on_constant_variance_instance(rng):
    g = step_decay_instance()
    c = compute_constants(g)
    x = rng.standard_normal((50_000, 2))
    d, _ = sampled_directions(g, x, g.draw_base(rng, 50_000))
    var = np.mean(np.sum((d - g.G(x, x)) ** 2, axis=1))
    assert var <= c.sigma**2 * 1.02
    assert var == pytest.approx(c.sigma**2, rel=0.02)


def test_non_monotone_static_game_raises():
    g = revenue_game([[[-1.0]]], [np.zeros((1, 0))], 0.0, [[1.0]])
    with pytest.raises(AssumptionViolation) as e:
        compute_constants(g)
    assert "monoton" in e.value.assumption


def test_separable_flag():
    g = scalar_duopoly()
    assert g.separable
    coupled = QuadraticCustom([[1.0, 0.3]], [[1.0]], [[0.0]], [0.0], [0.0])
    h = GameInstance(GameDims((1, 1), (1, 1)), [WholeSpace(1)] * 2, [Deterministic([0.0])] * 2,
                     [[[0.1]], [[0.1]]], [[[0.0]], [[0.0]]], [coupled, Revenue(1.0)])
    assert not h.separable
    with pytest.raises(ValueError):
        GameInstance(GameDims((1, 1), (1, 1)), [WholeSpace(1)] * 2, [Deterministic([0.0])] * 2,
                     [[[0.1]], [[0.1]]], [[[0.0]], [[0.0]]], [coupled, Revenue(1.0)], separable=True)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_separable_gradients_ignore_rival_decisions(x1, xo, xo2, z):
    g = scalar_duopoly()
    loss = g.losses[0]
    a = loss.grad_x(np.array([x1]), np.array([xo]), np.array([z]))
    b = loss.grad_x(np.array([x1]), np.array([xo2]), np.array([z]))
    assert np.array_equal(a, b)


def test_social_cost_is_sum_of_expected_losses():
    g = scalar_duopoly(noise_std=0.5)
    x = np.array([0.2, -0.4])
    assert g.social_cost(x) == pytest.approx(float(np.sum(ref_expected_losses(g, x))), abs=1e-14)
    Q, q, c0 = g.social_quadratic()
    assert 0.5 * x @ Q @ x + q @ x + c0 == pytest.approx(g.social_cost(x), abs=1e-14)


def test_expected_loss_picks_up_data_variance():
    # revenue has no z-curvature, so noise leaves expected losses alone
    a, b = scalar_duopoly(noise_std=0.0), scalar_duopoly(noise_std=0.7)
    x = np.array([0.1, 0.9])
    assert a.social_cost(x) == pytest.approx(b.social_cost(x), abs=1e-15)
    # squared-error loss gains 1/2 * m * s^2 per player from label noise
    quiet = random_strategic_instance(np.random.default_rng(4), n=2, d=2, m=3, noise_std=0.0)
    bases = [type(bs)(bs.thetas, bs.offsets, 0.4) for bs in quiet.bases]
    noisy = GameInstance(quiet.dims, quiet.feasible, bases, quiet.A_own, quiet.A_other, quiet.losses)
    diff = noisy.expected_losses(x.repeat(2)) - quiet.expected_losses(x.repeat(2))
    assert np.allclose(diff, 0.5 * 3 * 0.4**2, atol=1e-12)
