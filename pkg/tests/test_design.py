import math

import numpy as np
import pytest
from scipy import stats

import oracles
from albias.binary import generate_gamble_space
from albias.core import ModelSpec, TargetDistribution
from albias.design import (DesignPolicy, SelectionState, binary_mixture_stats, choose_design,
                           next_design, sample_random, sample_random_index,
                           select_discrete_eig, select_linear)
from albias.exceptions import ReplayExhaustedError
from albias.linreg import GaussianPosterior, conjugate_update, eig_linear, poly_features
from albias.posteriors import GridPosterior, ParticlePosterior

GRID = np.linspace(0, 100, 1001)
UNIT = TargetDistribution.continuous(0.0, 100.0)


def _state(post, spec, candidates=GRID, target=UNIT, seed=0):
    return SelectionState(post, spec, candidates, target, np.random.default_rng(seed))


@pytest.mark.trivial
def test_select_linear_prior_picks_far_end():
    post = GaussianPosterior([0.0, 0.0], np.diag([100.0, 10.0]))
    assert select_linear(post, 100.0, 1, GRID) == 100.0


@pytest.mark.trivial
def test_select_linear_degenerate_tie_goes_to_minimum():
    post = GaussianPosterior([0.0, 0.0], np.zeros((2, 2)))
    assert select_linear(post, 100.0, 1, GRID[::-1]) == 0.0


@pytest.mark.derived
def test_linear_design_sequence_ignores_outcomes():
    sequences = []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        post = GaussianPosterior.prior(2)
        seq = []
        for _ in range(100):
            x = select_linear(post, 100.0, 2, GRID)
            seq.append(x)
            post = conjugate_update(post, 100.0, poly_features(2, x), 1e3 * rng.standard_normal())
        sequences.append(seq)
    assert all(s == sequences[0] for s in sequences)


def test_linear_argmax_invariant_to_sigma():
    post = GaussianPosterior.prior(2)
    for x in (3.0, 50.0, 97.0):
        post = conjugate_update(post, 100.0, poly_features(2, x), 0.0)
    picks = {GRID[int(np.argmax(eig_linear(post, s, poly_features(2, GRID))))]
             for s in (1.0, 100.0, 1000.0)}
    assert picks == {select_linear(post, 100.0, 2, GRID)}


@pytest.mark.trivial
def test_discrete_eig_point_mass():
    spec = ModelSpec("logistic-poly", degree=1)
    x, eig = select_discrete_eig(GridPosterior.point_mass([0.2, 0.01]), spec, GRID)
    assert x == GRID[0]
    np.testing.assert_allclose(eig, 0.0, atol=1e-8)


@pytest.mark.trivial
def test_discrete_eig_one_bit():
    spec = ModelSpec("logistic-poly", degree=0)
    post = GridPosterior.uniform(np.array([[-800.0], [800.0]]))
    _, eig = select_discrete_eig(post, spec, np.array([0.0, 1.0]))
    np.testing.assert_allclose(eig, math.log(2), atol=1e-8)


@pytest.mark.derived
@pytest.mark.parametrize("family", ["logistic-poly", "eut"])
def test_discrete_eig_matches_nested_monte_carlo(family):
    rng = np.random.default_rng(21)
    if family == "eut":
        spec = ModelSpec("eut", epsilon=0.3)
        cands = generate_gamble_space(2).gambles
    else:
        spec = ModelSpec("logistic-poly", degree=1, epsilon=0.1)
        cands = GRID
    for trial in range(10):
        n = int(rng.integers(2, 40))
        if family == "eut":
            pts = rng.uniform(0, 1, size=(n, 1))
        else:
            pts = rng.normal(size=(n, 2)) * [3.0, 0.1]
        post = GridPosterior(pts, rng.normal(size=n))
        _, eig = select_discrete_eig(post, spec, cands)
        j = int(rng.integers(len(cands)))
        probs = spec.prob_table(pts, cands[j:j + 1])[:, 0]
        est, se = oracles.nested_mc_mi_binary(probs, post.weights, 100_000, seed=trial)
        assert abs(eig[j] - est) < 3 * se + 1e-6


def test_eig_nonnegative_and_kernel_paths_agree():
    spec = ModelSpec("logistic-poly", degree=2, epsilon=0.01)
    post = ParticlePosterior.from_prior(spec, n_particles=500, seed=2)
    pbar, qbar, ent = binary_mixture_stats(post, spec, GRID)
    _, eig = select_discrete_eig(post, spec, GRID)
    assert np.all(eig >= 0)
    np.testing.assert_allclose(pbar + qbar, 1.0, atol=1e-12)
    # reference straight from the probability table
    P = spec.prob_table(post.samples, GRID)
    w = post.weights
    np.testing.assert_allclose(pbar, w @ P, rtol=1e-10, atol=1e-14)
    H = -(P * np.log(np.maximum(P, 1e-300)) + (1 - P) * np.log(np.maximum(1 - P, 1e-300)))
    np.testing.assert_allclose(ent, w @ H, atol=1e-7)


@pytest.mark.trivial
def test_sample_random_support_and_determinism():
    draws = [sample_random(UNIT, s) for s in range(500)]
    assert all(0.0 <= d <= 100.0 for d in draws)
    assert sample_random(UNIT, 42) == sample_random(UNIT, 42)


@pytest.mark.derived
def test_sample_random_discrete_is_uniform():
    target = TargetDistribution.discrete(generate_gamble_space(0).gambles)
    rng = np.random.default_rng(123)
    counts = np.bincount([sample_random_index(target, rng) for _ in range(100_000)], minlength=200)
    p = 1 / 200
    sd = math.sqrt(100_000 * p * (1 - p))
    assert np.all(np.abs(counts - 100_000 * p) < 3 * sd)
    assert stats.chisquare(counts).pvalue > 1e-3


@pytest.mark.trivial
def test_replay_and_dispatch():
    spec = ModelSpec("gaussian-linear", degree=1, sigma=100.0)
    post = GaussianPosterior.prior(1)
    state = _state(post, spec)
    assert next_design(DesignPolicy.replay([5.0, 7.0, 9.0]), state, 1) == 7.0
    with pytest.raises(ReplayExhaustedError):
        next_design(DesignPolicy.replay([5.0]), state, 1)
    assert next_design(DesignPolicy.adaptive(), state, 0) == select_linear(post, 100.0, 1, GRID)
    expected = sample_random(UNIT, np.random.default_rng(3))
    assert next_design(DesignPolicy.random(), _state(post, spec, seed=3), 0) == expected


def test_replay_reproduces_adaptive_run():
    spec = ModelSpec("eut")
    gambles = generate_gamble_space(0).gambles
    target = TargetDistribution.discrete(gambles)
    rng = np.random.default_rng(0)
    post = GridPosterior.uniform(np.linspace(0, 1, 101))
    recorded = []
    for t in range(15):
        x, i = choose_design(DesignPolicy.adaptive(), _state(post, spec, gambles, target), t)
        recorded.append(x)
        post = post.update(spec, x, int(rng.integers(2)))
    replay = DesignPolicy.replay(recorded)
    for t, x in enumerate(recorded):
        got, idx = choose_design(replay, _state(post, spec, gambles, target), t)
        assert np.array_equal(got, x) and np.array_equal(gambles[idx], x)


def test_policy_validation():
    with pytest.raises(ValueError):
        DesignPolicy("greedy")
    with pytest.raises(ValueError):
        select_linear(GaussianPosterior.prior(1), 1.0, 1, [])
