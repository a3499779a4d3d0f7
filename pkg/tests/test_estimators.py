import numpy as np
import pytest
from sklearn.base import clone

from albias import BayesianPolynomialRegression, GridBinaryLearner, ParticleLogisticClassifier
from albias.binary import generate_gamble_space
from albias.core import ModelSpec, TargetDistribution, TrueModel
from albias.design import select_linear
from albias.linreg import GaussianPosterior, conjugate_update, poly_features
from albias.metrics import make_eval_set, risk_nll

GRID = np.linspace(0, 100, 1001)


def test_regression_params_and_clone():
    est = BayesianPolynomialRegression(degree=2, noise_std=10.0, design_space=GRID)
    params = est.get_params()
    assert params["degree"] == 2 and params["noise_std"] == 10.0
    twin = clone(est)
    assert twin.get_params()["degree"] == 2 and not hasattr(twin, "posterior_")
    est.set_params(degree=1)
    assert est.degree == 1


def test_regression_fit_matches_conjugate_loop():
    rng = np.random.default_rng(0)
    X = rng.uniform(0, 100, 30)
    y = 3 + 0.5 * X + 10 * rng.standard_normal(30)
    est = BayesianPolynomialRegression(degree=1, noise_std=10.0).fit(X, y)
    post = GaussianPosterior.prior(1)
    for xi, yi in zip(X, y):
        post = conjugate_update(post, 10.0, poly_features(1, xi), yi)
    np.testing.assert_allclose(est.coef_, post.M, rtol=1e-12)
    mean, std = est.predict(np.array([0.0, 50.0]), return_std=True)
    np.testing.assert_allclose(mean, poly_features(1, np.array([0.0, 50.0])) @ post.M)
    assert np.all(std > 10.0)
    assert est.n_observations_ == 30


def test_partial_fit_equals_fit():
    rng = np.random.default_rng(1)
    X, y = rng.uniform(0, 100, 20), rng.normal(size=20)
    full = BayesianPolynomialRegression(degree=2).fit(X, y)
    inc = BayesianPolynomialRegression(degree=2)
    for i in range(0, 20, 5):
        inc.partial_fit(X[i:i + 5], y[i:i + 5])
    np.testing.assert_allclose(inc.coef_, full.coef_, rtol=1e-10)
    # fit restarts from the prior
    full.fit(X[:3], y[:3])
    assert full.n_observations_ == 3


def test_regression_query_is_d_optimal():
    est = BayesianPolynomialRegression(degree=1, design_space=GRID)
    idx, x = est.query()
    assert x == 100.0 and GRID[idx] == 100.0
    est.partial_fit([100.0, 100.0, 50.0], [50.0, 40.0, 7.0])
    assert est.query()[1] == select_linear(est.posterior_, 100.0, 1, GRID)


def test_input_validation():
    est = BayesianPolynomialRegression()
    with pytest.raises(ValueError):
        est.fit([1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        est.fit([1.0], [np.nan])
    clf = GridBinaryLearner(design_space=generate_gamble_space(0).gambles)
    with pytest.raises(ValueError):
        clf.fit(generate_gamble_space(0).gambles[:1], [0.5])
    with pytest.raises(ValueError):
        BayesianPolynomialRegression().query()


def test_grid_learner_tables_match_generic_path():
    gambles = generate_gamble_space(3).gambles
    clf = GridBinaryLearner(family="eut", epsilon=0.1, design_space=gambles)
    clf.partial_fit(gambles[:10], [1, 0, 1, 1, 0, 0, 1, 0, 1, 1])
    pbar, qbar, ent = clf.mixture_stats()
    pbar2, qbar2, ent2 = clf.mixture_stats(gambles.copy())  # explicit designs: kernel path
    np.testing.assert_allclose(pbar, pbar2, atol=1e-12)
    np.testing.assert_allclose(ent, ent2, atol=1e-7)
    proba = clf.predict_proba()
    np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-12)
    assert set(clf.predict()) <= {0, 1}
    idx, g = clf.query()
    assert np.array_equal(g, gambles[idx])


def test_grid_learner_risk_matches_metric():
    gambles = generate_gamble_space(3).gambles
    target = TargetDistribution.discrete(gambles)
    truth = TrueModel(ModelSpec("cpt"), [0.5, 0.6, 1.5])
    ev = make_eval_set(truth, target, None)
    clf = GridBinaryLearner(design_space=gambles).fit(gambles[:5], [1, 1, 0, 1, 0])
    assert clf.expected_cross_entropy(ev.true_probs) == pytest.approx(
        risk_nll(clf.posterior_, clf.spec_, ev), rel=1e-9)
    assert clf.risk(ev) == pytest.approx(risk_nll(clf.posterior_, clf.spec_, ev))


def test_particle_classifier_is_seeded_and_learns():
    X = np.linspace(0, 100, 21)
    y = (X > 50).astype(int)
    a = ParticleLogisticClassifier(degree=1, n_particles=2000, random_state=5,
                                   design_space=GRID).fit(X, y)
    b = clone(a).fit(X, y)
    assert np.array_equal(a.posterior_.samples, b.posterior_.samples)
    p = a.predict_proba(np.array([10.0, 90.0]))[:, 1]
    assert p[0] < 0.5 < p[1]
    assert np.all(a.expected_information_gain() >= 0)
